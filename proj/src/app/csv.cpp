#include "cda/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "cda/errors.hpp"

namespace cda {

namespace {

std::vector<std::string> split_fields(std::string_view line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw SchemaError(where + ": unterminated quoted field");
  out.push_back(std::move(cur));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && (s.empty() || s.front() != '#')) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '\n' || c == '\r') throw SchemaError("field contains a line break: " + s);
    out += c;
    if (c == '"') out += '"';
  }
  return out + "\"";
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::string CsvTable::where(const CsvRow& row) const { return path.string() + ":" + std::to_string(row.line); }

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  CsvTable t;
  t.path = path;
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = path.string() + ":" + std::to_string(n);
    if (!have_header) {
      if (line.starts_with("#")) {
        const auto body = std::string_view(line).substr(1);
        const auto start = body.find_first_not_of(' ');
        const auto eq = body.find('=');
        if (start != std::string_view::npos && eq != std::string_view::npos && eq > start)
          t.meta.emplace_back(std::string(body.substr(start, eq - start)), std::string(body.substr(eq + 1)));
        continue;
      }
      if (blank(line)) continue;
      if (n == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      t.header = split_fields(line, where);
      if (t.header != expected)
        throw SchemaError(where + ": header mismatch, expected '" + join(expected) + "', got '" + line + "'");
      have_header = true;
      continue;
    }
    if (blank(line)) {
      ++t.blank_lines;
      continue;
    }
    CsvRow row{n, split_fields(line, where)};
    if (row.fields.size() != expected.size())
      throw SchemaError(where + ": expected " + std::to_string(expected.size()) + " fields, got " +
                        std::to_string(row.fields.size()));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw SchemaError(path.string() + ": missing header row");
  return t;
}

double field_double(const CsvTable& t, const CsvRow& row, std::size_t col) {
  const auto& s = row.fields.at(col);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw SchemaError(t.where(row) + ": column '" + t.header.at(col) + "' expects a number, got '" + s + "'");
  return v;
}

long long field_int(const CsvTable& t, const CsvRow& row, std::size_t col) {
  const auto& s = row.fields.at(col);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError(t.where(row) + ": column '" + t.header.at(col) + "' expects an integer, got '" + s + "'");
  return v;
}

std::optional<double> field_optional_double(const CsvTable& t, const CsvRow& row, std::size_t col) {
  if (row.fields.at(col).empty()) return std::nullopt;
  return field_double(t, row, col);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

CsvWriter::CsvWriter(const FileMeta& meta, const std::vector<std::string>& header) : width_(header.size()) {
  text_ += "# schema_version=" + std::to_string(meta.schema_version) + "\n";
  text_ += "# config_hash=" + meta.config_hash + "\n";
  text_ += "# seed=" + std::to_string(meta.seed) + "\n";
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw SchemaError("row width " + std::to_string(fields.size()) + " != header width");
  for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + quote_if_needed(fields[i]);
  text_ += '\n';
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text(path, text_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cda
