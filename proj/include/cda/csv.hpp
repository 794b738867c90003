#pragma once
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cda {

inline constexpr int kSchemaVersion = 1;

// Provenance lines written as "# key=value" above the header row.
struct FileMeta {
  int schema_version = kSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line in the file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::filesystem::path path;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  std::size_t blank_lines = 0;

  // "file:line" for messages.
  std::string where(const CsvRow& row) const;
};

// Reads a comma-separated file with optional leading "# key=value" lines.
// The header must equal `expected` exactly; every row must have as many
// fields. Throws SchemaError naming the file and line.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected);

// Typed field access; SchemaError names file, line and column on failure.
double field_double(const CsvTable& t, const CsvRow& row, std::size_t col);
long long field_int(const CsvTable& t, const CsvRow& row, std::size_t col);
std::optional<double> field_optional_double(const CsvTable& t, const CsvRow& row, std::size_t col);

// Shortest representation that reads back to the same double.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

class CsvWriter {
 public:
  CsvWriter(const FileMeta& meta, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  const std::string& text() const noexcept { return text_; }
  // Writes the text, creating parent directories.
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string text_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cda
