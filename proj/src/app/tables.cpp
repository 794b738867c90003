#include "cda/tables.hpp"

#include <algorithm>
#include <map>

#include "cda/errors.hpp"

namespace cda {

namespace {

constexpr std::size_t kBookStart = 11;  // column of bid_d0

std::string decile_name(const char* side, std::size_t i) { return std::string(side) + "_d" + std::to_string(i); }

std::optional<DecileVector> read_side(const CsvTable& t, const CsvRow& row, std::size_t count_col, std::size_t first) {
  const auto count = field_int(t, row, count_col);
  if (count < 0) throw SchemaError(t.where(row) + ": negative quote count");
  if (count == 0) return std::nullopt;
  DecileVector d;
  d.count = static_cast<std::size_t>(count);
  for (std::size_t i = 0; i < kDeciles; ++i) d.values[i] = field_double(t, row, first + i);
  return d;
}

}  // namespace

std::vector<std::string> feature_header() {
  std::vector<std::string> h{"market_id", "row_index",        "round",      "time",      "feedback_setting",
                             "price_rule", "size",            "n_deals",    "last_deal_price",
                             "bid_count", "ask_count"};
  for (std::size_t i = 0; i < kDeciles; ++i) h.push_back(decile_name("bid", i));
  for (std::size_t i = 0; i < kDeciles; ++i) h.push_back(decile_name("ask", i));
  for (const char* c : {"norm_center", "norm_scale", "ae_round", "cep_mid"}) h.emplace_back(c);
  return h;
}

void write_features(std::span<const FeatureRow> rows, const std::filesystem::path& path, const FileMeta& meta) {
  CsvWriter w(meta, feature_header());
  for (const auto& r : rows) {
    std::vector<std::string> f{r.market_id,
                               std::to_string(r.row_index),
                               std::to_string(r.round),
                               format_double(r.time),
                               std::string(to_string(r.treatment.feedback)),
                               std::string(to_string(r.treatment.price_rule)),
                               std::string(to_string(r.treatment.size)),
                               std::to_string(r.n_deals),
                               format_optional(r.last_deal_price),
                               std::to_string(r.bids ? r.bids->count : 0),
                               std::to_string(r.asks ? r.asks->count : 0)};
    for (const auto* side : {&r.bids, &r.asks})
      for (std::size_t i = 0; i < kDeciles; ++i) f.push_back(*side ? format_double((**side).values[i]) : "");
    f.push_back(r.norm ? format_double(r.norm->center) : "");
    f.push_back(r.norm ? format_double(r.norm->scale) : "");
    f.push_back(format_optional(r.ae_round));
    f.push_back(format_optional(r.cep_mid));
    w.row(f);
  }
  w.save(path);
}

std::vector<FeatureRow> read_features(const std::filesystem::path& path) {
  const auto t = read_csv(path, feature_header());
  std::vector<FeatureRow> out;
  out.reserve(t.rows.size());
  const std::size_t tail = kBookStart + kBookEntries;
  for (const auto& row : t.rows) {
    FeatureRow r;
    r.market_id = row.fields[0];
    r.row_index = static_cast<std::size_t>(field_int(t, row, 1));
    r.round = static_cast<int>(field_int(t, row, 2));
    r.time = field_double(t, row, 3);
    try {
      r.treatment = {parse_feedback(row.fields[4]), parse_price_rule(row.fields[5]), parse_size_class(row.fields[6])};
    } catch (const Error& e) {
      throw SchemaError(t.where(row) + ": " + e.what());
    }
    r.n_deals = static_cast<int>(field_int(t, row, 7));
    r.last_deal_price = field_optional_double(t, row, 8);
    r.bids = read_side(t, row, 9, kBookStart);
    r.asks = read_side(t, row, 10, kBookStart + kDeciles);
    if (!row.fields[tail].empty())
      r.norm = NormalizationConstants{field_double(t, row, tail), field_double(t, row, tail + 1)};
    r.ae_round = field_optional_double(t, row, tail + 2);
    r.cep_mid = field_optional_double(t, row, tail + 3);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> prediction_header() {
  return {"split_id", "market_id", "treatment", "row_index",    "round", "time",
          "n_deals",  "model",     "target",    "prediction", "target_value", "ape"};
}

void write_predictions(std::span<const PredictionRecord> records, const std::filesystem::path& path,
                       const FileMeta& meta) {
  CsvWriter w(meta, prediction_header());
  for (const auto& r : records)
    w.row({std::to_string(r.split_id), r.market_id, r.treatment, std::to_string(r.row_index), std::to_string(r.round),
           format_double(r.time), std::to_string(r.n_deals), r.model, std::string(to_string(r.target)),
           format_double(r.prediction), format_double(r.target_value), format_double(r.ape)});
  w.save(path);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  const auto t = read_csv(path, prediction_header());
  std::vector<PredictionRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    PredictionRecord r;
    r.split_id = static_cast<int>(field_int(t, row, 0));
    r.market_id = row.fields[1];
    r.treatment = row.fields[2];
    r.row_index = static_cast<std::size_t>(field_int(t, row, 3));
    r.round = static_cast<int>(field_int(t, row, 4));
    r.time = field_double(t, row, 5);
    r.n_deals = static_cast<int>(field_int(t, row, 6));
    r.model = row.fields[7];
    try {
      r.target = parse_target(row.fields[8]);
    } catch (const Error& e) {
      throw SchemaError(t.where(row) + ": " + e.what());
    }
    r.prediction = field_double(t, row, 9);
    r.target_value = field_double(t, row, 10);
    r.ape = field_double(t, row, 11);
    out.push_back(std::move(r));
  }
  return out;
}

void write_splits(std::span<const SplitPlan> plans, std::span<const MarketRef> markets,
                  const std::filesystem::path& path, const FileMeta& meta) {
  std::map<std::string, std::string> treatment;
  for (const auto& m : markets) treatment[m.market_id] = m.treatment;
  CsvWriter w(meta, {"split_id", "seed", "market_id", "treatment", "role"});
  for (const auto& p : plans) {
    for (const auto& id : p.train) w.row({std::to_string(p.split_id), std::to_string(p.seed), id, treatment[id], "train"});
    for (const auto& id : p.test) w.row({std::to_string(p.split_id), std::to_string(p.seed), id, treatment[id], "test"});
  }
  w.save(path);
}

std::vector<SplitPlan> read_splits(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"split_id", "seed", "market_id", "treatment", "role"});
  std::map<int, SplitPlan> plans;
  for (const auto& row : t.rows) {
    const int id = static_cast<int>(field_int(t, row, 0));
    auto& p = plans[id];
    p.split_id = id;
    p.seed = std::stoull(row.fields[1]);
    if (row.fields[4] == "train") p.train.push_back(row.fields[2]);
    else if (row.fields[4] == "test") p.test.push_back(row.fields[2]);
    else throw SchemaError(t.where(row) + ": role must be train or test");
  }
  std::vector<SplitPlan> out;
  for (auto& [id, p] : plans) {
    std::sort(p.train.begin(), p.train.end());
    std::sort(p.test.begin(), p.test.end());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace cda
