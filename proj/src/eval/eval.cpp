#include "cda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "cda/errors.hpp"
#include "cda/quantile.hpp"
#include "cda/rng.hpp"

namespace cda {

std::vector<MarketRef> market_refs(std::span<const MarketLog> markets) {
  std::vector<MarketRef> out;
  out.reserve(markets.size());
  for (const auto& m : markets) out.push_back({m.market_id, treatment_label(m.treatment)});
  return out;
}

bool SplitPlan::in_train(const std::string& market_id) const {
  return std::binary_search(train.begin(), train.end(), market_id);
}

bool SplitPlan::in_test(const std::string& market_id) const {
  return std::binary_search(test.begin(), test.end(), market_id);
}

std::vector<SplitPlan> make_splits(std::span<const MarketRef> markets, int n_splits, std::uint64_t seed) {
  if (n_splits < 1) throw ConfigError("number of splits must be positive");
  std::map<std::string, std::set<std::string>> by_treatment;
  for (const auto& m : markets) by_treatment[m.treatment].insert(m.market_id);
  for (const auto& [label, ids] : by_treatment)
    if (ids.size() < 2)
      throw InsufficientMarkets("treatment " + label + " has " + std::to_string(ids.size()) +
                                " market(s); splitting needs at least 2");

  std::vector<SplitPlan> plans;
  for (int s = 0; s < n_splits; ++s) {
    SplitPlan plan;
    plan.split_id = s;
    plan.seed = mix_seed(seed, static_cast<std::uint64_t>(s));
    std::uint64_t t = 0;
    for (const auto& [label, ids] : by_treatment) {
      std::vector<std::string> order(ids.begin(), ids.end());
      Rng rng(mix_seed(plan.seed, t++));
      rng.shuffle(std::span<std::string>(order));
      const std::size_t n_train = s % 2 == 0 ? order.size() / 2 : (order.size() + 1) / 2;
      plan.train.insert(plan.train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      plan.test.insert(plan.test.end(), order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.test.begin(), plan.test.end());
    plans.push_back(std::move(plan));
  }
  return plans;
}

Bucket bucket_of(int round, int n_deals) {
  return {round <= 1 ? RoundClass::R1 : RoundClass::R2plus, n_deals == 0 ? DealsClass::D0 : DealsClass::D1plus};
}

std::string to_string(Bucket b) {
  return std::string(b.round == RoundClass::R1 ? "R1" : "R2+") + "/" + (b.deals == DealsClass::D0 ? "D0" : "D1+");
}

std::vector<Bucket> all_buckets() {
  return {{RoundClass::R1, DealsClass::D0},
          {RoundClass::R1, DealsClass::D1plus},
          {RoundClass::R2plus, DealsClass::D0},
          {RoundClass::R2plus, DealsClass::D1plus}};
}

ModelSpec default_spec(ModelKind kind, TargetKind target, std::uint64_t seed) {
  ModelSpec spec;
  spec.kind = kind;
  spec.label = std::string(to_string(kind));
  spec.options.gbt = GbtConfig::default_for(target);
  spec.options.gbt.seed = seed;
  return spec;
}

std::vector<const FeatureRow*> evaluation_rows(std::span<const FeatureRow> rows, const SplitPlan& plan,
                                               TargetKind target) {
  std::vector<const FeatureRow*> out;
  for (const auto& r : rows)
    if (r.has_book() && target_of(r, target) && plan.in_test(r.market_id)) out.push_back(&r);
  return out;
}

std::vector<FeatureRow> training_rows(std::span<const FeatureRow> rows, const SplitPlan& plan) {
  std::vector<FeatureRow> out;
  for (const auto& r : rows)
    if (plan.in_train(r.market_id)) out.push_back(r);
  return out;
}

namespace {

PredictionRecord make_record(const SplitPlan& plan, const FeatureRow& row, const std::string& label, TargetKind target,
                             double prediction) {
  PredictionRecord rec;
  rec.split_id = plan.split_id;
  rec.market_id = row.market_id;
  rec.treatment = treatment_label(row.treatment);
  rec.row_index = row.row_index;
  rec.round = row.round;
  rec.time = row.time;
  rec.n_deals = row.n_deals;
  rec.model = label;
  rec.target = target;
  rec.prediction = prediction;
  rec.target_value = *target_of(row, target);
  rec.ape = ape(rec.target_value, prediction);
  return rec;
}

std::optional<FittedModel> try_fit(const ModelSpec& spec, std::span<const FeatureRow> train, TargetKind target) {
  try {
    return fit_model(spec.kind, train, target, spec.options);
  } catch (const MissingInput&) {
    return std::nullopt;
  }
}

std::vector<std::string> split_label(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find('/', start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string group_of(const std::string& treatment, const BucketGrouping& g) {
  const auto parts = split_label(treatment);  // feedback/price_rule/size
  std::string out;
  auto add = [&](const std::string& v) { out += (out.empty() ? "" : "/") + v; };
  if (g.feedback && parts.size() > 0) add(parts[0]);
  if (g.price_rule && parts.size() > 1) add(parts[1]);
  if (g.size && parts.size() > 2) add(parts[2]);
  return out;
}

// Model labels in order of first appearance.
std::vector<std::string> model_order(std::span<const PredictionRecord> records, TargetKind target) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (r.target == target && seen.insert(r.model).second) out.push_back(r.model);
  return out;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<PredictionRecord> predict_split(std::span<const FeatureRow> rows, const SplitPlan& plan, TargetKind target,
                                            std::span<const LabeledModel> models) {
  const auto test = evaluation_rows(rows, plan, target);
  std::vector<PredictionRecord> out;
  for (const auto& m : models) {
    if (m.model.target != target) continue;
    for (const auto* row : test)
      if (const auto p = try_predict(m.model, *row)) out.push_back(make_record(plan, *row, m.label, target, *p));
  }
  return out;
}

std::vector<PredictionRecord> evaluate_split(std::span<const FeatureRow> rows, const SplitPlan& plan,
                                             TargetKind target, std::span<const ModelSpec> specs,
                                             std::vector<FittedModel>* fitted) {
  const auto train = training_rows(rows, plan);
  std::vector<LabeledModel> models;
  for (const auto& spec : specs)
    if (auto model = try_fit(spec, train, target)) models.push_back({spec.label, std::move(*model)});
  auto out = predict_split(rows, plan, target, models);
  if (fitted)
    for (auto& m : models) fitted->push_back(std::move(m.model));
  return out;
}

std::vector<BucketCell> bucket_report(std::span<const PredictionRecord> records, BucketGrouping grouping) {
  std::vector<BucketCell> out;
  for (auto target : {TargetKind::AE, TargetKind::CEP}) {
    const auto models = model_order(records, target);
    if (models.empty()) continue;
    // (group, bucket) -> model -> APEs
    std::map<std::pair<std::string, Bucket>, std::map<std::string, std::vector<double>>> cells;
    for (const auto& r : records) {
      if (r.target != target) continue;
      cells[{group_of(r.treatment, grouping), bucket_of(r.round, r.n_deals)}][r.model].push_back(r.ape);
    }
    for (auto& [key, by_model] : cells) {
      for (const auto& model : models) {
        BucketCell cell;
        cell.target = target;
        cell.model = model;
        cell.bucket = to_string(key.second);
        cell.group = key.first;
        if (auto it = by_model.find(model); it != by_model.end()) {
          cell.n = it->second.size();
          cell.median_ape = lower_median(it->second);
        }
        out.push_back(std::move(cell));
      }
    }
  }
  return out;
}

std::string_view to_string(PairedTest t) {
  switch (t) {
    case PairedTest::PerRow: return "per_row";
    case PairedTest::Aggregated: return "aggregated";
    case PairedTest::Clustered: return "clustered";
  }
  return "?";
}

std::vector<Comparison> pairwise_comparisons(std::span<const PredictionRecord> records, TargetKind target,
                                             std::span<const std::string> models, PairedTest test) {
  using Key = std::tuple<int, std::string, std::size_t>;
  struct Entry {
    double ape;
    const PredictionRecord* rec;
  };
  std::map<std::string, std::map<Key, Entry>> by_model;
  for (const auto& r : records)
    if (r.target == target) by_model[r.model].emplace(Key{r.split_id, r.market_id, r.row_index}, Entry{r.ape, &r});

  std::vector<Comparison> out;
  for (const auto& bucket : all_buckets()) {
    for (std::size_t i = 0; i < models.size(); ++i) {
      for (std::size_t j = i + 1; j < models.size(); ++j) {
        Comparison c;
        c.target = target;
        c.test = test;
        c.bucket = to_string(bucket);
        c.model_a = models[i];
        c.model_b = models[j];
        std::vector<double> diffs;
        std::vector<std::string> clusters;
        const auto a = by_model.find(models[i]);
        const auto b = by_model.find(models[j]);
        if (a != by_model.end() && b != by_model.end()) {
          for (const auto& [key, ea] : a->second) {
            if (bucket_of(ea.rec->round, ea.rec->n_deals) != bucket) continue;
            const auto eb = b->second.find(key);
            if (eb == b->second.end()) continue;
            diffs.push_back(ea.ape - eb->second.ape);
            clusters.push_back(ea.rec->treatment + "|" + ea.rec->market_id);
          }
        }
        c.n_pairs = diffs.size();
        c.n_games = std::set<std::string>(clusters.begin(), clusters.end()).size();
        if (!diffs.empty()) {
          c.median_diff = median(diffs);
          try {
            switch (test) {
              case PairedTest::PerRow: {
                c.alternative = alternative_from_sign(diffs);
                const auto r = wilcoxon_paired(diffs, c.alternative);
                c.statistic = r.statistic;
                c.p_value = r.p_value;
                break;
              }
              case PairedTest::Aggregated: {
                const auto r = median_aggregate_test(diffs, clusters);
                c.median_diff = r.median_of_medians;
                c.statistic = r.test.statistic;
                c.p_value = r.test.p_value;
                break;
              }
              case PairedTest::Clustered: {
                const auto r = clustered_signed_rank(diffs, clusters);
                c.statistic = r.statistic;
                c.p_value = r.p_value;
                break;
              }
            }
          } catch (const InsufficientClusters&) {
          }
        }
        out.push_back(std::move(c));
      }
    }
  }

  std::vector<double> ps;
  for (const auto& c : out)
    if (c.p_value) ps.push_back(*c.p_value);
  const auto adjusted = holm_adjust(ps);
  std::size_t k = 0;
  for (auto& c : out)
    if (c.p_value) c.p_holm = adjusted[k++];
  return out;
}

std::string_view to_string(AblationKind k) {
  return k == AblationKind::OrderbookOnly ? "orderbook_only" : "no_deal_price";
}

AblationKind parse_ablation_kind(std::string_view s) {
  if (s == "orderbook_only") return AblationKind::OrderbookOnly;
  if (s == "no_deal_price") return AblationKind::NoDealPrice;
  throw ConfigError("unknown ablation '" + std::string(s) + "'");
}

std::vector<std::pair<ModelKind, TargetKind>> ablation_models(AblationKind kind) {
  if (kind == AblationKind::NoDealPrice) return {{ModelKind::OBRLM, TargetKind::AE}};
  return {{ModelKind::OBRLM, TargetKind::AE},
          {ModelKind::GBT, TargetKind::AE},
          {ModelKind::GBT, TargetKind::CEP},
          {ModelKind::CEMH, TargetKind::CEP}};
}

FeatureMask ablation_mask(AblationKind kind) {
  return kind == AblationKind::OrderbookOnly ? FeatureMask::orderbook_only() : FeatureMask::no_deal_price();
}

AblationResult run_ablation(AblationKind kind, std::span<const FeatureRow> rows, std::span<const SplitPlan> plans,
                            const AblationOptions& options) {
  AblationResult result;
  result.kind = kind;
  for (const auto& plan : plans) {
    const auto train = training_rows(rows, plan);
    for (const auto& [model_kind, target] : ablation_models(kind)) {
      auto original = default_spec(model_kind, target, options.seed);
      const auto& grid = target == TargetKind::AE ? options.gbt_ae : options.gbt_cep;
      if (grid) {
        original.options.gbt = *grid;
        original.options.gbt.seed = options.seed;
      }
      original.options.cemh_grouping = options.cemh_grouping;
      auto ablated = original;
      ablated.options.mask = ablation_mask(kind);
      const auto fit_a = try_fit(original, train, target);
      const auto fit_b = try_fit(ablated, train, target);
      if (!fit_a || !fit_b) continue;
      for (const auto* row : evaluation_rows(rows, plan, target)) {
        const auto pa = try_predict(*fit_a, *row);
        auto pb = try_predict(*fit_b, *row);
        if (kind == AblationKind::NoDealPrice && row->n_deals == 0) pb = pa;
        if (!pa || !pb) continue;
        result.original.push_back(make_record(plan, *row, original.label, target, *pa));
        result.ablated.push_back(make_record(plan, *row, original.label, target, *pb));
      }
    }
  }

  std::map<std::tuple<TargetKind, std::string, Bucket>, std::pair<std::vector<double>, std::vector<double>>> cells;
  std::map<std::tuple<TargetKind, std::string, Bucket>, bool> identical;
  for (std::size_t i = 0; i < result.original.size(); ++i) {
    const auto& a = result.original[i];
    const auto& b = result.ablated[i];
    const auto key = std::make_tuple(a.target, a.model, bucket_of(a.round, a.n_deals));
    cells[key].first.push_back(a.ape);
    cells[key].second.push_back(b.ape);
    auto [it, inserted] = identical.emplace(key, true);
    if (a.prediction != b.prediction) it->second = false;
  }
  for (auto& [key, apes] : cells) {
    AblationCell cell;
    cell.target = std::get<0>(key);
    cell.model = std::get<1>(key);
    cell.bucket = to_string(std::get<2>(key));
    cell.n = apes.first.size();
    cell.original = lower_median(apes.first);
    cell.ablated = lower_median(apes.second);
    cell.identical = identical[key];
    result.cells.push_back(std::move(cell));
  }
  return result;
}

std::vector<ResidualSummary> residual_summaries(std::span<const PredictionRecord> records) {
  std::map<std::tuple<TargetKind, std::string, Bucket>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.target, r.model, bucket_of(r.round, r.n_deals)}];
    g.first.push_back(r.prediction - r.target_value);
    g.second.push_back(r.ape);
  }
  std::vector<ResidualSummary> out;
  for (auto& [key, g] : groups) {
    ResidualSummary s;
    s.target = std::get<0>(key);
    s.model = std::get<1>(key);
    s.bucket = to_string(std::get<2>(key));
    s.n = g.first.size();
    double sum = 0;
    for (double v : g.first) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    s.std = sample_std(g.first, s.mean);
    s.median_ape = lower_median(g.second);
    out.push_back(s);
  }
  return out;
}

std::vector<FeatureImportance> gain_importance(const FittedModel& model, const std::string& label) {
  std::vector<FeatureImportance> out;
  const auto* g = std::get_if<GbtModel>(&model.params);
  if (!g) return out;
  double total = 0;
  for (double v : g->ensemble.split_gain) total += v;
  for (std::size_t f = 0; f < g->columns.size(); ++f) {
    const double gain = f < g->ensemble.split_gain.size() ? g->ensemble.split_gain[f] : 0.0;
    out.push_back({model.target, label, g->columns[f], total > 0 ? gain / total : 0.0});
  }
  return out;
}

std::vector<PdpPoint> partial_dependence(const FittedModel& model, const std::string& label,
                                         std::span<const FeatureRow* const> rows, const DiagnosticsOptions& options) {
  std::vector<PdpPoint> out;
  const auto columns = input_columns(model);
  if (columns.empty() || rows.empty() || options.grid_points < 1) return out;

  std::vector<const FeatureRow*> sample;
  if (rows.size() <= options.max_rows) {
    sample.assign(rows.begin(), rows.end());
  } else {
    for (std::size_t k = 0; k < options.max_rows; ++k) sample.push_back(rows[k * rows.size() / options.max_rows]);
  }
  std::vector<std::vector<double>> inputs;
  for (const auto* r : sample) inputs.push_back(model_inputs(model, *r));

  double grand = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) grand += predict_from_inputs(model, *sample[i], inputs[i]);
  grand /= static_cast<double>(sample.size());

  for (std::size_t f = 0; f < columns.size(); ++f) {
    std::vector<double> values;
    for (const auto& x : inputs) values.push_back(x[f]);
    std::sort(values.begin(), values.end());
    const double lo = quantile_sorted(values, options.lower_quantile);
    const double hi = quantile_sorted(values, options.upper_quantile);
    for (int k = 0; k < options.grid_points; ++k) {
      const double v =
          options.grid_points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (options.grid_points - 1);
      double sum = 0;
      for (std::size_t i = 0; i < sample.size(); ++i) {
        auto x = inputs[i];
        x[f] = v;
        sum += predict_from_inputs(model, *sample[i], x);
      }
      const double mean = sum / static_cast<double>(sample.size());
      out.push_back({model.target, label, columns[f], k, v, mean, mean - grand});
    }
  }
  return out;
}

}  // namespace cda
