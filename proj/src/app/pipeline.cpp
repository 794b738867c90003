#include "cda/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "cda/errors.hpp"
#include "cda/model_io.hpp"
#include "cda/quantile.hpp"
#include "cda/rng.hpp"
#include "cda/simulator.hpp"
#include "cda/tables.hpp"

namespace cda {

using nlohmann::json;

FileMeta StageContext::meta() const { return {kSchemaVersion, config.hash(), config.seed}; }

namespace {

// Runs fn(0..n-1) on up to `jobs` threads; results must go to per-index slots.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void require(const std::filesystem::path& p, const std::string& hint) {
  if (!std::filesystem::exists(p)) throw MissingArtifact(p.string() + " not found; " + hint);
}

void write_run_config(const StageContext& ctx) { write_text(ctx.root / "run_config.json", ctx.config.to_json()); }

std::string split_dir(int split) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "split_%03d", split);
  return buf;
}

std::filesystem::path model_path(const std::filesystem::path& root, int split, TargetKind target, ModelKind kind) {
  return paths::models(root) / split_dir(split) /
         (std::string(to_string(target)) + "_" + std::string(to_string(kind)) + ".json");
}

bool applicable(ModelKind kind, TargetKind target) { return !(kind == ModelKind::BookMidpoint && target == TargetKind::AE); }

std::vector<FeatureRow> load_features(const StageContext& ctx) {
  require(paths::features(ctx.root), "run `featurize` first");
  return read_features(paths::features(ctx.root));
}

std::vector<SplitPlan> load_splits(const StageContext& ctx) {
  require(paths::splits(ctx.root), "run `fit` first");
  return read_splits(paths::splits(ctx.root));
}

std::vector<PredictionRecord> load_predictions(const StageContext& ctx) {
  require(paths::predictions(ctx.root), "run `predict` first");
  return read_predictions(paths::predictions(ctx.root));
}

std::vector<MarketRef> refs_of(std::span<const FeatureRow> rows) {
  std::map<std::string, std::string> seen;
  for (const auto& r : rows) seen.emplace(r.market_id, treatment_label(r.treatment));
  std::vector<MarketRef> out;
  for (const auto& [id, t] : seen) out.push_back({id, t});
  return out;
}

std::vector<LabeledModel> load_split_models(const StageContext& ctx, int split, TargetKind target) {
  std::vector<LabeledModel> out;
  for (auto kind : ctx.config.models) {
    const auto p = model_path(ctx.root, split, target, kind);
    if (std::filesystem::exists(p)) out.push_back({std::string(to_string(kind)), model_from_json(read_text(p))});
  }
  return out;
}

std::string opt(const std::optional<double>& v) { return format_optional(v); }

json header_json(const StageContext& ctx) {
  return {{"schema_version", kSchemaVersion},
          {"config_hash", ctx.config.hash()},
          {"seed", ctx.config.seed},
          {"config", json::parse(ctx.config.to_json())}};
}

// target -> model -> bucket -> (n, lower median APE), with an "all" bucket.
json median_table(std::span<const PredictionRecord> records) {
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>> apes;
  for (const auto& r : records) {
    auto& m = apes[std::string(to_string(r.target))][r.model];
    m[to_string(bucket_of(r.round, r.n_deals))].push_back(r.ape);
    m["all"].push_back(r.ape);
  }
  json out = json::object();
  for (auto& [target, models] : apes)
    for (auto& [model, buckets] : models)
      for (auto& [bucket, v] : buckets)
        out[target][model][bucket] = {{"n", v.size()}, {"median_ape", lower_median(v)}};
  return out;
}

}  // namespace

Corpus simulate_corpus(const RunConfig& config) {
  config.validate();
  const auto& s = config.simulation;
  std::vector<Treatment> rotation;
  for (auto size : {SizeClass::Small, SizeClass::Large}) {
    if (size == SizeClass::Large && !s.include_large) continue;
    for (int f = 0; f < kFeedbackLevels; ++f)
      for (int p = 0; p < kPriceRuleLevels; ++p)
        rotation.push_back({static_cast<FeedbackSetting>(f), static_cast<PriceRule>(p), size});
  }
  const std::size_t used =
      std::max<std::size_t>(1, std::min(rotation.size(), static_cast<std::size_t>(s.markets) / 2));
  const int width = std::max(3, static_cast<int>(std::to_string(s.markets).size()));

  Corpus corpus;
  corpus.provenance = Provenance::Synthetic;
  corpus.markets.resize(static_cast<std::size_t>(s.markets));
  for (int m = 0; m < s.markets; ++m) {
    const auto& t = rotation[static_cast<std::size_t>(m) % used];
    SimConfig c;
    const auto num = std::to_string(m + 1);
    c.market_id = "M" + std::string(static_cast<std::size_t>(width) - std::min(num.size(), static_cast<std::size_t>(width)), '0') + num;
    const bool large = t.size == SizeClass::Large;
    c.n_buyers = large ? 8 : s.buyers;
    c.n_sellers = large ? 8 : s.sellers;
    c.value_min = s.value_min;
    c.value_max = s.value_max;
    c.feedback = t.feedback;
    c.price_rule = t.price_rule;
    c.rounds = s.rounds;
    c.actions_per_round = s.actions_per_round;
    c.quote_range = {static_cast<Money>(s.value_min), static_cast<Money>(s.value_max)};
    c.rng_seed = mix_seed(config.seed, static_cast<std::uint64_t>(m));
    corpus.markets[static_cast<std::size_t>(m)] = run_market(c);
  }
  return corpus;
}

void stage_simulate(const StageContext& ctx) {
  export_corpus(simulate_corpus(ctx.config), paths::corpus(ctx.root), ctx.meta());
  write_run_config(ctx);
}

IngestReport stage_ingest(const StageContext& ctx, const CorpusPaths& in) {
  IngestReport report;
  const auto corpus = ingest(in, {ctx.strict}, &report);
  export_corpus(corpus, paths::corpus(ctx.root), ctx.meta());
  write_run_config(ctx);
  return report;
}

void stage_featurize(const StageContext& ctx) {
  const auto dir = paths::corpus(ctx.root);
  require(dir / "events.csv", "run `simulate` or `ingest` first");
  const auto corpus = ingest(CorpusPaths::in(dir), {ctx.strict});
  const auto rows = snapshot_corpus(corpus.markets, {ctx.config.cadence, ctx.config.pool});
  write_features(rows, paths::features(ctx.root), ctx.meta());
  write_run_config(ctx);
}

void stage_fit(const StageContext& ctx) {
  const auto rows = load_features(ctx);
  bool any_target = false;
  for (const auto& r : rows) any_target = any_target || r.ae_round.has_value();
  if (!any_target) throw MissingInput("feature rows carry no targets; fitting needs a corpus with reservation values");
  const auto refs = refs_of(rows);
  const auto plans = make_splits(refs, ctx.config.n_splits, ctx.config.seed);
  std::filesystem::remove_all(paths::models(ctx.root));
  write_splits(plans, refs, paths::splits(ctx.root), ctx.meta());
  parallel_for(plans.size(), ctx.jobs, [&](std::size_t i) {
    const auto train = training_rows(rows, plans[i]);
    for (auto target : ctx.config.targets) {
      const auto options = ctx.config.fit_options(target);
      for (auto kind : ctx.config.models) {
        if (!applicable(kind, target)) continue;
        try {
          const auto model = fit_model(kind, train, target, options);
          write_text(model_path(ctx.root, plans[i].split_id, target, kind), model_to_json(model) + "\n");
        } catch (const MissingInput&) {
        }
      }
    }
  });
  write_run_config(ctx);
}

void stage_predict(const StageContext& ctx) {
  const auto rows = load_features(ctx);
  const auto plans = load_splits(ctx);
  require(paths::models(ctx.root), "run `fit` first");
  std::vector<std::vector<PredictionRecord>> parts(plans.size());
  parallel_for(plans.size(), ctx.jobs, [&](std::size_t i) {
    for (auto target : ctx.config.targets) {
      const auto models = load_split_models(ctx, plans[i].split_id, target);
      auto recs = predict_split(rows, plans[i], target, models);
      parts[i].insert(parts[i].end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
  });
  std::vector<PredictionRecord> all;
  for (auto& p : parts) all.insert(all.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  write_predictions(all, paths::predictions(ctx.root), ctx.meta());
  write_run_config(ctx);
}

std::vector<std::string> comparison_models(std::span<const PredictionRecord> records, TargetKind target) {
  std::set<std::string> present;
  for (const auto& r : records)
    if (r.target == target) present.insert(r.model);
  std::vector<std::string> out;
  for (auto k : {ModelKind::EMH, ModelKind::CEMH, ModelKind::OBRLM, ModelKind::GBT})
    if (present.contains(std::string(to_string(k)))) out.emplace_back(to_string(k));
  return out;
}

void stage_evaluate(const StageContext& ctx) {
  const auto records = load_predictions(ctx);
  if (records.empty()) throw MissingInput("prediction file holds no records");
  const auto dir = paths::evaluation(ctx.root);
  const auto meta = ctx.meta();

  CsvWriter buckets(meta, {"grouping", "target", "model", "bucket", "group", "n", "median_ape"});
  const std::vector<std::pair<std::string, BucketGrouping>> groupings{{"none", {}},
                                                                       {"size", {true, false, false}},
                                                                       {"feedback", {false, true, false}},
                                                                       {"price_rule", {false, false, true}}};
  for (const auto& [name, g] : groupings)
    for (const auto& c : bucket_report(records, g))
      buckets.row({name, std::string(to_string(c.target)), c.model, c.bucket, c.group, std::to_string(c.n),
                   opt(c.median_ape)});
  buckets.save(dir / "bucket_ape.csv");

  CsvWriter cmp(meta, {"target", "test", "bucket", "model_a", "model_b", "n_pairs", "n_games", "median_diff",
                       "alternative", "statistic", "p_value", "p_holm"});
  for (auto target : ctx.config.targets) {
    const auto models = comparison_models(records, target);
    for (auto test : {PairedTest::PerRow, PairedTest::Aggregated, PairedTest::Clustered})
      for (const auto& c : pairwise_comparisons(records, target, models, test))
        cmp.row({std::string(to_string(c.target)), std::string(to_string(c.test)), c.bucket, c.model_a, c.model_b,
                 std::to_string(c.n_pairs), std::to_string(c.n_games), format_double(c.median_diff),
                 std::string(to_string(c.alternative)), opt(c.statistic), opt(c.p_value), opt(c.p_holm)});
  }
  cmp.save(dir / "comparisons.csv");

  auto summary = header_json(ctx);
  summary["records"] = records.size();
  summary["median_ape"] = median_table(records);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

void stage_ablate(const StageContext& ctx, const std::vector<AblationKind>& kinds) {
  const auto rows = load_features(ctx);
  const auto plans = load_splits(ctx);
  AblationOptions options;
  options.seed = ctx.config.seed;
  options.gbt_ae = ctx.config.gbt_ae;
  options.gbt_cep = ctx.config.gbt_cep;
  options.cemh_grouping = ctx.config.cemh_grouping;
  std::vector<AblationResult> results(kinds.size());
  parallel_for(kinds.size(), ctx.jobs, [&](std::size_t i) { results[i] = run_ablation(kinds[i], rows, plans, options); });
  for (const auto& res : results) {
    CsvWriter w(ctx.meta(), {"target", "model", "bucket", "n", "original_median_ape", "ablated_median_ape", "identical"});
    for (const auto& c : res.cells)
      w.row({std::string(to_string(c.target)), c.model, c.bucket, std::to_string(c.n), opt(c.original), opt(c.ablated),
             c.identical ? "true" : "false"});
    w.save(paths::ablation(ctx.root) / (std::string(to_string(res.kind)) + ".csv"));
  }
}

namespace {

struct CemhRow {
  std::string feedback, price_rule, n_bucket;
  double coefficient = 0;
  std::size_t rows = 0;
};

std::vector<CemhRow> cemh_table(std::span<const FeatureRow> rows, bool by_n) {
  FitOptions options;
  options.mask = {true, true, true, false, by_n};
  options.cemh_grouping = CemhGrouping::TreatmentN;
  const auto model = fit_model(ModelKind::CEMH, rows, TargetKind::CEP, options);
  const auto& g = std::get<GroupedScalars>(model.params);
  std::map<GroupKey, std::size_t> counts;
  for (const auto& r : rows)
    if (r.last_deal_price && r.cep_mid)
      ++counts[{static_cast<int>(r.treatment.feedback), static_cast<int>(r.treatment.price_rule),
                by_n ? n_bucket(r.n_deals) : -1}];
  std::vector<CemhRow> out;
  for (const auto& [key, rounds] : g.values) {
    CemhRow row;
    row.feedback = to_string(static_cast<FeedbackSetting>(key.feedback));
    row.price_rule = to_string(static_cast<PriceRule>(key.price_rule));
    row.n_bucket = key.n_bucket < 0 ? "all" : std::to_string(key.n_bucket) + (key.n_bucket == kNDealsCap ? "+" : "");
    row.coefficient = rounds.begin()->second;
    row.rows = counts[key];
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

void stage_report(const StageContext& ctx) {
  const auto rows = load_features(ctx);
  const auto plans = load_splits(ctx);
  const auto records = load_predictions(ctx);
  const auto dir = paths::report(ctx.root);
  const auto meta = ctx.meta();
  auto report = header_json(ctx);

  // Ratio of CE midpoint to the last deal price per treatment, fit on every row.
  CsvWriter cemh(meta, {"feedback_setting", "price_rule", "n_deals_bucket", "coefficient", "rows"});
  json cemh_json = json::array();
  for (bool by_n : {false, true})
    for (const auto& c : cemh_table(rows, by_n)) {
      cemh.row({c.feedback, c.price_rule, c.n_bucket, format_double(c.coefficient), std::to_string(c.rows)});
      cemh_json.push_back({{"feedback_setting", c.feedback},
                           {"price_rule", c.price_rule},
                           {"n_deals_bucket", c.n_bucket},
                           {"coefficient", c.coefficient},
                           {"rows", c.rows}});
    }
  cemh.save(dir / "cemh_coefficients.csv");
  report["cemh_coefficients"] = cemh_json;

  // Treatment means scored in-sample by treatment and leave-one-treatment-out.
  std::vector<std::vector<PredictionRecord>> parts(plans.size());
  parallel_for(plans.size(), ctx.jobs, [&](std::size_t i) {
    const auto train = training_rows(rows, plans[i]);
    for (auto target : ctx.config.targets) {
      std::vector<LabeledModel> models;
      for (bool loto : {false, true}) {
        FitOptions o;
        o.treatment_mean_loto = loto;
        try {
          models.push_back({loto ? "Treatment-Mean-LOTO" : "Treatment-Mean", fit_treatment_mean(train, target, o)});
        } catch (const MissingInput&) {
        }
      }
      auto recs = predict_split(rows, plans[i], target, models);
      parts[i].insert(parts[i].end(), recs.begin(), recs.end());
    }
  });
  std::vector<PredictionRecord> loto_records;
  for (auto& p : parts) loto_records.insert(loto_records.end(), p.begin(), p.end());
  const auto loto_table = median_table(loto_records);
  CsvWriter loto(meta, {"target", "model", "bucket", "n", "median_ape"});
  for (const auto& [target, models] : loto_table.items())
    for (const auto& [model, buckets] : models.items())
      for (const auto& [bucket, cell] : buckets.items())
        loto.row({target, model, bucket, std::to_string(cell.at("n").get<std::size_t>()),
                  format_double(cell.at("median_ape").get<double>())});
  loto.save(dir / "loto.csv");
  report["treatment_mean"] = loto_table;

  CsvWriter resid(meta, {"target", "model", "bucket", "n", "mean_residual", "std_residual", "median_ape"});
  for (const auto& s : residual_summaries(records))
    resid.row({std::string(to_string(s.target)), s.model, s.bucket, std::to_string(s.n), format_double(s.mean),
               format_double(s.std), format_double(s.median_ape)});
  resid.save(dir / "residuals.csv");

  // Importance and partial dependence of the first split's fitted models.
  CsvWriter imp(meta, {"target", "model", "feature", "importance"});
  CsvWriter pdp(meta, {"target", "model", "feature", "index", "value", "mean_prediction", "centered"});
  if (!plans.empty()) {
    const auto& plan = plans.front();
    for (auto target : ctx.config.targets) {
      const auto test = evaluation_rows(rows, plan, target);
      for (const auto& m : load_split_models(ctx, plan.split_id, target)) {
        if (m.model.kind != ModelKind::GBT && m.model.kind != ModelKind::OBRLM) continue;
        for (const auto& f : gain_importance(m.model, m.label))
          imp.row({std::string(to_string(f.target)), f.model, f.feature, format_double(f.importance)});
        for (const auto& p : partial_dependence(m.model, m.label, test))
          pdp.row({std::string(to_string(p.target)), p.model, p.feature, std::to_string(p.index),
                   format_double(p.value), format_double(p.mean_prediction), format_double(p.centered)});
      }
    }
  }
  imp.save(dir / "importance.csv");
  pdp.save(dir / "pdp.csv");

  report["median_ape"] = median_table(records);
  report["files"] = {"cemh_coefficients.csv", "loto.csv", "residuals.csv", "importance.csv", "pdp.csv"};
  write_text(dir / "report.json", report.dump(2) + "\n");
}

}  // namespace cda
