#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cda/features.hpp"
#include "cda/models.hpp"
#include "cda/stats.hpp"

namespace cda {

struct MarketRef {
  std::string market_id;
  std::string treatment;  // treatment_label of the market
};

std::vector<MarketRef> market_refs(std::span<const MarketLog> markets);

// One train/test partition of the markets. Split 0 is the diagnostics split.
struct SplitPlan {
  int split_id = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> train;  // market ids, sorted
  std::vector<std::string> test;

  bool in_train(const std::string& market_id) const;
  bool in_test(const std::string& market_id) const;
};

// Within every treatment half the markets go to training: floor(n/2) on
// even split ids and ceil(n/2) on odd ones. Throws InsufficientMarkets for
// treatments with fewer than two markets.
std::vector<SplitPlan> make_splits(std::span<const MarketRef> markets, int n_splits = 50, std::uint64_t seed = 0);

enum class RoundClass { R1, R2plus };
enum class DealsClass { D0, D1plus };

struct Bucket {
  RoundClass round = RoundClass::R1;
  DealsClass deals = DealsClass::D0;

  auto operator<=>(const Bucket&) const = default;
};

Bucket bucket_of(int round, int n_deals);
std::string to_string(Bucket b);  // e.g. "R1/D0", "R2+/D1+"
std::vector<Bucket> all_buckets();

struct PredictionRecord {
  int split_id = 0;
  std::string market_id;
  std::string treatment;
  std::size_t row_index = 0;
  int round = 1;
  double time = 0;
  int n_deals = 0;
  std::string model;
  TargetKind target = TargetKind::AE;
  double prediction = 0;
  double target_value = 0;
  double ape = 0;
};

// A model to evaluate; `label` names it in records and reports.
struct ModelSpec {
  ModelKind kind = ModelKind::EMH;
  std::string label;
  FitOptions options;
};

ModelSpec default_spec(ModelKind kind, TargetKind target, std::uint64_t seed = 0);

// Rows of the plan's training markets.
std::vector<FeatureRow> training_rows(std::span<const FeatureRow> rows, const SplitPlan& plan);

// Test rows of a plan that enter evaluation: rows of test markets with both
// book sides and a known target.
std::vector<const FeatureRow*> evaluation_rows(std::span<const FeatureRow> rows, const SplitPlan& plan,
                                               TargetKind target);

struct LabeledModel {
  std::string label;
  FittedModel model;
};

// Scores the plan's evaluation rows with already fitted models.
std::vector<PredictionRecord> predict_split(std::span<const FeatureRow> rows, const SplitPlan& plan, TargetKind target,
                                            std::span<const LabeledModel> models);

// Fits every spec on the plan's training markets and predicts the
// evaluation rows. Rows a model cannot score (for example CEP before the
// first deal for EMH) yield no record. Fitted models are appended to
// `fitted` when given.
std::vector<PredictionRecord> evaluate_split(std::span<const FeatureRow> rows, const SplitPlan& plan,
                                             TargetKind target, std::span<const ModelSpec> specs,
                                             std::vector<FittedModel>* fitted = nullptr);

struct BucketGrouping {
  bool size = false;
  bool feedback = false;
  bool price_rule = false;
};

struct BucketCell {
  TargetKind target = TargetKind::AE;
  std::string model;
  std::string bucket;
  std::string group;  // extra grouping levels joined by '/', empty if none
  std::size_t n = 0;
  std::optional<double> median_ape;  // lower median; empty when the model has no rows in the cell
};

std::vector<BucketCell> bucket_report(std::span<const PredictionRecord> records, BucketGrouping grouping = {});

enum class PairedTest { PerRow, Aggregated, Clustered };

std::string_view to_string(PairedTest t);

struct Comparison {
  TargetKind target = TargetKind::AE;
  PairedTest test = PairedTest::PerRow;
  std::string bucket;
  std::string model_a;
  std::string model_b;
  std::size_t n_pairs = 0;
  std::size_t n_games = 0;
  double median_diff = 0;  // of ape_a - ape_b (of game medians for the aggregated test)
  Alternative alternative = Alternative::TwoSided;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::optional<double> p_holm;  // Holm-adjusted over all comparisons of the call
};

// Paired comparisons of every model pair in every bucket, matching records
// on (split, market, row). Games are (treatment, market) clusters.
std::vector<Comparison> pairwise_comparisons(std::span<const PredictionRecord> records, TargetKind target,
                                             std::span<const std::string> models, PairedTest test);

enum class AblationKind { OrderbookOnly, NoDealPrice };

std::string_view to_string(AblationKind k);
AblationKind parse_ablation_kind(std::string_view s);

struct AblationCell {
  TargetKind target = TargetKind::AE;
  std::string model;
  std::string bucket;
  std::size_t n = 0;
  std::optional<double> original;
  std::optional<double> ablated;
  bool identical = true;  // every paired prediction bit-identical
};

struct AblationResult {
  AblationKind kind = AblationKind::OrderbookOnly;
  std::vector<PredictionRecord> original;
  std::vector<PredictionRecord> ablated;
  std::vector<AblationCell> cells;
};

// Applicable models of an ablation and the masks they are refit with.
std::vector<std::pair<ModelKind, TargetKind>> ablation_models(AblationKind kind);
FeatureMask ablation_mask(AblationKind kind);

struct AblationOptions {
  std::uint64_t seed = 0;
  std::optional<GbtConfig> gbt_ae;  // default grids when empty
  std::optional<GbtConfig> gbt_cep;
  CemhGrouping cemh_grouping = CemhGrouping::TreatmentNRound;
};

// Refits the applicable models with the ablated mask on every plan and
// pairs their test predictions with the original fits. Without a realized
// price the deal-price input is absent in both variants, so the realized
// price ablation scores rows without deals with the original fit.
AblationResult run_ablation(AblationKind kind, std::span<const FeatureRow> rows, std::span<const SplitPlan> plans,
                            const AblationOptions& options = {});

struct ResidualSummary {
  TargetKind target = TargetKind::AE;
  std::string model;
  std::string bucket;
  std::size_t n = 0;
  double mean = 0;  // of prediction - target
  double std = 0;
  double median_ape = 0;
};

struct FeatureImportance {
  TargetKind target = TargetKind::AE;
  std::string model;
  std::string feature;
  double importance = 0;  // share of the total split gain
};

struct PdpPoint {
  TargetKind target = TargetKind::AE;
  std::string model;
  std::string feature;
  int index = 0;
  double value = 0;
  double mean_prediction = 0;  // target units
  double centered = 0;         // minus the grand-mean prediction
};

struct Diagnostics {
  std::vector<ResidualSummary> residuals;
  std::vector<FeatureImportance> importance;
  std::vector<PdpPoint> pdp;
};

struct DiagnosticsOptions {
  int grid_points = 21;
  double lower_quantile = 0.02;
  double upper_quantile = 0.98;
  std::size_t max_rows = 400;  // test rows used for the sweeps
};

std::vector<ResidualSummary> residual_summaries(std::span<const PredictionRecord> records);
std::vector<FeatureImportance> gain_importance(const FittedModel& model, const std::string& label);
std::vector<PdpPoint> partial_dependence(const FittedModel& model, const std::string& label,
                                         std::span<const FeatureRow* const> rows, const DiagnosticsOptions& options = {});

}  // namespace cda
