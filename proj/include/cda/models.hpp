#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cda/features.hpp"
#include "cda/gbt.hpp"

namespace cda {

enum class TargetKind { AE, CEP };
enum class ModelKind { EMH, CEMH, OBRLM, GBT, TreatmentMean, BookMidpoint };

std::string_view to_string(TargetKind t);
std::string_view to_string(ModelKind k);
TargetKind parse_target(std::string_view s);
ModelKind parse_model_kind(std::string_view s);

// Input families a model may use. Ablations switch families off.
struct FeatureMask {
  bool orderbook = true;
  bool deal_price = true;
  bool treatment = true;  // feedback setting and price rule
  bool round = true;
  bool n_deals = true;

  static FeatureMask full() { return {}; }
  static FeatureMask orderbook_only() { return {true, true, false, false, false}; }
  static FeatureMask no_deal_price() { return {true, false, true, true, true}; }

  bool operator==(const FeatureMask&) const = default;
};

std::string to_string(const FeatureMask& m);
FeatureMask parse_feature_mask(std::string_view s);

// CEMH partitioning of CEP coefficients.
enum class CemhGrouping {
  TreatmentN,       // price rule x feedback x n bucket
  TreatmentNRound,  // same, refit per round on rows of rounds <= r
};

std::string_view to_string(CemhGrouping g);
CemhGrouping parse_cemh_grouping(std::string_view s);

inline constexpr int kNDealsCap = 5;

// Partition key; -1 marks a key component that is not used.
struct GroupKey {
  int feedback = -1;
  int price_rule = -1;
  int n_bucket = -1;

  auto operator<=>(const GroupKey&) const = default;
};

// Per-group scalars (CEMH): each group holds one value per cumulative round
// (round 0 when the model is not round partitioned).
struct GroupedScalars {
  std::map<GroupKey, std::map<int, double>> values;
  double global = 0;
  bool use_feedback = false;
  bool use_price_rule = false;
  bool use_n = false;
  bool use_round = false;
};

// Per-partition linear coefficients (OB-RLM).
struct GroupedLinear {
  std::vector<std::string> columns;  // design columns, excluding the intercept
  bool intercept = false;
  bool use_feedback = false;
  std::map<GroupKey, std::map<int, std::vector<double>>> coef;  // intercept first when present
  std::vector<double> global;
};

struct GbtModel {
  std::vector<std::string> columns;
  GbtParams params;
  TreeEnsemble ensemble;
};

struct TreatmentMeans {
  // Sum and count of the target over distinct (market, round) pairs.
  std::map<std::string, std::pair<double, std::size_t>> by_treatment;
  bool leave_one_out = false;  // score a treatment with the other treatments' mean

  double mean_for(const std::string& treatment) const;
};

struct FittedModel {
  ModelKind kind = ModelKind::EMH;
  TargetKind target = TargetKind::AE;
  FeatureMask mask;
  std::variant<std::monostate, GroupedScalars, GroupedLinear, GbtModel, TreatmentMeans> params;
  // How predictions for unseen groups are produced.
  std::string fallback;
};

struct GbtConfig {
  std::vector<int> depths{4, 6, 8};
  std::vector<int> n_trees{100, 300};
  std::vector<double> learning_rates{0.05, 0.1};
  int min_samples_leaf = 5;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  // Grid used for AE: same sizes shifted one step deeper.
  static GbtConfig default_for(TargetKind target);
};

struct FitOptions {
  FeatureMask mask;
  CemhGrouping cemh_grouping = CemhGrouping::TreatmentNRound;
  GbtConfig gbt;
  bool treatment_mean_loto = false;
};

// EMH: AE = 1, CEP = last deal price (NoRealizedPrice before the first deal).
double predict_emh(const FeatureRow& row, TargetKind target);

FittedModel fit_cemh(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options = {});
FittedModel fit_obrlm(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options = {});
FittedModel fit_gbt(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options = {});
FittedModel fit_treatment_mean(std::span<const FeatureRow> train, TargetKind target, const FitOptions& options = {});
FittedModel make_emh(TargetKind target);
FittedModel fit_book_midpoint(std::span<const FeatureRow> train, const FitOptions& options = {});

FittedModel fit_model(ModelKind kind, std::span<const FeatureRow> train, TargetKind target,
                      const FitOptions& options = {});

// Raw Book-Midpoint rule; `fallback` is used when both sides are empty.
double baseline_book_midpoint(const FeatureRow& row, double fallback);

// Prediction in target units: AE clipped to [0, 1], CEP in money.
// Throws MissingInput or NoRealizedPrice when the row lacks an input.
double predict(const FittedModel& model, const FeatureRow& row);
std::optional<double> try_predict(const FittedModel& model, const FeatureRow& row);

// Named inputs of OB-RLM and GBT models (empty for the other kinds), the
// row's values for them, and the prediction for the row with its inputs
// replaced by `inputs`.
std::vector<std::string> input_columns(const FittedModel& model);
std::vector<double> model_inputs(const FittedModel& model, const FeatureRow& row);
double predict_from_inputs(const FittedModel& model, const FeatureRow& row, std::span<const double> inputs);

// GBT design row for `row` under `mask`, and its column names.
std::vector<std::string> gbt_columns(const FeatureMask& mask);
std::vector<double> gbt_inputs(const FeatureRow& row, const FeatureMask& mask);

// Target value of a row, if known.
std::optional<double> target_of(const FeatureRow& row, TargetKind target);

int n_bucket(int n_deals);

}  // namespace cda
