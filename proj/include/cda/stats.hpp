#pragma once
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cda {

// Absolute percentage error. A zero target divides by the prediction
// instead, or by one when the prediction is zero as well.
double ape(double target, double prediction);

enum class Alternative { TwoSided, Greater, Less };
enum class WilcoxonMethod { Auto, Exact, Normal };

std::string_view to_string(Alternative a);

// Alternative matching the sign of the median difference (Less when
// negative, Greater when positive, TwoSided when zero).
Alternative alternative_from_sign(std::span<const double> diffs);

struct SignedRankResult {
  double statistic = 0;  // sum of the ranks of positive differences
  double p_value = 1;
  std::size_t n = 0;  // nonzero differences
  bool exact = false;
};

inline constexpr std::size_t kExactWilcoxonLimit = 25;

// Paired signed-rank test on differences. Zeros are dropped and ties get
// average ranks. Exact null distribution up to kExactWilcoxonLimit nonzero
// differences, otherwise the normal approximation with continuity and tie
// correction. All-zero input gives p = 1.
SignedRankResult wilcoxon_paired(std::span<const double> diffs, Alternative alternative = Alternative::TwoSided,
                                 WilcoxonMethod method = WilcoxonMethod::Auto);

// Average ranks of |x| for the nonzero entries of x (0 for zero entries).
std::vector<double> abs_ranks(std::span<const double> x);

// Large-sample signed-rank z without continuity correction:
// sum(sign * rank) / sqrt(sum(rank^2)).
double signed_rank_z(std::span<const double> diffs);

struct ClusteredResult {
  double statistic = 0;  // sum of the per-cluster signed-rank sums
  double z = 0;
  double p_value = 1;
  std::size_t clusters = 0;
};

// Cluster-aware signed-rank test. Ranks all differences jointly (a tied
// group takes its highest position, i.e. N times the empirical CDF), sums the
// signed ranks within each cluster and studentizes the total by the root of
// the summed squared cluster sums. Two-sided normal p-value. Throws
// InsufficientClusters when fewer than two clusters carry a nonzero
// difference.
ClusteredResult clustered_signed_rank(std::span<const double> diffs, std::span<const std::string> clusters);

// Holm step-down adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct AggregatedResult {
  std::map<std::string, double> cluster_medians;
  double median_of_medians = 0;
  SignedRankResult test;
};

// Collapses each cluster to its median difference and runs a two-sided
// signed-rank test on those medians. Throws InsufficientClusters when fewer
// than two clusters are present.
AggregatedResult median_aggregate_test(std::span<const double> diffs, std::span<const std::string> clusters);

// Standard normal upper tail P(Z > z).
double normal_sf(double z);

}  // namespace cda
