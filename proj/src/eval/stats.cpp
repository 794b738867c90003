#include "cda/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cda/errors.hpp"
#include "cda/quantile.hpp"

namespace cda {

double ape(double target, double prediction) {
  const double num = std::abs(target - prediction);
  if (target != 0) return num / std::abs(target);
  if (prediction != 0) return num / std::abs(prediction);
  return num;
}

std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Greater: return "greater";
    case Alternative::Less: return "less";
  }
  return "?";
}

Alternative alternative_from_sign(std::span<const double> diffs) {
  if (diffs.empty()) return Alternative::TwoSided;
  const double m = median(std::vector<double>(diffs.begin(), diffs.end()));
  if (m < 0) return Alternative::Less;
  if (m > 0) return Alternative::Greater;
  return Alternative::TwoSided;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> abs_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(x[a]) < std::abs(x[b]); });
  std::vector<double> rank(x.size(), 0.0);
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && std::abs(x[idx[j + 1]]) == std::abs(x[idx[i]])) ++j;
    const double r = static_cast<double>(i + j + 2) / 2;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

namespace {

double tie_term(std::span<const double> x) {
  std::vector<double> a;
  for (double v : x)
    if (v != 0) a.push_back(std::abs(v));
  std::sort(a.begin(), a.end());
  double sum = 0;
  for (std::size_t i = 0; i < a.size();) {
    std::size_t j = i;
    while (j + 1 < a.size() && a[j + 1] == a[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    sum += t * t * t - t;
    i = j + 1;
  }
  return sum;
}

// Null distribution of twice the positive-rank sum (average ranks are
// half-integers, so doubling makes every sum an integer).
std::vector<double> exact_counts(const std::vector<long>& doubled_ranks) {
  const long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    reach += r;
  }
  return counts;
}

}  // namespace

SignedRankResult wilcoxon_paired(std::span<const double> diffs, Alternative alternative, WilcoxonMethod method) {
  SignedRankResult out;
  const auto rank = abs_ranks(diffs);
  std::vector<long> doubled;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] == 0) continue;
    doubled.push_back(std::lround(2 * rank[i]));
    if (diffs[i] > 0) out.statistic += rank[i];
  }
  out.n = doubled.size();
  if (out.n == 0) return out;

  const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && out.n <= kExactWilcoxonLimit);
  if (exact) {
    out.exact = true;
    const auto counts = exact_counts(doubled);
    const double total = std::ldexp(1.0, static_cast<int>(out.n));
    const auto w2 = static_cast<std::size_t>(std::lround(2 * out.statistic));
    double le = 0, ge = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (s <= w2) le += counts[s];
      if (s >= w2) ge += counts[s];
    }
    le /= total;
    ge /= total;
    switch (alternative) {
      case Alternative::TwoSided: out.p_value = std::min(1.0, 2 * std::min(le, ge)); break;
      case Alternative::Greater: out.p_value = ge; break;
      case Alternative::Less: out.p_value = le; break;
    }
    return out;
  }

  const double n = static_cast<double>(out.n);
  const double mean = n * (n + 1) / 4;
  const double var = n * (n + 1) * (2 * n + 1) / 24 - tie_term(diffs) / 48;
  if (!(var > 0)) return out;
  const double sd = std::sqrt(var);
  const double d = out.statistic - mean;
  switch (alternative) {
    case Alternative::TwoSided: {
      const double cc = d > 0 ? 0.5 : (d < 0 ? -0.5 : 0.0);
      out.p_value = std::min(1.0, 2 * normal_sf(std::abs((d - cc) / sd)));
      break;
    }
    case Alternative::Greater: out.p_value = normal_sf((d - 0.5) / sd); break;
    case Alternative::Less: out.p_value = normal_sf(-(d + 0.5) / sd); break;
  }
  return out;
}

double signed_rank_z(std::span<const double> diffs) {
  const auto rank = abs_ranks(diffs);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] == 0) continue;
    num += (diffs[i] > 0 ? 1.0 : -1.0) * rank[i];
    den += rank[i] * rank[i];
  }
  return den > 0 ? num / std::sqrt(den) : 0.0;
}

namespace {

// Number of nonzero |x_j| not exceeding |x_i|; equals the ordinary rank
// without ties and scales exactly when every value is replicated.
std::vector<double> ecdf_ranks(std::span<const double> x) {
  std::vector<double> a;
  for (double v : x)
    if (v != 0) a.push_back(std::abs(v));
  std::sort(a.begin(), a.end());
  std::vector<double> rank(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0) rank[i] = static_cast<double>(std::upper_bound(a.begin(), a.end(), std::abs(x[i])) - a.begin());
  return rank;
}

}  // namespace

ClusteredResult clustered_signed_rank(std::span<const double> diffs, std::span<const std::string> clusters) {
  if (diffs.size() != clusters.size()) throw std::invalid_argument("differences and cluster labels differ in length");
  const auto rank = ecdf_ranks(diffs);
  std::map<std::string, double> sums;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] == 0) continue;
    sums[clusters[i]] += (diffs[i] > 0 ? 1.0 : -1.0) * rank[i];
  }
  if (sums.size() < 2)
    throw InsufficientClusters("clustered signed-rank test needs two clusters with nonzero differences, got " +
                               std::to_string(sums.size()));
  ClusteredResult out;
  out.clusters = sums.size();
  double sq = 0;
  for (const auto& [label, t] : sums) {
    out.statistic += t;
    sq += t * t;
  }
  if (!(sq > 0) || out.statistic == 0) return out;
  out.z = out.statistic / std::sqrt(sq);
  out.p_value = std::min(1.0, 2 * normal_sf(std::abs(out.z)));
  return out;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> out(m);
  double running = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double adj = std::min(1.0, static_cast<double>(m - k) * p_values[order[k]]);
    running = std::max(running, adj);
    out[order[k]] = running;
  }
  return out;
}

AggregatedResult median_aggregate_test(std::span<const double> diffs, std::span<const std::string> clusters) {
  if (diffs.size() != clusters.size()) throw std::invalid_argument("differences and cluster labels differ in length");
  std::map<std::string, std::vector<double>> grouped;
  for (std::size_t i = 0; i < diffs.size(); ++i) grouped[clusters[i]].push_back(diffs[i]);
  if (grouped.size() < 2)
    throw InsufficientClusters("median-aggregated test needs at least two games, got " + std::to_string(grouped.size()));
  AggregatedResult out;
  std::vector<double> medians;
  for (auto& [label, d] : grouped) {
    const double m = median(std::move(d));
    out.cluster_medians[label] = m;
    medians.push_back(m);
  }
  out.median_of_medians = median(medians);
  out.test = wilcoxon_paired(medians, Alternative::TwoSided);
  return out;
}

}  // namespace cda
