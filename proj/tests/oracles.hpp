#pragma once
// Independent reference computations used by the unit and acceptance tests.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

// Maximum of sum(beta - sigma) over matchings of buyers to sellers using only
// pairs with beta >= sigma, by dynamic programming over seller subsets.
inline double max_surplus(const std::vector<double>& buyers, const std::vector<double>& sellers) {
  const std::size_t ns = sellers.size();
  const std::size_t full = std::size_t{1} << ns;
  std::vector<double> best(full, -1.0);
  best[0] = 0;
  for (double b : buyers) {
    std::vector<double> next = best;
    for (std::size_t mask = 0; mask < full; ++mask) {
      if (best[mask] < 0) continue;
      for (std::size_t j = 0; j < ns; ++j) {
        if (mask & (std::size_t{1} << j)) continue;
        if (b < sellers[j]) continue;
        auto& slot = next[mask | (std::size_t{1} << j)];
        slot = std::max(slot, best[mask] + (b - sellers[j]));
      }
    }
    best = std::move(next);
  }
  return *std::max_element(best.begin(), best.end());
}

// p clears the market iff #{beta > p} <= #{sigma <= p} and #{sigma < p} <= #{beta >= p}.
inline bool is_clearing(const std::vector<double>& buyers, const std::vector<double>& sellers, double p) {
  const auto above = std::count_if(buyers.begin(), buyers.end(), [&](double b) { return b > p; });
  const auto at_or_above = std::count_if(buyers.begin(), buyers.end(), [&](double b) { return b >= p; });
  const auto at_or_below = std::count_if(sellers.begin(), sellers.end(), [&](double s) { return s <= p; });
  const auto below = std::count_if(sellers.begin(), sellers.end(), [&](double s) { return s < p; });
  return above <= at_or_below && below <= at_or_above;
}

// Probe prices: every value, midpoints between neighbouring values, and one
// point beyond each end.
inline std::vector<double> probe_prices(const std::vector<double>& buyers, const std::vector<double>& sellers) {
  std::set<double> values(buyers.begin(), buyers.end());
  values.insert(sellers.begin(), sellers.end());
  std::vector<double> v(values.begin(), values.end());
  std::vector<double> probes;
  if (v.empty()) return probes;
  probes.push_back(v.front() - 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    probes.push_back(v[i]);
    if (i + 1 < v.size()) probes.push_back((v[i] + v[i + 1]) / 2);
  }
  probes.push_back(v.back() + 1);
  return probes;
}

// Smallest and largest clearing probe price.
inline std::optional<std::pair<double, double>> clearing_interval(const std::vector<double>& buyers,
                                                                  const std::vector<double>& sellers) {
  std::optional<std::pair<double, double>> out;
  for (double p : probe_prices(buyers, sellers)) {
    if (!is_clearing(buyers, sellers, p)) continue;
    if (!out) out = std::pair{p, p};
    out->first = std::min(out->first, p);
    out->second = std::max(out->second, p);
  }
  return out;
}

// Two-sided exact signed-rank p-value by enumerating all 2^n sign patterns
// of the ranks of the nonzero differences (average ranks for ties).
inline double wilcoxon_enumerated(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0) d.push_back(x);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double r = (static_cast<double>(i + j) + 2) / 2;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) observed += rank[i];
  std::uint64_t le = 0, ge = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) w += rank[i];
    if (w <= observed + 1e-9) ++le;
    if (w >= observed - 1e-9) ++ge;
  }
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
  return std::min(1.0, p);
}

// Median by sorting; lower central value for even counts.
inline double lower_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline double conventional_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace oracle
