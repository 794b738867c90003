#include "cda/ce.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cda/errors.hpp"

namespace cda {

SortedValuations sort_valuations(const ReservationProfile& profile) {
  SortedValuations out;
  out.buyer_index.resize(profile.buyers.size());
  out.seller_index.resize(profile.sellers.size());
  std::iota(out.buyer_index.begin(), out.buyer_index.end(), std::size_t{0});
  std::iota(out.seller_index.begin(), out.seller_index.end(), std::size_t{0});
  std::stable_sort(out.buyer_index.begin(), out.buyer_index.end(), [&](std::size_t a, std::size_t b) {
    return profile.buyers[a].value > profile.buyers[b].value;
  });
  std::stable_sort(out.seller_index.begin(), out.seller_index.end(), [&](std::size_t a, std::size_t b) {
    return profile.sellers[a].value < profile.sellers[b].value;
  });
  for (auto i : out.buyer_index) out.buyers_desc.push_back(profile.buyers[i].value);
  for (auto j : out.seller_index) out.sellers_asc.push_back(profile.sellers[j].value);
  return out;
}

CeSolution compute_ce(const ReservationProfile& profile) {
  const auto sorted = sort_valuations(profile);
  const auto& beta = sorted.buyers_desc;
  const auto& sigma = sorted.sellers_asc;
  const std::size_t pairs = std::min(beta.size(), sigma.size());

  // Marginal pair: the smallest nonnegative gap, ties resolved toward the
  // deeper index. Gaps are nonincreasing in k, so this is the last
  // intramarginal pair.
  std::optional<std::size_t> k;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Money gap = beta[i] - sigma[i];
    if (gap < 0) continue;
    if (!k || gap <= beta[*k] - sigma[*k]) k = i;
  }

  CeSolution sol;
  if (!k) return sol;

  const std::size_t m = *k;
  for (std::size_t i = 0; i <= m; ++i) sol.got_max += beta[i] - sigma[i];

  const Money lower = (m + 1 == beta.size()) ? sigma[m] : std::max(sigma[m], beta[m + 1]);
  // The upper bound is capped by the first extramarginal seller (min, not max).
  const Money upper = (m + 1 == sigma.size()) ? beta[m] : std::min(beta[m], sigma[m + 1]);

  sol.k_star = m + 1;
  sol.p_lower = lower;
  sol.p_upper = upper;
  sol.p_mid = (lower + upper) / 2;
  return sol;
}

EfficiencyReport compute_realized_got(const ReservationProfile& profile, const RoundLog& round) {
  std::map<TraderId, Money> budgets;
  std::map<TraderId, Money> costs;
  for (const auto& b : profile.buyers) budgets[b.id] = b.value;
  for (const auto& s : profile.sellers) costs[s.id] = s.value;

  EfficiencyReport report;
  for (const auto& d : round.deals) {
    const auto b = budgets.find(d.buyer_id);
    if (b == budgets.end())
      throw UnknownTrader("deal in round " + std::to_string(round.round) + " references unknown buyer '" +
                          d.buyer_id + "'");
    const auto s = costs.find(d.seller_id);
    if (s == costs.end())
      throw UnknownTrader("deal in round " + std::to_string(round.round) + " references unknown seller '" +
                          d.seller_id + "'");
    report.got_realized += b->second - s->second;
  }

  const auto ce = compute_ce(profile);
  if (ce.got_max > 0) report.ae = report.got_realized / ce.got_max;
  return report;
}

RoundTruth round_truth(const ReservationProfile& profile, const RoundLog& round) {
  const auto active = profile.restricted_to(round.active_traders);
  RoundTruth truth;
  truth.ce = compute_ce(active);
  // Deals are resolved against the full profile so that a trader missing
  // from the active set is still an integrity error, not a silent skip.
  truth.efficiency = compute_realized_got(profile, round);
  truth.efficiency.ae.reset();
  if (truth.ce.got_max > 0) truth.efficiency.ae = truth.efficiency.got_realized / truth.ce.got_max;
  return truth;
}

}  // namespace cda
