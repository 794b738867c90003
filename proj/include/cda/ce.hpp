#pragma once
#include <cstddef>
#include <optional>
#include <vector>

#include "cda/types.hpp"

namespace cda {

// Buyer budgets in descending order and seller costs in ascending order.
// `*_index[k]` is the position of the k-th sorted entry in the profile.
struct SortedValuations {
  std::vector<Money> buyers_desc;
  std::vector<Money> sellers_asc;
  std::vector<std::size_t> buyer_index;
  std::vector<std::size_t> seller_index;
};

SortedValuations sort_valuations(const ReservationProfile& profile);

// Competitive equilibrium of a single-unit market. `k_star` is 1-based and
// counts the marginal pair; all price fields are empty iff no buyer values
// the good at least as much as some seller.
struct CeSolution {
  std::optional<std::size_t> k_star;
  std::optional<Money> p_lower;
  std::optional<Money> p_upper;
  std::optional<Money> p_mid;
  Money got_max = 0;
};

CeSolution compute_ce(const ReservationProfile& profile);

struct EfficiencyReport {
  Money got_realized = 0;
  std::optional<double> ae;  // empty when got_max == 0
};

// Realized gains of trade of the round's deals against `profile`.
// Extramarginal trades contribute negative surplus. Throws UnknownTrader.
EfficiencyReport compute_realized_got(const ReservationProfile& profile, const RoundLog& round);

// Round-level ground truth: the profile restricted to the round's active
// traders, its CE, and the realized efficiency.
struct RoundTruth {
  CeSolution ce;
  EfficiencyReport efficiency;
};

RoundTruth round_truth(const ReservationProfile& profile, const RoundLog& round);

}  // namespace cda
