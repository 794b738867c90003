#pragma once
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cda {

// Prices, budgets and costs in currency units.
using Money = double;
using TraderId = std::string;

enum class FeedbackSetting : std::uint8_t { BlackBox, Full, Same, Other };
enum class PriceRule : std::uint8_t { First, Random, MMK };
enum class SizeClass : std::uint8_t { Small, Large };
enum class Side : std::uint8_t { Bid, Ask };

inline constexpr int kFeedbackLevels = 4;
inline constexpr int kPriceRuleLevels = 3;
inline constexpr int kLargeMarketTraders = 15;

std::string_view to_string(FeedbackSetting f);
std::string_view to_string(PriceRule r);
std::string_view to_string(SizeClass s);
FeedbackSetting parse_feedback(std::string_view s);
PriceRule parse_price_rule(std::string_view s);
SizeClass parse_size_class(std::string_view s);

inline SizeClass size_class_for(std::size_t traders_in_first_round) {
  return traders_in_first_round >= kLargeMarketTraders ? SizeClass::Large : SizeClass::Small;
}

struct Treatment {
  FeedbackSetting feedback = FeedbackSetting::Full;
  PriceRule price_rule = PriceRule::First;
  SizeClass size = SizeClass::Small;

  auto operator<=>(const Treatment&) const = default;
};

// Short label such as "Full/First/Small"; used as the treatment key in
// splits, baselines and reports.
std::string treatment_label(const Treatment& t);

struct Valuation {
  TraderId id;
  Money value = 0;
};

// Induced buyer budgets and seller costs for one market.
struct ReservationProfile {
  std::vector<Valuation> buyers;
  std::vector<Valuation> sellers;

  static ReservationProfile from_values(const std::vector<Money>& budgets,
                                        const std::vector<Money>& costs);
  std::vector<Money> buyer_budgets() const;
  std::vector<Money> seller_costs() const;

  // Profile limited to the given traders (all of them when `ids` is empty).
  ReservationProfile restricted_to(const std::set<TraderId>& ids) const;
  // Multiply every reservation value by `factor`.
  ReservationProfile scaled(double factor) const;
};

struct OrderEvent {
  double time = 0;
  int round = 1;
  TraderId actor_id;
  Side side = Side::Bid;
  Money price = 0;

  bool operator==(const OrderEvent&) const = default;
};

struct Deal {
  double time = 0;
  int round = 1;
  TraderId buyer_id;
  TraderId seller_id;
  Money price = 0;
  Money buyer_price = 0;
  Money seller_price = 0;

  bool operator==(const Deal&) const = default;
};

struct RoundLog {
  int round = 1;
  std::vector<OrderEvent> events;
  std::vector<Deal> deals;
  std::set<TraderId> active_traders;

  bool operator==(const RoundLog&) const = default;
};

struct MarketLog {
  std::string market_id;
  Treatment treatment;
  std::vector<RoundLog> rounds;
  std::optional<ReservationProfile> profile;

  // Every price in the log and the profile multiplied by `factor`.
  MarketLog scaled(double factor) const;
};

bool operator==(const Valuation& a, const Valuation& b);
bool operator==(const ReservationProfile& a, const ReservationProfile& b);
bool operator==(const MarketLog& a, const MarketLog& b);

}  // namespace cda
