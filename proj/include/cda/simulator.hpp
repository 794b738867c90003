#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "cda/rng.hpp"
#include "cda/types.hpp"

namespace cda {

// Submission order of a resting order: time first, then arrival sequence.
struct Stamp {
  double time = 0;
  std::uint64_t seq = 0;

  auto operator<=>(const Stamp&) const = default;
};

struct RestingOrder {
  TraderId trader;
  Money price = 0;
  Stamp stamp;
};

struct SettledPrice {
  Money price = 0;
  Money buyer_price = 0;
  Money seller_price = 0;
};

// Trade price of a crossing pair. Throws NonCrossing when bid < ask.
SettledPrice settle_price(Money bid, Money ask, Stamp bid_stamp, Stamp ask_stamp, PriceRule rule, Rng& rng);

// Live book of one round. Each trader holds at most one order; traders that
// dealt are retired until the next round.
class BookState {
 public:
  const std::map<TraderId, RestingOrder>& bids() const noexcept { return bids_; }
  const std::map<TraderId, RestingOrder>& asks() const noexcept { return asks_; }
  const std::set<TraderId>& traded() const noexcept { return traded_; }

  std::optional<RestingOrder> best_bid() const;
  std::optional<RestingOrder> best_ask() const;

  void reset();

 private:
  friend std::optional<Deal> submit_order(BookState&, const OrderEvent&, PriceRule, Rng&);

  std::map<TraderId, RestingOrder> bids_;
  std::map<TraderId, RestingOrder> asks_;
  std::set<TraderId> traded_;
  std::uint64_t next_seq_ = 0;
};

// Record `event` (replacing the trader's previous order) and match it
// against the best opposite order. Throws TraderRetired.
std::optional<Deal> submit_order(BookState& book, const OrderEvent& event, PriceRule rule, Rng& rng);

struct PriceRange {
  Money min = 1;
  Money max = 200;
};

// Zero-intelligence quote: buyers draw uniformly on [range.min, value],
// sellers on [value, range.max]. Throws InfeasibleRange.
Money zi_quote(Side side, Money reservation_value, PriceRange range, Rng& rng);

struct SimConfig {
  std::string market_id = "M1";
  int n_buyers = 10;
  int n_sellers = 10;
  // Reservation values are uniform integers on [value_min, value_max].
  int value_min = 1;
  int value_max = 200;
  FeedbackSetting feedback = FeedbackSetting::Full;
  PriceRule price_rule = PriceRule::First;
  int rounds = 10;
  int actions_per_round = 100;
  PriceRange quote_range{};
  // Mean number of actions per second of the Poisson action clock.
  double action_rate = 1.0;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

// Simulate one market of ZI traders; deterministic in `config.rng_seed`.
MarketLog run_market(const SimConfig& config);

// Same as run_market but with caller-supplied reservation values.
MarketLog run_market(const SimConfig& config, const ReservationProfile& profile);

}  // namespace cda
