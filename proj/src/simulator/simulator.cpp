#include "cda/simulator.hpp"

#include <vector>

#include "cda/errors.hpp"

namespace cda {

namespace {

// Better-priced order wins; equal prices go to the earlier submission.
template <typename Better>
std::optional<RestingOrder> best_of(const std::map<TraderId, RestingOrder>& side, Better better) {
  std::optional<RestingOrder> best;
  for (const auto& [id, order] : side) {
    if (!best || better(order.price, best->price) ||
        (order.price == best->price && order.stamp < best->stamp))
      best = order;
  }
  return best;
}

}  // namespace

SettledPrice settle_price(Money bid, Money ask, Stamp bid_stamp, Stamp ask_stamp, PriceRule rule, Rng& rng) {
  if (bid < ask) throw NonCrossing("bid " + std::to_string(bid) + " is below ask " + std::to_string(ask));
  switch (rule) {
    case PriceRule::First: {
      const Money p = bid_stamp < ask_stamp ? bid : ask;
      return {p, p, p};
    }
    case PriceRule::Random: {
      const Money p = rng.uniform(ask, bid);
      return {p, p, p};
    }
    case PriceRule::MMK:
      return {(bid + ask) / 2, bid, ask};
  }
  return {};
}

std::optional<RestingOrder> BookState::best_bid() const {
  return best_of(bids_, [](Money a, Money b) { return a > b; });
}

std::optional<RestingOrder> BookState::best_ask() const {
  return best_of(asks_, [](Money a, Money b) { return a < b; });
}

void BookState::reset() {
  bids_.clear();
  asks_.clear();
  traded_.clear();
  next_seq_ = 0;
}

std::optional<Deal> submit_order(BookState& book, const OrderEvent& event, PriceRule rule, Rng& rng) {
  if (book.traded_.contains(event.actor_id))
    throw TraderRetired("trader '" + event.actor_id + "' already traded in round " + std::to_string(event.round));

  const RestingOrder incoming{event.actor_id, event.price, Stamp{event.time, book.next_seq_++}};
  const bool is_bid = event.side == Side::Bid;
  auto& own = is_bid ? book.bids_ : book.asks_;
  auto& opposite = is_bid ? book.asks_ : book.bids_;
  own[event.actor_id] = incoming;

  const auto counter = is_bid ? book.best_ask() : book.best_bid();
  if (!counter) return std::nullopt;
  const RestingOrder& bid = is_bid ? incoming : *counter;
  const RestingOrder& ask = is_bid ? *counter : incoming;
  if (bid.price < ask.price) return std::nullopt;

  const auto settled = settle_price(bid.price, ask.price, bid.stamp, ask.stamp, rule, rng);
  Deal deal{event.time, event.round, bid.trader, ask.trader, settled.price, settled.buyer_price, settled.seller_price};

  own.erase(incoming.trader);
  opposite.erase(counter->trader);
  book.traded_.insert(deal.buyer_id);
  book.traded_.insert(deal.seller_id);
  return deal;
}

Money zi_quote(Side side, Money reservation_value, PriceRange range, Rng& rng) {
  if (!(range.min <= range.max))
    throw InfeasibleRange("empty quote range [" + std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
  if (reservation_value < range.min || reservation_value > range.max)
    throw InfeasibleRange("reservation value " + std::to_string(reservation_value) + " outside [" +
                          std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
  return side == Side::Bid ? rng.uniform(range.min, reservation_value) : rng.uniform(reservation_value, range.max);
}

void SimConfig::validate() const {
  if (n_buyers < 0 || n_sellers < 0 || n_buyers + n_sellers < 2)
    throw ConfigError("simulation needs at least two traders");
  if (rounds < 1) throw ConfigError("rounds must be positive");
  if (actions_per_round < n_buyers + n_sellers)
    throw ConfigError("actions_per_round must be at least the number of traders");
  if (value_min > value_max || value_min <= 0) throw ConfigError("invalid reservation value range");
  if (value_min < quote_range.min || value_max > quote_range.max)
    throw ConfigError("reservation values must lie inside the quote range");
  if (!(action_rate > 0)) throw ConfigError("action_rate must be positive");
}

MarketLog run_market(const SimConfig& config) {
  config.validate();
  Rng rng(mix_seed(config.rng_seed, 0));
  std::vector<Money> budgets(static_cast<std::size_t>(config.n_buyers));
  std::vector<Money> costs(static_cast<std::size_t>(config.n_sellers));
  for (auto& b : budgets) b = static_cast<Money>(rng.uniform_int(config.value_min, config.value_max));
  for (auto& c : costs) c = static_cast<Money>(rng.uniform_int(config.value_min, config.value_max));
  return run_market(config, ReservationProfile::from_values(budgets, costs));
}

MarketLog run_market(const SimConfig& config, const ReservationProfile& profile) {
  struct Trader {
    const Valuation* valuation;
    Side side;
  };
  std::vector<Trader> traders;
  for (const auto& b : profile.buyers) traders.push_back({&b, Side::Bid});
  for (const auto& s : profile.sellers) traders.push_back({&s, Side::Ask});
  if (traders.size() < 2) throw ConfigError("simulation needs at least two traders");
  if (config.actions_per_round < static_cast<int>(traders.size()))
    throw ConfigError("actions_per_round must be at least the number of traders");

  MarketLog log;
  log.market_id = config.market_id;
  log.treatment = {config.feedback, config.price_rule, size_class_for(traders.size())};
  log.profile = profile;

  Rng rng(mix_seed(config.rng_seed, 1));
  BookState book;
  for (int r = 1; r <= config.rounds; ++r) {
    RoundLog round;
    round.round = r;
    for (const auto& t : traders) round.active_traders.insert(t.valuation->id);
    book.reset();

    double clock = 0;
    int actions = 0;
    // Passes over a fresh random permutation of the traders still in the
    // market, so every trader acts at least once per round.
    while (actions < config.actions_per_round) {
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < traders.size(); ++i)
        if (!book.traded().contains(traders[i].valuation->id)) order.push_back(i);
      if (order.empty()) break;
      rng.shuffle(std::span<std::size_t>(order));
      for (auto i : order) {
        if (actions >= config.actions_per_round) break;
        const auto& t = traders[i];
        if (book.traded().contains(t.valuation->id)) continue;
        clock += rng.exponential(config.action_rate);
        const Money quote = zi_quote(t.side, t.valuation->value, config.quote_range, rng);
        OrderEvent ev{clock, r, t.valuation->id, t.side, quote};
        round.events.push_back(ev);
        ++actions;
        if (auto deal = submit_order(book, ev, config.price_rule, rng)) round.deals.push_back(*deal);
      }
    }
    log.rounds.push_back(std::move(round));
  }
  return log;
}

}  // namespace cda
