#include "cda/features.hpp"

#include <algorithm>
#include <map>

#include "cda/ce.hpp"
#include "cda/errors.hpp"
#include "cda/quantile.hpp"

namespace cda {

DecileVector decile_vector(std::span<const Money> prices) {
  if (prices.empty()) throw EmptySide("decile vector of an empty order set");
  std::vector<double> sorted(prices.begin(), prices.end());
  std::sort(sorted.begin(), sorted.end());
  DecileVector out;
  out.count = sorted.size();
  for (std::size_t i = 0; i < kDeciles; ++i)
    out.values[i] = quantile_sorted(sorted, static_cast<double>(i) / 10.0);
  return out;
}

NormalizationConstants make_norm(const DecileVector& bids, const DecileVector& asks) {
  std::array<double, kBookEntries> x{};
  std::copy(bids.values.begin(), bids.values.end(), x.begin());
  std::copy(asks.values.begin(), asks.values.end(), x.begin() + kDeciles);
  std::sort(x.begin(), x.end());
  NormalizationConstants norm;
  norm.center = quantile_sorted(x, 0.5);
  norm.scale = quantile_sorted(x, 0.65) - quantile_sorted(x, 0.35);
  if (!(norm.scale > 0)) {
    // The central band collapsed. Fall back to the full range, which keeps
    // the features scale-free; only a fully collapsed book uses 1.
    const double range = x.back() - x.front();
    norm.scale = range > 0 ? range : 1.0;
  }
  return norm;
}

std::string_view to_string(Cadence c) { return c == Cadence::PerAction ? "per_action" : "per_deal"; }

std::string_view to_string(PoolPolicy p) {
  return p == PoolPolicy::PerTraderLatest ? "per_trader_latest" : "all_submissions";
}

Cadence parse_cadence(std::string_view s) {
  if (s == "per_action") return Cadence::PerAction;
  if (s == "per_deal") return Cadence::PerDeal;
  throw ConfigError("unknown cadence '" + std::string(s) + "'");
}

PoolPolicy parse_pool_policy(std::string_view s) {
  if (s == "per_trader_latest") return PoolPolicy::PerTraderLatest;
  if (s == "all_submissions") return PoolPolicy::AllSubmissions;
  throw ConfigError("unknown pool policy '" + std::string(s) + "'");
}

std::array<double, kBookEntries> FeatureRow::raw_book() const {
  if (!bids) throw MissingInput("bid deciles");
  if (!asks) throw MissingInput("ask deciles");
  std::array<double, kBookEntries> out{};
  std::copy(bids->values.begin(), bids->values.end(), out.begin());
  std::copy(asks->values.begin(), asks->values.end(), out.begin() + kDeciles);
  return out;
}

std::array<double, kBookEntries> FeatureRow::normalized_book() const {
  auto out = raw_book();
  for (auto& v : out) v = normalize(v, *norm);
  return out;
}

double FeatureRow::normalized_deal_price() const {
  if (!last_deal_price) return 0.0;
  if (!norm) throw MissingInput("normalization constants");
  return normalize(*last_deal_price, *norm);
}

namespace {

class QuotePool {
 public:
  explicit QuotePool(PoolPolicy policy) : policy_(policy) {}

  void add(const OrderEvent& e) {
    if (policy_ == PoolPolicy::PerTraderLatest) {
      latest_[e.actor_id] = e.price;
    } else {
      all_.push_back(e.price);
    }
  }

  std::optional<DecileVector> deciles() const {
    if (policy_ == PoolPolicy::AllSubmissions) {
      if (all_.empty()) return std::nullopt;
      return decile_vector(all_);
    }
    if (latest_.empty()) return std::nullopt;
    std::vector<Money> prices;
    prices.reserve(latest_.size());
    for (const auto& [id, p] : latest_) prices.push_back(p);
    return decile_vector(prices);
  }

 private:
  PoolPolicy policy_;
  std::map<TraderId, Money> latest_;
  std::vector<Money> all_;
};

struct RoundTargets {
  std::optional<double> ae;
  std::optional<Money> cep;
};

}  // namespace

std::vector<FeatureRow> snapshot_stream(const MarketLog& market, SnapshotOptions options) {
  std::vector<FeatureRow> rows;
  for (const auto& round : market.rounds) {
    RoundTargets targets;
    if (market.profile) {
      const auto truth = round_truth(*market.profile, round);
      targets.ae = truth.efficiency.ae;
      targets.cep = truth.ce.p_mid;
    }

    QuotePool bid_pool(options.pool);
    QuotePool ask_pool(options.pool);
    std::size_t next_event = 0;
    std::size_t deals_seen = 0;

    auto emit = [&](double tau) {
      while (deals_seen < round.deals.size() && round.deals[deals_seen].time <= tau) ++deals_seen;
      FeatureRow row;
      row.market_id = market.market_id;
      row.row_index = rows.size();
      row.round = round.round;
      row.time = tau;
      row.treatment = market.treatment;
      row.bids = bid_pool.deciles();
      row.asks = ask_pool.deciles();
      if (row.bids && row.asks) row.norm = make_norm(*row.bids, *row.asks);
      row.n_deals = static_cast<int>(deals_seen);
      if (deals_seen > 0) row.last_deal_price = round.deals[deals_seen - 1].price;
      row.ae_round = targets.ae;
      row.cep_mid = targets.cep;
      rows.push_back(std::move(row));
    };

    if (options.cadence == Cadence::PerAction) {
      for (const auto& e : round.events) {
        (e.side == Side::Bid ? bid_pool : ask_pool).add(e);
        emit(e.time);
      }
    } else {
      for (const auto& d : round.deals) {
        while (next_event < round.events.size() && round.events[next_event].time <= d.time) {
          const auto& e = round.events[next_event++];
          (e.side == Side::Bid ? bid_pool : ask_pool).add(e);
        }
        emit(d.time);
      }
    }
  }
  return rows;
}

std::vector<FeatureRow> snapshot_corpus(std::span<const MarketLog> markets, SnapshotOptions options) {
  std::vector<FeatureRow> rows;
  for (const auto& m : markets) {
    auto part = snapshot_stream(m, options);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

}  // namespace cda
