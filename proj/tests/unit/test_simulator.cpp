#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cda/ce.hpp"
#include "cda/errors.hpp"
#include "cda/quantile.hpp"
#include "cda/simulator.hpp"

using namespace cda;

namespace {

OrderEvent order(double t, const std::string& who, Side side, Money price) { return {t, 1, who, side, price}; }

}  // namespace

TEST(SettlePrice, FirstUsesEarlierOrder) {
  Rng rng(1);
  EXPECT_EQ(settle_price(10, 8, {1, 0}, {2, 1}, PriceRule::First, rng).price, 10);
  EXPECT_EQ(settle_price(10, 8, {2, 1}, {1, 0}, PriceRule::First, rng).price, 8);
}

TEST(SettlePrice, RandomDegenerateAndContained) {
  Rng rng(1);
  const auto s = settle_price(9, 9, {1, 0}, {2, 1}, PriceRule::Random, rng);
  EXPECT_EQ(s.price, 9);
  for (int i = 0; i < 1000; ++i) {
    const auto r = settle_price(12, 4, {1, 0}, {2, 1}, PriceRule::Random, rng);
    EXPECT_GE(r.price, 4);
    EXPECT_LE(r.price, 12);
    EXPECT_EQ(r.buyer_price, r.price);
    EXPECT_EQ(r.seller_price, r.price);
  }
}

TEST(SettlePrice, MmkKeepsSpread) {
  Rng rng(1);
  const auto s = settle_price(10, 8, {1, 0}, {2, 1}, PriceRule::MMK, rng);
  EXPECT_EQ(s.price, 9);
  EXPECT_EQ(s.buyer_price, 10);
  EXPECT_EQ(s.seller_price, 8);
}

TEST(SettlePrice, NonCrossing) {
  Rng rng(1);
  EXPECT_THROW(settle_price(7, 8, {1, 0}, {2, 1}, PriceRule::First, rng), NonCrossing);
}

TEST(SubmitOrder, CrossingAskTradesAtRestingBid) {
  BookState book;
  Rng rng(1);
  EXPECT_FALSE(submit_order(book, order(1, "B1", Side::Bid, 10), PriceRule::First, rng));
  const auto deal = submit_order(book, order(2, "S1", Side::Ask, 8), PriceRule::First, rng);
  ASSERT_TRUE(deal);
  EXPECT_EQ(deal->price, 10);
  EXPECT_EQ(deal->buyer_id, "B1");
  EXPECT_EQ(deal->seller_id, "S1");
  EXPECT_EQ(deal->time, 2);
  EXPECT_TRUE(book.bids().empty());
  EXPECT_TRUE(book.asks().empty());
  EXPECT_EQ(book.traded(), (std::set<TraderId>{"B1", "S1"}));
}

TEST(SubmitOrder, MmkDeal) {
  BookState book;
  Rng rng(1);
  submit_order(book, order(1, "B1", Side::Bid, 10), PriceRule::MMK, rng);
  const auto deal = submit_order(book, order(2, "S1", Side::Ask, 8), PriceRule::MMK, rng);
  ASSERT_TRUE(deal);
  EXPECT_EQ(deal->price, 9);
  EXPECT_EQ(deal->buyer_price, 10);
  EXPECT_EQ(deal->seller_price, 8);
}

TEST(SubmitOrder, NoCrossingUpdatesBook) {
  BookState book;
  Rng rng(1);
  submit_order(book, order(1, "S1", Side::Ask, 8), PriceRule::First, rng);
  EXPECT_FALSE(submit_order(book, order(2, "B1", Side::Bid, 7), PriceRule::First, rng));
  EXPECT_EQ(book.bids().at("B1").price, 7);
  EXPECT_EQ(book.best_ask()->price, 8);
}

TEST(SubmitOrder, OverwriteReplacesOrder) {
  BookState book;
  Rng rng(1);
  submit_order(book, order(1, "B1", Side::Bid, 5), PriceRule::First, rng);
  submit_order(book, order(2, "B1", Side::Bid, 6), PriceRule::First, rng);
  EXPECT_EQ(book.bids().size(), 1u);
  EXPECT_EQ(book.bids().at("B1").price, 6);
}

TEST(SubmitOrder, TiesGoToEarliestOrder) {
  BookState book;
  Rng rng(1);
  submit_order(book, order(1, "B1", Side::Bid, 9), PriceRule::First, rng);
  submit_order(book, order(2, "B2", Side::Bid, 9), PriceRule::First, rng);
  submit_order(book, order(3, "B0", Side::Bid, 9), PriceRule::First, rng);
  const auto deal = submit_order(book, order(4, "S1", Side::Ask, 9), PriceRule::First, rng);
  ASSERT_TRUE(deal);
  EXPECT_EQ(deal->buyer_id, "B1");
}

TEST(SubmitOrder, RetiredTraderRejected) {
  BookState book;
  Rng rng(1);
  submit_order(book, order(1, "B1", Side::Bid, 10), PriceRule::First, rng);
  submit_order(book, order(2, "S1", Side::Ask, 8), PriceRule::First, rng);
  EXPECT_THROW(submit_order(book, order(3, "B1", Side::Bid, 10), PriceRule::First, rng), TraderRetired);
}

TEST(ZiQuote, RespectsReservationValue) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto b = zi_quote(Side::Bid, 50, {}, rng);
    EXPECT_GE(b, 1);
    EXPECT_LE(b, 50);
    const auto a = zi_quote(Side::Ask, 30, {}, rng);
    EXPECT_GE(a, 30);
    EXPECT_LE(a, 200);
  }
}

TEST(ZiQuote, BuyerMean) {
  Rng rng(5);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += zi_quote(Side::Bid, 50, {}, rng);
  EXPECT_NEAR(sum / n, 25.5, 0.5);
}

TEST(ZiQuote, InfeasibleRange) {
  Rng rng(1);
  EXPECT_THROW(zi_quote(Side::Bid, 250, {}, rng), InfeasibleRange);
  EXPECT_THROW(zi_quote(Side::Ask, 0.5, {}, rng), InfeasibleRange);
}

TEST(RunMarket, Deterministic) {
  SimConfig c;
  c.rng_seed = 42;
  EXPECT_EQ(run_market(c), run_market(c));
  SimConfig d = c;
  d.rng_seed = 43;
  EXPECT_FALSE(run_market(c) == run_market(d));
}

TEST(RunMarket, SinglePairEventuallyTrades) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimConfig c;
    c.rng_seed = seed;
    c.rounds = 1;
    c.actions_per_round = 5000;
    const auto log = run_market(c, ReservationProfile::from_values({10}, {5}));
    ASSERT_EQ(log.rounds[0].deals.size(), 1u) << "seed " << seed;
    const auto& d = log.rounds[0].deals[0];
    EXPECT_GE(d.price, 5);
    EXPECT_LE(d.price, 10);
  }
}

TEST(RunMarket, LogInvariants) {
  for (auto rule : {PriceRule::First, PriceRule::Random, PriceRule::MMK}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SimConfig c;
      c.rng_seed = seed;
      c.price_rule = rule;
      const auto log = run_market(c);
      const auto& profile = *log.profile;
      std::map<TraderId, Money> value;
      for (const auto& b : profile.buyers) value[b.id] = b.value;
      for (const auto& s : profile.sellers) value[s.id] = s.value;
      ASSERT_EQ(log.rounds.size(), 10u);
      for (std::size_t r = 0; r < log.rounds.size(); ++r) {
        const auto& round = log.rounds[r];
        EXPECT_EQ(round.round, static_cast<int>(r + 1));
        EXPECT_EQ(round.events.size(), 100u);
        double last = 0;
        std::map<TraderId, Money> latest;
        for (const auto& e : round.events) {
          EXPECT_GE(e.time, last);
          last = e.time;
          if (e.side == Side::Bid) {
            EXPECT_LE(e.price, value.at(e.actor_id));
          } else {
            EXPECT_GE(e.price, value.at(e.actor_id));
          }
          latest[e.actor_id] = e.price;
        }
        std::set<TraderId> seen;
        for (const auto& d : round.deals) {
          EXPECT_TRUE(seen.insert(d.buyer_id).second);
          EXPECT_TRUE(seen.insert(d.seller_id).second);
          EXPECT_LE(d.seller_price, d.price);
          EXPECT_LE(d.price, d.buyer_price);
          EXPECT_LE(d.seller_price, d.buyer_price);
        }
        const auto truth = round_truth(profile, round);
        if (truth.efficiency.ae) {
          EXPECT_GE(*truth.efficiency.ae, 0.0);
          EXPECT_LE(*truth.efficiency.ae, 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST(RunMarket, SizeClassFromTraderCount) {
  SimConfig c;
  c.n_buyers = 7;
  c.n_sellers = 7;
  EXPECT_EQ(run_market(c).treatment.size, SizeClass::Small);
  c.n_buyers = 8;
  EXPECT_EQ(run_market(c).treatment.size, SizeClass::Large);
}

TEST(RunMarket, InvalidConfig) {
  SimConfig c;
  c.actions_per_round = 5;
  EXPECT_THROW(run_market(c), ConfigError);
  SimConfig d;
  d.value_max = 500;
  EXPECT_THROW(run_market(d), ConfigError);
}
