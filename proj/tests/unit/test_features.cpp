#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "cda/errors.hpp"
#include "cda/features.hpp"
#include "cda/quantile.hpp"
#include "cda/rng.hpp"
#include "cda/simulator.hpp"
#include "oracles.hpp"

using namespace cda;

namespace {

DecileVector constant_deciles(double v) {
  DecileVector d;
  d.values.fill(v);
  d.count = 1;
  return d;
}

MarketLog three_bids_then_ask() {
  MarketLog m;
  m.market_id = "T";
  RoundLog r;
  r.round = 1;
  r.events = {{1, 1, "B1", Side::Bid, 5}, {2, 1, "B2", Side::Bid, 7}, {3, 1, "B3", Side::Bid, 6},
              {4, 1, "S1", Side::Ask, 6.5}};
  r.deals = {{4, 1, "B2", "S1", 7, 7, 7}};
  r.active_traders = {"B1", "B2", "B3", "S1"};
  m.rounds.push_back(r);
  m.profile = ReservationProfile{{{"B1", 8}, {"B2", 9}, {"B3", 7}}, {{"S1", 4}}};
  return m;
}

}  // namespace

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(quantile_sorted(v, 0.0), 1);
  EXPECT_EQ(quantile_sorted(v, 1.0), 4);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.1), 1.3);
  EXPECT_EQ(median({3, 1, 2, 4}), 2.5);
  EXPECT_EQ(lower_median({3, 1, 2, 4}), 2);
}

TEST(DecileVector, Singleton) {
  const std::vector<Money> v{7};
  const auto d = decile_vector(v);
  for (double x : d.values) EXPECT_EQ(x, 7);
  EXPECT_EQ(d.count, 1u);
}

TEST(DecileVector, ArithmeticSequence) {
  std::vector<Money> v(11);
  std::iota(v.begin(), v.end(), 1.0);
  const auto d = decile_vector(v);
  for (std::size_t i = 0; i < kDeciles; ++i) EXPECT_DOUBLE_EQ(d.values[i], static_cast<double>(i + 1));
}

TEST(DecileVector, AnchoredAndMonotone) {
  const std::vector<Money> v{5, 9, 5, 5};
  const auto d = decile_vector(v);
  EXPECT_EQ(d.values[0], 5);
  EXPECT_EQ(d.values[10], 9);
  EXPECT_TRUE(std::is_sorted(d.values.begin(), d.values.end()));

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<Money> x(static_cast<std::size_t>(rng.uniform_int(1, 30)));
    for (auto& p : x) p = rng.uniform(1, 200);
    const auto dv = decile_vector(x);
    EXPECT_TRUE(std::is_sorted(dv.values.begin(), dv.values.end()));
    EXPECT_EQ(dv.values[0], *std::min_element(x.begin(), x.end()));
    EXPECT_EQ(dv.values[10], *std::max_element(x.begin(), x.end()));
  }
}

TEST(DecileVector, Empty) { EXPECT_THROW(decile_vector(std::vector<Money>{}), EmptySide); }

TEST(MakeNorm, ConstantBookUsesUnitScale) {
  const auto n = make_norm(constant_deciles(12), constant_deciles(12));
  EXPECT_EQ(n.center, 12);
  EXPECT_EQ(n.scale, 1);
}

TEST(MakeNorm, TwoLevelBook) {
  const auto n = make_norm(constant_deciles(4), constant_deciles(8));
  EXPECT_EQ(n.center, 6);
  EXPECT_EQ(n.scale, 4);
  // Frozen from sorting the 22 entries and reading q(.35), q(.65).
  std::vector<double> x(11, 4.0);
  x.insert(x.end(), 11, 8.0);
  EXPECT_EQ(quantile(x, 0.65) - quantile(x, 0.35), 4);
}

TEST(MakeNorm, ShiftMovesCenterOnly) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<Money> b(5), a(6);
    for (auto& p : b) p = std::round(rng.uniform(1, 100));
    for (auto& p : a) p = std::round(rng.uniform(1, 100));
    const auto n0 = make_norm(decile_vector(b), decile_vector(a));
    for (auto& p : b) p += 16;
    for (auto& p : a) p += 16;
    const auto n1 = make_norm(decile_vector(b), decile_vector(a));
    EXPECT_NEAR(n1.center, n0.center + 16, 1e-12);
    EXPECT_NEAR(n1.scale, n0.scale, 1e-12);
  }
}

TEST(MakeNorm, CollapsedCentreFallsBackToRange) {
  DecileVector b = constant_deciles(5);
  b.values[0] = 1;
  const auto n = make_norm(b, constant_deciles(5));
  EXPECT_EQ(n.center, 5);
  EXPECT_EQ(n.scale, 4);
}

TEST(Normalize, Basics) {
  const NormalizationConstants n{10, 4};
  EXPECT_EQ(normalize(10, n), 0);
  EXPECT_EQ(normalize(14, n), 1);
  Rng rng(3);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const NormalizationConstants m{rng.uniform(-100, 100), rng.uniform(0.01, 50)};
    const double x = rng.uniform(-1000, 1000);
    worst = std::max(worst, std::abs(denormalize(normalize(x, m), m) - x));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(SnapshotStream, CountsDeals) {
  const auto rows = snapshot_stream(three_bids_then_ask());
  ASSERT_EQ(rows.size(), 4u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[static_cast<std::size_t>(i)].n_deals, 0);
    EXPECT_FALSE(rows[static_cast<std::size_t>(i)].last_deal_price);
    EXPECT_FALSE(rows[static_cast<std::size_t>(i)].asks);
    EXPECT_FALSE(rows[static_cast<std::size_t>(i)].has_book());
  }
  EXPECT_EQ(rows[3].n_deals, 1);
  EXPECT_EQ(*rows[3].last_deal_price, 7);
  EXPECT_TRUE(rows[3].has_book());
  EXPECT_EQ(rows[3].bids->count, 3u);
  EXPECT_THROW((void)rows[0].normalized_book(), MissingInput);
  // CE of {9,8,7} vs {4}: k*=1, interval [max(4, 8), 9]
  EXPECT_EQ(*rows[3].cep_mid, 8.5);
  EXPECT_EQ(*rows[3].ae_round, 1.0);
}

TEST(SnapshotStream, PerDealCadence) {
  const auto rows = snapshot_stream(three_bids_then_ask(), {Cadence::PerDeal, PoolPolicy::PerTraderLatest});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_deals, 1);
  EXPECT_EQ(rows[0].time, 4);
}

TEST(SnapshotStream, PoolPolicies) {
  auto m = three_bids_then_ask();
  m.rounds[0].events.insert(m.rounds[0].events.begin() + 1, OrderEvent{1.5, 1, "B1", Side::Bid, 3});
  const auto latest = snapshot_stream(m);
  EXPECT_EQ(latest.back().bids->count, 3u);
  EXPECT_EQ(latest.back().bids->values[0], 3);
  const auto all = snapshot_stream(m, {Cadence::PerAction, PoolPolicy::AllSubmissions});
  EXPECT_EQ(all.back().bids->count, 4u);
}

TEST(SnapshotStream, ScaleInvariantFeatures) {
  SimConfig c;
  c.rounds = 3;
  const auto market = run_market(c);
  const auto base = snapshot_stream(market);
  for (double lambda : {0.01, 3.0, 250.0}) {
    const auto scaled = snapshot_stream(market.scaled(lambda));
    ASSERT_EQ(scaled.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      ASSERT_EQ(base[i].has_book(), scaled[i].has_book());
      if (!base[i].has_book()) continue;
      const auto a = base[i].normalized_book();
      const auto b = scaled[i].normalized_book();
      for (std::size_t k = 0; k < kBookEntries; ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
      EXPECT_NEAR(base[i].normalized_deal_price(), scaled[i].normalized_deal_price(), 1e-9);
    }
  }
}

TEST(SnapshotStream, Deterministic) {
  SimConfig c;
  const auto m = run_market(c);
  const auto a = snapshot_stream(m);
  const auto b = snapshot_stream(m);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].time, b[i].time);
    EXPECT_EQ(a[i].n_deals, b[i].n_deals);
    if (a[i].has_book()) {
      EXPECT_EQ(a[i].normalized_book(), b[i].normalized_book());
    }
  }
}
