#include <gtest/gtest.h>

#include "cda/gbt.hpp"
#include "cda/rng.hpp"

using namespace cda;

namespace {

struct Data {
  DenseMatrix x;
  std::vector<double> y;
};

Data noisy_step(Rng& rng, std::size_t n, std::size_t p) {
  Data d{DenseMatrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d.x(i, j) = rng.uniform(-1, 1);
    d.y[i] = (d.x(i, 0) > 0 ? 1.0 : -1.0) + 0.5 * d.x(i, 1) * d.x(i, 1) + rng.uniform(-0.3, 0.3);
  }
  return d;
}

}  // namespace

TEST(Gbt, ConstantTarget) {
  Rng rng(1);
  auto d = noisy_step(rng, 80, 3);
  std::fill(d.y.begin(), d.y.end(), 0.37);
  for (auto loss : {GbtLoss::Squared, GbtLoss::Pinball}) {
    const auto fit = fit_gbt_trees(d.x, d.y, loss, {4, 50, 0.1, 5});
    EXPECT_TRUE(fit.model.trees.empty());
    for (std::size_t i = 0; i < d.y.size(); ++i) EXPECT_EQ(fit.model.predict(d.x.row(i)), 0.37);
  }
}

TEST(Gbt, TrainingLossNonincreasing) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto d = noisy_step(rng, 150, 4);
    for (auto loss : {GbtLoss::Squared, GbtLoss::Pinball}) {
      const auto fit = fit_gbt_trees(d.x, d.y, loss, {3, 40, 0.1, 5});
      for (std::size_t k = 1; k < fit.train_loss.size(); ++k)
        EXPECT_LE(fit.train_loss[k], fit.train_loss[k - 1] + 1e-12) << "fit " << t << " round " << k;
      EXPECT_LT(fit.train_loss.back(), fit.train_loss.front());
    }
  }
}

TEST(Gbt, LearnsStep) {
  Rng rng(3);
  const auto d = noisy_step(rng, 300, 2);
  const auto fit = fit_gbt_trees(d.x, d.y, GbtLoss::Squared, {3, 200, 0.1, 5});
  std::vector<double> above{0.5, 0.0}, below{-0.5, 0.0};
  EXPECT_NEAR(fit.model.predict(above), 1.0, 0.2);
  EXPECT_NEAR(fit.model.predict(below), -1.0, 0.2);
  EXPECT_GT(fit.model.split_gain[0], fit.model.split_gain[1]);
}

TEST(Gbt, PrefixMatchesShorterFit) {
  Rng rng(4);
  const auto d = noisy_step(rng, 100, 3);
  const auto long_fit = fit_gbt_trees(d.x, d.y, GbtLoss::Pinball, {3, 30, 0.1, 5});
  const auto short_fit = fit_gbt_trees(d.x, d.y, GbtLoss::Pinball, {3, 10, 0.1, 5});
  for (std::size_t i = 0; i < d.y.size(); ++i)
    EXPECT_EQ(long_fit.model.predict_prefix(d.x.row(i), 10), short_fit.model.predict(d.x.row(i)));
}

TEST(Gbt, LeavesHoldMinimumRows) {
  Rng rng(5);
  const auto d = noisy_step(rng, 60, 2);
  const auto fit = fit_gbt_trees(d.x, d.y, GbtLoss::Squared, {6, 5, 0.1, 7});
  for (const auto& tree : fit.model.trees) {
    std::vector<int> count(tree.nodes.size(), 0);
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      int n = 0;
      while (tree.nodes[static_cast<std::size_t>(n)].feature >= 0) {
        const auto& node = tree.nodes[static_cast<std::size_t>(n)];
        n = d.x(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
      }
      ++count[static_cast<std::size_t>(n)];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].feature < 0) {
        EXPECT_GE(count[k], 7);
      }
  }
}

TEST(Gbt, ValidationLossRecorded) {
  Rng rng(6);
  const auto train = noisy_step(rng, 100, 2);
  const auto valid = noisy_step(rng, 40, 2);
  const auto fit = fit_gbt_trees(train.x, train.y, GbtLoss::Squared, {3, 25, 0.1, 5}, Validation{valid.x, valid.y});
  EXPECT_EQ(fit.valid_loss.size(), fit.model.trees.size());
  double mse = 0;
  for (std::size_t i = 0; i < valid.y.size(); ++i) {
    const double r = valid.y[i] - fit.model.predict(valid.x.row(i));
    mse += r * r;
  }
  EXPECT_NEAR(fit.valid_loss.back(), mse / static_cast<double>(valid.y.size()), 1e-9);
}
