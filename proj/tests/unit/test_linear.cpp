#include <gtest/gtest.h>

#include "cda/linear.hpp"
#include "cda/rng.hpp"
#include "synthetic.hpp"

using namespace cda;

TEST(LeastSquares, RecoversLine) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  const auto fit = fit_least_squares(x, y);
  EXPECT_NEAR(fit.coef(0), 1, 1e-12);
  EXPECT_NEAR(fit.coef(1), 2, 1e-12);
}

TEST(LeastSquares, DropsCollinearColumn) {
  Eigen::MatrixXd x(5, 3);
  x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
  Eigen::VectorXd y(5);
  y << 3, 5, 7, 9, 11;
  const auto fit = fit_least_squares(x, y);
  EXPECT_EQ(std::count(fit.kept.begin(), fit.kept.end(), true), 2);
  const Eigen::VectorXd pred = x * fit.coef;
  EXPECT_LT((pred - y).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MadScale, AboutZero) {
  Eigen::VectorXd r(5);
  r << -3, 1, 2, -1, 10;
  EXPECT_DOUBLE_EQ(mad_scale(r), 2 / 0.6745);
}

TEST(Huber, RatioOfExactRelation) {
  Eigen::MatrixXd x(6, 1);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    y(i) = 50 + 10 * i;
    x(i, 0) = 0.9 * y(i);
  }
  const auto fit = fit_huber(x, y);
  EXPECT_NEAR(fit.coef(0), 1 / 0.9, 1e-6);
  EXPECT_TRUE(fit.converged);
}

TEST(Huber, ResistsResponseOutliers) {
  Rng rng(4);
  Eigen::MatrixXd x(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    x(i, 0) = 1;
    x(i, 1) = rng.uniform(0, 10);
    y(i) = 2 + 3 * x(i, 1) + rng.uniform(-0.1, 0.1);
    if (i % 10 == 0) y(i) += 500;
  }
  const auto huber = fit_huber(x, y);
  const auto ols = fit_least_squares(x, y);
  EXPECT_NEAR(huber.coef(1), 3, 0.05);
  EXPECT_LT(std::abs(huber.coef(1) - 3), std::abs(ols.coef(1) - 3));
}

TEST(Huber, RecoversDecileModel) {
  Rng rng(10);
  const auto x = synth::decile_design(rng, 200);
  const auto beta = synth::true_coefficients();
  const Eigen::VectorXd y = x * beta;
  const auto fit = fit_huber(x, y);
  EXPECT_LT((fit.coef - beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Huber, BeatsLeastSquaresWithGrossTargetErrors) {
  Rng rng(11);
  const auto beta = synth::true_coefficients();
  int wins = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto x = synth::decile_design(rng, 200);
    Eigen::VectorXd y = x * beta;
    for (Eigen::Index i = 0; i < y.size(); i += 10) y(i) *= 100;
    const double huber = (fit_huber(x, y).coef - beta).norm();
    const double ols = (fit_least_squares(x, y).coef - beta).norm();
    if (huber < ols) ++wins;
  }
  EXPECT_EQ(wins, trials);
}

TEST(Huber, ScaleHomogeneous) {
  Rng rng(12);
  auto x = synth::decile_design(rng, 100);
  Eigen::VectorXd y = x * synth::true_coefficients();
  for (int i = 0; i < y.size(); ++i) y(i) += rng.uniform(-3, 3);
  const auto a = fit_huber(x, y);
  const auto b = fit_huber(250 * x, 250 * y);
  EXPECT_LT((a.coef - b.coef).cwiseAbs().maxCoeff(), 1e-9);
}
