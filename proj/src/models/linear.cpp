#include "cda/linear.hpp"

#include <algorithm>
#include <cmath>

#include "cda/quantile.hpp"

namespace cda {

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<bool>& kept) {
  const auto k = static_cast<Eigen::Index>(std::count(kept.begin(), kept.end(), true));
  Eigen::MatrixXd out(x.rows(), k);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if (kept[static_cast<std::size_t>(j)]) out.col(c++) = x.col(j);
  return out;
}

Eigen::VectorXd expand(const Eigen::VectorXd& sub, const std::vector<bool>& kept) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kept.size()));
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < kept.size(); ++j)
    if (kept[j]) full(static_cast<Eigen::Index>(j)) = sub(c++);
  return full;
}

Eigen::VectorXd solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() == 0) return Eigen::VectorXd(0);
  return x.colPivHouseholderQr().solve(y);
}

}  // namespace

std::vector<bool> independent_columns(const Eigen::MatrixXd& x, double threshold) {
  std::vector<bool> kept(static_cast<std::size_t>(x.cols()), false);
  if (x.cols() == 0 || x.rows() == 0) return kept;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(threshold);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index i = 0; i < qr.rank(); ++i) kept[static_cast<std::size_t>(perm(i))] = true;
  return kept;
}

double mad_scale(const Eigen::VectorXd& residuals) {
  std::vector<double> abs_r(static_cast<std::size_t>(residuals.size()));
  for (Eigen::Index i = 0; i < residuals.size(); ++i) abs_r[static_cast<std::size_t>(i)] = std::abs(residuals(i));
  if (abs_r.empty()) return 0.0;
  return median(std::move(abs_r)) / 0.6745;
}

LinearFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  LinearFit fit;
  fit.kept = independent_columns(x);
  const auto xs = select_columns(x, fit.kept);
  fit.coef = expand(solve(xs, y), fit.kept);
  return fit;
}

LinearFit fit_huber(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, HuberOptions options) {
  LinearFit fit;
  fit.kept = independent_columns(x);
  const auto xs = select_columns(x, fit.kept);
  Eigen::VectorXd beta = solve(xs, y);

  // A residual scale this small relative to the targets means the data are
  // fit exactly; reweighting would only amplify rounding noise.
  const double y_size = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
  const double exact_floor = 1e-12 * std::max(y_size, 1e-300);

  fit.converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd r = y - xs * beta;
    const double s = mad_scale(r);
    fit.scale = s;
    if (s <= exact_floor) {
      fit.converged = true;
      break;
    }
    const double cutoff = options.threshold * s;
    Eigen::VectorXd sqrt_w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double a = std::abs(r(i));
      sqrt_w(i) = a <= cutoff ? 1.0 : std::sqrt(cutoff / a);
    }
    const Eigen::MatrixXd xw = sqrt_w.asDiagonal() * xs;
    const Eigen::VectorXd yw = sqrt_w.cwiseProduct(y);
    const Eigen::VectorXd next = solve(xw, yw);
    const double change = xs.cols() > 0 ? (next - beta).cwiseAbs().maxCoeff() : 0.0;
    beta = next;
    fit.iterations = it + 1;
    if (change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coef = expand(beta, fit.kept);
  return fit;
}

}  // namespace cda
