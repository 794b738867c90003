#pragma once
#include <Eigen/Dense>
#include <vector>

namespace cda {

struct LinearFit {
  // One coefficient per design column; dropped columns hold 0.
  Eigen::VectorXd coef;
  std::vector<bool> kept;
  int iterations = 0;
  double scale = 0;  // final robust residual scale (Huber only)
  bool converged = true;
};

// Columns that survive rank-revealing QR with column pivoting. Near-duplicate
// columns (relative pivot below `threshold`) are dropped.
std::vector<bool> independent_columns(const Eigen::MatrixXd& x, double threshold = 1e-10);

// Ordinary least squares; collinear columns are dropped and the rest refit.
LinearFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct HuberOptions {
  double threshold = 1.345;  // tuning constant t, in units of the residual scale
  double tolerance = 1e-8;   // max absolute coefficient change
  int max_iterations = 50;
};

// Huber M-estimator by iteratively reweighted least squares, started from
// OLS. Each iteration re-estimates the scale as median(|r|) / 0.6745 and
// uses weights min(1, t * s / |r|).
LinearFit fit_huber(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, HuberOptions options = {});

// Median absolute residual about zero, divided by 0.6745.
double mad_scale(const Eigen::VectorXd& residuals);

}  // namespace cda
