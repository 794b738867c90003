#pragma once
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cda {

// Row-major dense design matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  // Rows `idx` of this matrix, in that order.
  DenseMatrix subset(std::span<const std::size_t> idx) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class GbtLoss { Squared, Pinball };

std::string_view to_string(GbtLoss loss);
GbtLoss parse_gbt_loss(std::string_view s);

struct GbtParams {
  int max_depth = 6;
  int n_trees = 100;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
};

// Leaves have feature < 0. Rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  bool is_stump() const noexcept { return nodes.size() <= 1; }
};

struct TreeEnsemble {
  GbtLoss loss = GbtLoss::Squared;
  double quantile = 0.5;  // pinball level; unused for squared loss
  double base_score = 0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  // Total split gain per input column over all trees.
  std::vector<double> split_gain;

  double predict(std::span<const double> x) const;
  // Prediction using only the first `n_trees` trees.
  double predict_prefix(std::span<const double> x, std::size_t n_trees) const;
};

struct GbtFit {
  TreeEnsemble model;
  // Mean training loss of the base score, then after each boosting round.
  std::vector<double> train_loss;
  // Validation loss after each boosting round, when validation data is given.
  std::vector<double> valid_loss;
};

struct Validation {
  const DenseMatrix& x;
  std::span<const double> y;
};

// Gradient boosting with greedy exact splits. Squared loss uses mean-residual
// leaves; pinball loss fits trees on the sign gradient and sets each leaf to
// the median residual of its rows.
GbtFit fit_gbt_trees(const DenseMatrix& x, std::span<const double> y, GbtLoss loss, const GbtParams& params,
                     std::optional<Validation> validation = std::nullopt);

double gbt_loss(GbtLoss loss, double y, double prediction, double quantile = 0.5);

}  // namespace cda
