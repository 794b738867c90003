#include "cda/gbt.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cda/quantile.hpp"

namespace cda {

DenseMatrix DenseMatrix::subset(std::span<const std::size_t> idx) const {
  DenseMatrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::string_view to_string(GbtLoss loss) { return loss == GbtLoss::Squared ? "squared" : "pinball"; }

GbtLoss parse_gbt_loss(std::string_view s) {
  if (s == "squared") return GbtLoss::Squared;
  if (s == "pinball") return GbtLoss::Pinball;
  throw std::invalid_argument("unknown GBT loss '" + std::string(s) + "'");
}

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

double TreeEnsemble::predict(std::span<const double> x) const { return predict_prefix(x, trees.size()); }

double TreeEnsemble::predict_prefix(std::span<const double> x, std::size_t n_trees) const {
  double sum = 0;
  const std::size_t n = std::min(n_trees, trees.size());
  for (std::size_t t = 0; t < n; ++t) sum += trees[t].predict(x);
  return base_score + learning_rate * sum;
}

double gbt_loss(GbtLoss loss, double y, double prediction, double quantile) {
  const double r = y - prediction;
  if (loss == GbtLoss::Squared) return r * r;
  return (quantile - (y <= prediction ? 1.0 : 0.0)) * r;
}

namespace {

struct SortedColumn {
  std::vector<double> values;
  std::vector<std::uint32_t> rows;
};

std::vector<SortedColumn> presort(const DenseMatrix& x) {
  std::vector<SortedColumn> cols(x.cols());
  std::vector<std::uint32_t> order(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    auto& c = cols[f];
    c.rows = order;
    c.values.resize(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) c.values[k] = x(order[k], f);
  }
  return cols;
}

struct Candidate {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
};

struct OpenNode {
  int node = 0;  // index in the tree under construction
  double grad_sum = 0;
  double grad_sq = 0;
  std::size_t count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<SortedColumn>& cols, std::size_t n_rows, const GbtParams& params,
              std::vector<double>& split_gain)
      : cols_(cols), params_(params), split_gain_(split_gain), leaf_of_(n_rows, -1), slot_of_(n_rows, -1) {}

  // Grows one tree on `grad`; `leaf_of()` then maps each row to its leaf.
  RegressionTree grow(std::span<const double> grad) {
    RegressionTree tree;
    tree.nodes.push_back({});
    std::fill(leaf_of_.begin(), leaf_of_.end(), 0);

    std::vector<OpenNode> open(1);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      open[0].grad_sum += grad[i];
      open[0].grad_sq += grad[i] * grad[i];
      ++open[0].count;
    }

    for (int depth = 0; depth < params_.max_depth && !open.empty(); ++depth) {
      // Map each row to the slot of its open node (or -1).
      std::vector<int> node_to_slot(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < open.size(); ++s) node_to_slot[static_cast<std::size_t>(open[s].node)] = static_cast<int>(s);
      for (std::size_t i = 0; i < leaf_of_.size(); ++i) slot_of_[i] = node_to_slot[static_cast<std::size_t>(leaf_of_[i])];

      const auto best = find_splits(open, grad);

      std::vector<OpenNode> next;
      std::vector<int> left_child(open.size(), -1);
      for (std::size_t s = 0; s < open.size(); ++s) {
        const auto& c = best[s];
        if (c.feature < 0) continue;
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& parent = tree.nodes[static_cast<std::size_t>(open[s].node)];
        parent.feature = c.feature;
        parent.threshold = c.threshold;
        parent.left = l;
        parent.right = l + 1;
        split_gain_[static_cast<std::size_t>(c.feature)] += c.gain;
        left_child[s] = l;
        next.push_back({l});
        next.push_back({l + 1});
      }
      if (next.empty()) break;

      // Route rows of split nodes and accumulate child statistics.
      std::vector<int> child_slot(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < next.size(); ++k) child_slot[static_cast<std::size_t>(next[k].node)] = static_cast<int>(k);
      for (std::size_t i = 0; i < leaf_of_.size(); ++i) {
        const int s = slot_of_[i];
        if (s < 0 || left_child[static_cast<std::size_t>(s)] < 0) continue;
        const auto& parent = tree.nodes[static_cast<std::size_t>(open[static_cast<std::size_t>(s)].node)];
        const int child = row_value(i, parent.feature) <= parent.threshold ? parent.left : parent.right;
        leaf_of_[i] = child;
        auto& st = next[static_cast<std::size_t>(child_slot[static_cast<std::size_t>(child)])];
        st.grad_sum += grad[i];
        st.grad_sq += grad[i] * grad[i];
        ++st.count;
      }
      open = std::move(next);
    }
    return tree;
  }

  const std::vector<int>& leaf_of() const noexcept { return leaf_of_; }

  void set_row_values(const DenseMatrix* x) { x_ = x; }

 private:
  double row_value(std::size_t i, int feature) const { return (*x_)(i, static_cast<std::size_t>(feature)); }

  std::vector<Candidate> find_splits(const std::vector<OpenNode>& open, std::span<const double> grad) const {
    const std::size_t k = open.size();
    std::vector<Candidate> best(k);
    std::vector<double> floor_gain(k);
    // A split must explain a non-negligible share of the node's gradient
    // energy; this keeps rounding noise from splitting constant gradients.
    for (std::size_t s = 0; s < k; ++s) floor_gain[s] = 1e-12 * std::max(open[s].grad_sq, 1e-300);
    const auto min_leaf = static_cast<std::size_t>(std::max(params_.min_samples_leaf, 1));

    std::vector<double> left_sum(k);
    std::vector<std::size_t> left_cnt(k);
    std::vector<double> last(k);
    for (std::size_t f = 0; f < cols_.size(); ++f) {
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_cnt.begin(), left_cnt.end(), 0);
      const auto& col = cols_[f];
      for (std::size_t p = 0; p < col.rows.size(); ++p) {
        const auto i = col.rows[p];
        const int slot = slot_of_[i];
        if (slot < 0) continue;
        const auto s = static_cast<std::size_t>(slot);
        const double v = col.values[p];
        const auto nl = left_cnt[s];
        if (nl > 0 && v > last[s]) {
          const auto& o = open[s];
          const auto nr = o.count - nl;
          if (nl >= min_leaf && nr >= min_leaf) {
            const double ls = left_sum[s];
            const double rs = o.grad_sum - ls;
            const double gain = ls * ls / static_cast<double>(nl) + rs * rs / static_cast<double>(nr) -
                                o.grad_sum * o.grad_sum / static_cast<double>(o.count);
            if (gain > floor_gain[s] && gain > best[s].gain) {
              double thr = last[s] + (v - last[s]) / 2;
              if (!(thr < v)) thr = last[s];
              best[s] = {gain, static_cast<int>(f), thr};
            }
          }
        }
        left_sum[s] += grad[i];
        ++left_cnt[s];
        last[s] = v;
      }
    }
    return best;
  }

  const std::vector<SortedColumn>& cols_;
  const GbtParams& params_;
  std::vector<double>& split_gain_;
  const DenseMatrix* x_ = nullptr;
  std::vector<int> leaf_of_;
  std::vector<int> slot_of_;
};

double mean_loss(GbtLoss loss, std::span<const double> y, std::span<const double> f, double q) {
  if (y.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += gbt_loss(loss, y[i], f[i], q);
  return s / static_cast<double>(y.size());
}

}  // namespace

GbtFit fit_gbt_trees(const DenseMatrix& x, std::span<const double> y, GbtLoss loss, const GbtParams& params,
                     std::optional<Validation> validation) {
  if (x.rows() != y.size()) throw std::invalid_argument("design and target sizes differ");
  if (y.empty()) throw std::invalid_argument("cannot fit GBT on an empty training set");
  constexpr double q = 0.5;

  GbtFit fit;
  auto& model = fit.model;
  model.loss = loss;
  model.quantile = q;
  model.learning_rate = params.learning_rate;
  model.split_gain.assign(x.cols(), 0.0);
  {
    std::vector<double> yy(y.begin(), y.end());
    if (loss == GbtLoss::Squared) {
      // Mean as an offset from the first value, exact for a constant target.
      double dev = 0;
      for (double v : yy) dev += v - yy.front();
      model.base_score = yy.front() + dev / static_cast<double>(yy.size());
    } else {
      model.base_score = median(std::move(yy));
    }
  }

  const auto cols = presort(x);
  TreeBuilder builder(cols, x.rows(), params, model.split_gain);
  builder.set_row_values(&x);

  std::vector<double> f(y.size(), model.base_score);
  std::vector<double> grad(y.size());
  std::vector<double> fv;
  if (validation) fv.assign(validation->y.size(), model.base_score);
  fit.train_loss.push_back(mean_loss(loss, y, f, q));

  for (int t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      grad[i] = loss == GbtLoss::Squared ? y[i] - f[i] : (y[i] > f[i] ? q : q - 1.0);
    }
    RegressionTree tree = builder.grow(grad);

    // Leaf values from the residuals of the rows in each leaf.
    const auto& leaf_of = builder.leaf_of();
    std::vector<std::vector<double>> residuals(tree.nodes.size());
    for (std::size_t i = 0; i < y.size(); ++i) residuals[static_cast<std::size_t>(leaf_of[i])].push_back(y[i] - f[i]);
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      auto& node = tree.nodes[n];
      if (node.feature >= 0 || residuals[n].empty()) continue;
      if (loss == GbtLoss::Squared) {
        node.value = std::accumulate(residuals[n].begin(), residuals[n].end(), 0.0) /
                     static_cast<double>(residuals[n].size());
      } else {
        node.value = median(std::move(residuals[n]));
      }
    }

    if (tree.is_stump() && tree.nodes[0].value == 0.0) break;  // nothing left to fit

    for (std::size_t i = 0; i < y.size(); ++i)
      f[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    fit.train_loss.push_back(mean_loss(loss, y, f, q));
    if (validation) {
      for (std::size_t i = 0; i < fv.size(); ++i) fv[i] += params.learning_rate * tree.predict(validation->x.row(i));
      fit.valid_loss.push_back(mean_loss(loss, validation->y, fv, q));
    }
    model.trees.push_back(std::move(tree));
  }
  return fit;
}

}  // namespace cda
