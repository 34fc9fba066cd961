/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "roomcast/common.hpp"
#include "roomcast/features.hpp"
#include "roomcast/stats.hpp"

namespace roomcast {

/// Anything that maps a feature row to a room-temperature prediction.
template <class M>
concept Regressor = requires(const M& m, std::span<const double> row) {
  { m.predict(row) } -> std::convertible_to<double>;
  { m.feature_names() } -> std::convertible_to<const std::vector<std::string>&>;
};

/// Predictions for every row of a matrix.
template <Regressor M>
std::vector<double> predict_all(const M& model, const FeatureMatrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = model.predict(x.row(i));
  return out;
}

/// Throws unless the matrix columns are exactly the model's features.
template <Regressor M>
void require_compatible(const M& model, const FeatureMatrix& x) {
  if (model.feature_names() != x.feature_names)
    throw ConfigError("feature mismatch between model and design matrix");
}

}  // namespace roomcast

namespace roomcast::gbm {

struct Hyperparams {
  int max_depth = 6;
  int n_trees = 100;
  double gamma = 0.05;         ///< minimum split gain
  double lambda = 1.0;         ///< L2 penalty on leaf weights
  double learning_rate = 0.3;  ///< shrinkage

  void validate() const {
    if (max_depth < 1) throw ConfigError("gbm: max_depth must be >= 1");
    if (n_trees < 0) throw ConfigError("gbm: n_trees must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw ConfigError("gbm: learning_rate must lie in (0, 1]");
    if (!(lambda >= 0.0)) throw ConfigError("gbm: lambda must be >= 0");
    if (!(gamma >= 0.0)) throw ConfigError("gbm: gamma must be >= 0");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Node of a regression tree stored in a flat array. Leaves have
/// feature == -1. Rows with value < threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  ///< leaf output before shrinkage
  double gain = 0.0;    ///< loss reduction of the split (branches)
  double cover = 0.0;   ///< hessian sum of the rows reaching the node

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() : nodes_(1) {}
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw DataError("tree: no nodes");
  }

  double predict(std::span<const double> row) const {
    int k = 0;
    while (!nodes_[k].is_leaf()) {
      const auto& n = nodes_[k];
      k = row[n.feature] < n.threshold ? n.left : n.right;
    }
    return nodes_[k].weight;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  int depth() const { return depth_of(0); }

 private:
  int depth_of(int k) const {
    const auto& n = nodes_[k];
    return n.is_leaf() ? 0 : 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  std::vector<TreeNode> nodes_;
};

/// Additive ensemble: base_score + learning_rate * sum of tree outputs.
class Ensemble {
 public:
  Ensemble() = default;
  Ensemble(std::vector<std::string> feature_names, double base_score, double learning_rate,
           double lambda, double gamma, std::vector<Tree> trees = {})
      : feature_names_(std::move(feature_names)),
        base_score_(base_score),
        learning_rate_(learning_rate),
        lambda_(lambda),
        gamma_(gamma),
        trees_(std::move(trees)) {}

  double predict(std::span<const double> row) const {
    if (row.size() != feature_names_.size())
      throw ConfigError("predict: row width " + std::to_string(row.size()) + " does not match " +
                        std::to_string(feature_names_.size()) + " model features");
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(row);
    return base_score_ + learning_rate_ * sum;
  }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  double lambda() const { return lambda_; }
  double gamma() const { return gamma_; }
  const std::vector<Tree>& trees() const { return trees_; }

  void add_tree(Tree tree) { trees_.push_back(std::move(tree)); }

 private:
  std::vector<std::string> feature_names_;
  double base_score_ = 0.0;
  double learning_rate_ = 1.0;
  double lambda_ = 0.0;
  double gamma_ = 0.0;
  std::vector<Tree> trees_;
};

/// Per-round training loss, index r = after r trees (entry 0 is the base score).
struct TrainingTrace {
  std::vector<double> train_mse;
};

namespace detail {

/// Exact greedy tree growth on squared-loss gradients (h = 1), level by level.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, int max_depth, double lambda, double gamma)
      : x_(x), max_depth_(max_depth), lambda_(lambda), gamma_(gamma) {
    const std::size_t n = x.rows(), f = x.cols();
    sorted_rows_.resize(f);
    sorted_values_.resize(f);
    for (std::size_t j = 0; j < f; ++j) {
      auto& rows = sorted_rows_[j];
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), std::uint32_t{0});
      std::stable_sort(rows.begin(), rows.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return x.at(a, j) < x.at(b, j); });
      auto& vals = sorted_values_[j];
      vals.resize(n);
      for (std::size_t p = 0; p < n; ++p) vals[p] = x.at(rows[p], j);
    }
    position_.resize(n);
  }

  /// Builds one tree for gradients g; position_[r] ends at the leaf of row r.
  Tree build(std::span<const double> g) {
    const std::size_t n = x_.rows(), f = x_.cols();
    std::vector<TreeNode> nodes(1);
    std::fill(position_.begin(), position_.end(), 0);
    std::vector<int> level = {0};
    std::vector<char> open(1, 1);  // node still receives rows at this level

    for (int depth = 0;; ++depth) {
      // Totals per open node, summed in row order.
      std::vector<double> g_sum(nodes.size(), 0.0), h_sum(nodes.size(), 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const int k = position_[r];
        if (!open[k]) continue;
        g_sum[k] += g[r];
        h_sum[k] += 1.0;
      }
      for (int k : level) {
        nodes[k].cover = h_sum[k];
        nodes[k].weight = -g_sum[k] / (h_sum[k] + lambda_);
      }
      if (depth >= max_depth_) break;

      struct Candidate {
        double gain = -std::numeric_limits<double>::infinity();
        int feature = -1;
        double threshold = 0.0;
      };
      std::vector<int> slot(nodes.size(), -1);
      for (std::size_t s = 0; s < level.size(); ++s) slot[level[s]] = static_cast<int>(s);
      std::vector<Candidate> best(level.size());
      struct Scan {
        double gl = 0.0, hl = 0.0, last = 0.0;
        bool seen = false;
      };
      std::vector<Scan> scan(level.size());
      for (std::size_t j = 0; j < f; ++j) {
        std::fill(scan.begin(), scan.end(), Scan{});
        const auto& rows = sorted_rows_[j];
        const auto& vals = sorted_values_[j];
        for (std::size_t p = 0; p < n; ++p) {
          const std::uint32_t r = rows[p];
          const int k = position_[r];
          const int s = slot[k];
          if (s < 0) continue;
          Scan& sc = scan[s];
          const double v = vals[p];
          if (sc.seen && v > sc.last) {
            const double gt = g_sum[k], ht = h_sum[k];
            const double gr = gt - sc.gl, hr = ht - sc.hl;
            const double gain = 0.5 * (sc.gl * sc.gl / (sc.hl + lambda_) + gr * gr / (hr + lambda_) -
                                       gt * gt / (ht + lambda_));
            if (gain > best[s].gain) {
              double thr = sc.last + (v - sc.last) * 0.5;
              if (!(thr > sc.last)) thr = v;
              best[s] = {gain, static_cast<int>(j), thr};
            }
          }
          sc.gl += g[r];
          sc.hl += 1.0;
          sc.last = v;
          sc.seen = true;
        }
      }

      std::vector<int> next;
      std::vector<char> next_open;
      for (std::size_t s = 0; s < level.size(); ++s) {
        const int k = level[s];
        const auto& c = best[s];
        if (c.feature < 0 || !(c.gain - gamma_ > 0.0)) continue;
        const int left = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes.push_back({});
        nodes[k].feature = c.feature;
        nodes[k].threshold = c.threshold;
        nodes[k].left = left;
        nodes[k].right = left + 1;
        nodes[k].gain = c.gain;
        nodes[k].weight = 0.0;
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      open.assign(nodes.size(), 0);
      for (int k : next) open[k] = 1;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& node = nodes[position_[r]];
        if (node.is_leaf()) continue;
        position_[r] = x_.at(r, node.feature) < node.threshold ? node.left : node.right;
      }
      level = std::move(next);
    }
    return Tree(std::move(nodes));
  }

  const std::vector<int>& positions() const { return position_; }

 private:
  const FeatureMatrix& x_;
  int max_depth_;
  double lambda_;
  double gamma_;
  std::vector<std::vector<std::uint32_t>> sorted_rows_;
  std::vector<std::vector<double>> sorted_values_;
  std::vector<int> position_;
};

inline void check_training_input(const FeatureMatrix& x, std::span<const double> y) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("train: empty design matrix");
  if (x.rows() < 2) throw DataError("train: need at least 2 rows");
  if (y.size() != x.rows()) throw ConfigError("train: target length mismatch");
  if (x.rows() > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("train: too many rows");
  for (double v : x.values)
    if (!std::isfinite(v)) throw NumericError("train: non-finite value in design matrix");
  for (double v : y)
    if (!std::isfinite(v)) throw NumericError("train: non-finite target");
}

inline double mse_of(std::span<const double> y, std::span<const double> pred) {
  CompensatedSum s;
  for (std::size_t i = 0; i < y.size(); ++i) s.add((pred[i] - y[i]) * (pred[i] - y[i]));
  return s.value() / static_cast<double>(y.size());
}

}  // namespace detail

/// Gradient boosting on squared loss against an explicit target vector.
inline Ensemble train(const FeatureMatrix& x, std::span<const double> y, const Hyperparams& params,
                      TrainingTrace* trace = nullptr) {
  params.validate();
  detail::check_training_input(x, y);
  const std::size_t n = x.rows();
  CompensatedSum total;
  for (double v : y) total.add(v);
  const double base = total.value() / static_cast<double>(n);

  Ensemble model(x.feature_names, base, params.learning_rate, params.lambda, params.gamma);
  std::vector<double> pred(n, base), grad(n);
  if (trace) trace->train_mse = {detail::mse_of(y, pred)};
  if (params.n_trees == 0) return model;

  detail::TreeBuilder builder(x, params.max_depth, params.lambda, params.gamma);
  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t r = 0; r < n; ++r) grad[r] = pred[r] - y[r];
    Tree tree = builder.build(grad);
    const auto& pos = builder.positions();
    for (std::size_t r = 0; r < n; ++r) pred[r] += params.learning_rate * tree.nodes()[pos[r]].weight;
    model.add_tree(std::move(tree));
    if (trace) trace->train_mse.push_back(detail::mse_of(y, pred));
  }
  return model;
}

inline Ensemble train(const FeatureMatrix& x, const Hyperparams& params, TrainingTrace* trace = nullptr) {
  return train(x, x.target, params, trace);
}

/// Gain importance: per-feature sum of split gains, normalised to sum 1.
/// All zeros when the model has no splits.
inline std::map<std::string, double> feature_importance_gain(const Ensemble& model) {
  std::vector<double> acc(model.feature_names().size(), 0.0);
  for (const auto& t : model.trees())
    for (const auto& n : t.nodes())
      if (!n.is_leaf()) acc[static_cast<std::size_t>(n.feature)] += n.gain;
  const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < acc.size(); ++j)
    out[model.feature_names()[j]] = total > 0.0 ? acc[j] / total : 0.0;
  return out;
}

/// Candidate values per hyperparameter; the grid is their Cartesian product.
struct GridRanges {
  std::vector<int> max_depth = {5, 8, 11, 15};
  std::vector<int> n_trees = {20, 100, 300, 500};
  std::vector<double> gamma = {0.05, 0.5, 1.0, 2.0};
  std::vector<double> lambda = {1.0};
  std::vector<double> learning_rate = {0.3};

  /// Distinct combinations in first-encountered order.
  std::vector<Hyperparams> combinations() const {
    std::vector<Hyperparams> out;
    for (int d : max_depth)
      for (int t : n_trees)
        for (double g : gamma)
          for (double l : lambda)
            for (double lr : learning_rate) {
              Hyperparams h{d, t, g, l, lr};
              if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
            }
    return out;
  }
};

struct GridRow {
  Hyperparams params;
  stats::MetricReport validation;
};

struct GridResult {
  Hyperparams best;
  std::vector<GridRow> table;
};

/// Exhaustive search: trains each combination on the training matrix and
/// scores it with `evaluate(model) -> MetricReport`. The winner minimises
/// validation MAE, ties broken by fewer trees, then smaller depth, then
/// first encountered.
template <class Evaluate>
  requires std::invocable<Evaluate, const Ensemble&>
GridResult grid_search(const FeatureMatrix& train_x, const GridRanges& grid, Evaluate&& evaluate) {
  const auto combos = grid.combinations();
  if (combos.empty()) throw ConfigError("grid_search: empty grid");
  GridResult result;
  std::size_t best = 0;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const auto& h = combos[i];
    stats::MetricReport report;
    try {
      report = evaluate(train(train_x, h));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " [grid combination max_depth=" +
                                std::to_string(h.max_depth) + " n_trees=" + std::to_string(h.n_trees) +
                                " gamma=" + csv::format_number(h.gamma) + "]");
    }
    result.table.push_back({h, report});
    const auto key = [&](std::size_t k) {
      const auto& row = result.table[k];
      return std::make_tuple(row.validation.mae, row.params.n_trees, row.params.max_depth);
    };
    if (i > 0 && key(i) < key(best)) best = i;
  }
  result.best = result.table[best].params;
  return result;
}

/// Grid search scored by static one-row-per-instant prediction on a
/// validation matrix.
inline GridResult grid_search(const FeatureMatrix& train_x, const FeatureMatrix& val_x,
                              const GridRanges& grid) {
  return grid_search(train_x, grid, [&](const Ensemble& m) {
    return stats::metrics(val_x.target, predict_all(m, val_x));
  });
}

}  // namespace roomcast::gbm
