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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roomcast/common.hpp"
#include "roomcast/csv.hpp"
#include "roomcast/features.hpp"
#include "roomcast/forecast.hpp"
#include "roomcast/gbm.hpp"
#include "roomcast/linalg.hpp"
#include "roomcast/pffra.hpp"
#include "roomcast/stats.hpp"

namespace roomcast::explain {

using pffra::Means;

/// Signed per-feature contributions to one prediction.
struct Attribution {
  std::vector<std::string> features;
  std::vector<double> contributions;  ///< °C, aligned with features
  double base_value = 0.0;            ///< °C
  double prediction = 0.0;            ///< °C
  /// Weighted R^2 of the local fit (LIME only; Shapley values are exact).
  std::optional<double> local_r2;

  double contribution(std::string_view name) const {
    for (std::size_t j = 0; j < features.size(); ++j)
      if (features[j] == name) return contributions[j];
    throw ConfigError("attribution: unknown feature '" + std::string(name) + "'");
  }

  /// base_value + sum of contributions - prediction.
  double efficiency_gap() const {
    CompensatedSum s;
    s.add(base_value);
    for (double c : contributions) s.add(c);
    s.add(-prediction);
    return s.value();
  }
};

// ---------------------------------------------------------------------------
// Permutation importance

enum class ImportanceMetric { kMae, kMse };
enum class PermutationStrategy { kMeanSubstitute, kShuffle };

struct ImportanceOptions {
  ImportanceMetric metric = ImportanceMetric::kMae;
  PermutationStrategy strategy = PermutationStrategy::kMeanSubstitute;
  std::uint64_t seed = 42;
  /// Substitution values; the matrix's own column means when empty.
  Means means;
  /// Features to score; all when empty.
  std::vector<std::string> features;
};

/// importance = metric(permuted) - metric(baseline).
template <Regressor M>
std::map<std::string, double> permutation_importance(const M& model, const FeatureMatrix& x,
                                                     std::span<const double> y,
                                                     const ImportanceOptions& options = {}) {
  require_compatible(model, x);
  if (y.size() != x.rows()) throw ConfigError("permutation_importance: target length mismatch");
  const auto score = [&](const std::vector<double>& pred) {
    const auto m = stats::metrics(y, pred);
    return options.metric == ImportanceMetric::kMae ? m.mae : m.mse;
  };
  const double baseline = score(predict_all(model, x));
  const Means means = options.means.empty() ? pffra::column_means(x) : options.means;
  const auto names = options.features.empty() ? x.feature_names : options.features;
  std::map<std::string, double> out;
  Rng rng(options.seed);
  for (const auto& name : names) {
    const std::size_t j = x.index_of(name);
    FeatureMatrix permuted = x;
    if (options.strategy == PermutationStrategy::kMeanSubstitute) {
      permuted = pffra::mean_substitute(std::move(permuted), {name}, means);
    } else {
      std::vector<double> col = x.column(j);
      for (std::size_t i = col.size(); i > 1; --i) std::swap(col[i - 1], col[rng.index(i)]);
      for (std::size_t i = 0; i < col.size(); ++i) permuted.at(i, j) = col[i];
    }
    out[name] = score(predict_all(model, permuted)) - baseline;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partial dependence

struct PdpCurve {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> mean_response;  ///< °C
  /// Set when the feature is constant and the curve collapses to one point.
  bool degenerate = false;
};

struct PdpOptions {
  std::size_t grid_size = 20;
  /// Use each observed level instead of an equispaced grid.
  bool categorical = false;
  /// Evaluate on every k-th row so at most this many rows are used (0 = all).
  std::size_t max_rows = 0;
};

template <Regressor M>
PdpCurve pdp(const M& model, const FeatureMatrix& x, const std::string& feature, const PdpOptions& options = {}) {
  require_compatible(model, x);
  if (options.grid_size < 2) throw ConfigError("pdp: grid_size must be >= 2");
  if (x.rows() == 0) throw DataError("pdp: empty matrix");
  const std::size_t j = x.index_of(feature);
  const auto col = x.column(j);
  const auto [lo_it, hi_it] = std::minmax_element(col.begin(), col.end());
  PdpCurve curve;
  curve.feature = feature;
  if (*lo_it == *hi_it) {
    curve.degenerate = true;
    curve.grid = {*lo_it};
  } else if (options.categorical) {
    std::set<double> levels(col.begin(), col.end());
    curve.grid.assign(levels.begin(), levels.end());
  } else {
    const double lo = *lo_it, hi = *hi_it;
    for (std::size_t k = 0; k < options.grid_size; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(options.grid_size - 1);
      curve.grid.push_back(k + 1 == options.grid_size ? hi : lo + t * (hi - lo));
    }
  }
  const std::size_t stride =
      options.max_rows == 0 || x.rows() <= options.max_rows ? 1 : (x.rows() + options.max_rows - 1) / options.max_rows;
  std::vector<double> row(x.cols());
  for (double value : curve.grid) {
    CompensatedSum sum;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.rows(); i += stride) {
      const auto src = x.row(i);
      std::copy(src.begin(), src.end(), row.begin());
      row[j] = value;
      sum.add(model.predict(row));
      ++count;
    }
    curve.mean_response.push_back(sum.value() / static_cast<double>(count));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Global surrogates

/// Ridge regression fit to a black box's predictions.
struct LinearSurrogate {
  std::vector<std::string> features;
  double intercept = 0.0;                     ///< °C, original units
  std::vector<double> coefficients;           ///< per original feature unit
  double standardized_intercept = 0.0;        ///< mean prediction
  std::vector<double> standardized_coefficients;  ///< per standard deviation
  std::vector<double> feature_means;
  std::vector<double> feature_sds;            ///< population sd; 1 for constant columns
  double lambda = 0.0;
  double fidelity_r2 = 0.0;                   ///< against the black-box predictions

  double predict(std::span<const double> row) const {
    double y = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) y += coefficients[j] * row[j];
    return y;
  }
  const std::vector<std::string>& feature_names() const { return features; }
};

/// Closed-form ridge on standardized features: (Z'Z + lambda I) b = Z'(yhat - mean),
/// intercept unpenalised. Targets are the model's predictions on x.
template <Regressor M>
LinearSurrogate fit_surrogate_ridge(const M& model, const FeatureMatrix& x, double lambda) {
  require_compatible(model, x);
  if (!(lambda >= 0.0)) throw ConfigError("ridge surrogate: lambda must be >= 0");
  const std::size_t n = x.rows(), p = x.cols();
  if (n < 2) throw DataError("ridge surrogate: need at least 2 rows");
  const auto yhat = predict_all(model, x);

  LinearSurrogate s;
  s.features = x.feature_names;
  s.lambda = lambda;
  s.feature_means = x.column_means();
  s.feature_sds.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    CompensatedSum ss;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x.at(i, j) - s.feature_means[j];
      ss.add(d * d);
    }
    const double sd = std::sqrt(ss.value() / static_cast<double>(n));
    if (sd > 0.0) s.feature_sds[j] = sd;
  }
  CompensatedSum ysum;
  for (double v : yhat) ysum.add(v);
  const double ymean = ysum.value() / static_cast<double>(n);

  linalg::Matrix z(n, p);
  linalg::Vector yc(n);
  for (std::size_t i = 0; i < n; ++i) {
    yc(i) = yhat[i] - ymean;
    for (std::size_t j = 0; j < p; ++j) z(i, j) = (x.at(i, j) - s.feature_means[j]) / s.feature_sds[j];
  }
  linalg::Matrix a = z.transpose() * z;
  a.diagonal().array() += lambda;
  const linalg::Vector beta = linalg::solve_symmetric(a, z.transpose() * yc);

  s.standardized_intercept = ymean;
  s.standardized_coefficients.assign(beta.data(), beta.data() + p);
  s.coefficients.resize(p);
  s.intercept = ymean;
  for (std::size_t j = 0; j < p; ++j) {
    s.coefficients[j] = beta(j) / s.feature_sds[j];
    s.intercept -= s.coefficients[j] * s.feature_means[j];
  }
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) fitted[i] = s.predict(x.row(i));
  s.fidelity_r2 = stats::metrics(yhat, fitted).r2;
  return s;
}

/// Single CART-style regression tree fit to a black box's predictions.
struct TreeSurrogate {
  gbm::Ensemble model;  ///< one tree, base = mean prediction, no shrinkage or penalty
  double fidelity_r2 = 0.0;
  std::map<std::string, double> importance;

  const gbm::Tree& tree() const { return model.trees().front(); }
};

template <Regressor M>
TreeSurrogate fit_surrogate_tree(const M& model, const FeatureMatrix& x, int max_depth) {
  require_compatible(model, x);
  if (max_depth < 1) throw ConfigError("tree surrogate: max_depth must be >= 1");
  const auto yhat = predict_all(model, x);
  // Squared loss with lambda = 0: leaf weights are means and split gains are
  // halved SSE reductions, i.e. variance-reduction CART.
  TreeSurrogate s;
  s.model = gbm::train(x, yhat, gbm::Hyperparams{max_depth, 1, 0.0, 0.0, 1.0});
  s.fidelity_r2 = stats::metrics(yhat, predict_all(s.model, x)).r2;
  s.importance = gbm::feature_importance_gain(s.model);
  return s;
}

// ---------------------------------------------------------------------------
// LIME

struct LimeOptions {
  std::size_t n_samples = 5000;
  /// Kernel width; 0.75 * sqrt(feature count) when unset.
  std::optional<double> kernel_width;
  double ridge_alpha = 1.0;
  std::uint64_t seed = 42;
  /// Per-feature flag; derived from feature names when empty.
  std::vector<bool> categorical;
};

struct LimeExplanation {
  Attribution attribution;
  double local_r2 = 0.0;
  /// Value range of the instance's bin (or its level) per feature.
  std::vector<std::string> labels;
};

namespace detail {

/// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Discretizer {
  bool categorical = false;
  std::vector<double> edges;  ///< ascending, distinct quartile edges

  int bin(double v) const {
    if (categorical) return 0;
    return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
  }
  bool same(double a, double b) const { return categorical ? a == b : bin(a) == bin(b); }

  std::string label(const std::string& name, double v) const {
    if (categorical) return name + " = " + csv::format_number(v);
    const int b = bin(v);
    const auto e = [&](int k) { return csv::format_number(edges[static_cast<std::size_t>(k)]); };
    if (edges.empty()) return name;
    if (b == 0) return name + " <= " + e(0);
    if (b == static_cast<int>(edges.size())) return name + " > " + e(b - 1);
    return e(b - 1) + " < " + name + " <= " + e(b);
  }
};

}  // namespace detail

/// LIME-style local explanation on binary same-bin indicators.
template <Regressor M>
LimeExplanation lime_explain(const M& model, std::span<const double> instance, const FeatureMatrix& x_ref,
                             const LimeOptions& options = {}) {
  require_compatible(model, x_ref);
  const std::size_t p = x_ref.cols();
  if (instance.size() != p) throw ConfigError("lime: instance width mismatch");
  if (options.n_samples < 50) throw ConfigError("lime: n_samples must be >= 50");
  if (x_ref.rows() == 0) throw DataError("lime: empty reference matrix");
  const double width = options.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(p)));
  if (!(width > 0.0)) throw ConfigError("lime: kernel width must be > 0");

  std::vector<detail::Discretizer> disc(p);
  for (std::size_t j = 0; j < p; ++j) {
    disc[j].categorical = options.categorical.empty() ? features::is_categorical(x_ref.feature_names[j])
                                                      : options.categorical.at(j);
    if (disc[j].categorical) continue;
    auto col = x_ref.column(j);
    std::sort(col.begin(), col.end());
    for (double q : {0.25, 0.5, 0.75}) {
      const double e = detail::quantile_sorted(col, q);
      if (disc[j].edges.empty() || e > disc[j].edges.back()) disc[j].edges.push_back(e);
    }
  }

  const std::size_t n = options.n_samples;
  Rng rng(options.seed);
  linalg::Matrix z = linalg::Matrix::Ones(n, p);
  linalg::Vector y(n), w(n);
  std::vector<double> row(instance.begin(), instance.end());
  y(0) = model.predict(row);
  w(0) = 1.0;
  bool varied = false;
  for (std::size_t s = 1; s < n; ++s) {
    std::size_t differ = 0;
    for (std::size_t j = 0; j < p; ++j) {
      const double v = x_ref.at(rng.index(x_ref.rows()), j);
      row[j] = v;
      const bool same = disc[j].same(v, instance[j]);
      z(s, j) = same ? 1.0 : 0.0;
      if (!same) ++differ;
    }
    varied = varied || differ > 0;
    const double d = static_cast<double>(differ) / static_cast<double>(p);
    w(s) = std::exp(-d * d / (width * width));
    y(s) = model.predict(row);
  }
  if (!varied) throw DataError("lime: perturbation error, every sample is identical to the instance");

  const double wsum = w.sum();
  const linalg::Vector zbar = (z.transpose() * w) / wsum;
  const double ybar = w.dot(y) / wsum;
  const linalg::Matrix zc = z.rowwise() - zbar.transpose();
  const linalg::Vector yc = y.array() - ybar;
  linalg::Matrix a = zc.transpose() * w.asDiagonal() * zc;
  a.diagonal().array() += options.ridge_alpha;
  const linalg::Vector beta = linalg::solve_symmetric(a, zc.transpose() * (w.array() * yc.array()).matrix());
  const double intercept = ybar - zbar.dot(beta);

  const linalg::Vector resid = yc - zc * beta;
  const double sse = (w.array() * resid.array().square()).sum();
  const double sst = (w.array() * yc.array().square()).sum();
  const double r2 = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;

  LimeExplanation e;
  e.attribution.features = x_ref.feature_names;
  e.attribution.contributions.assign(beta.data(), beta.data() + p);
  e.attribution.base_value = intercept;
  e.attribution.prediction = y(0);
  e.attribution.local_r2 = r2;
  e.local_r2 = r2;
  for (std::size_t j = 0; j < p; ++j) e.labels.push_back(disc[j].label(x_ref.feature_names[j], instance[j]));
  return e;
}

// ---------------------------------------------------------------------------
// Exact Shapley values

inline constexpr std::size_t kMaxExactShapleyFeatures = 20;

/// Interventional Shapley values with mean-background masking, by full
/// subset enumeration. v(S) = f(instance on S, background elsewhere).
template <Regressor M>
Attribution shap_exact(const M& model, std::span<const double> instance, std::span<const double> background) {
  const auto& names = model.feature_names();
  const std::size_t p = names.size();
  if (instance.size() != p || background.size() != p) throw ConfigError("shap: width mismatch");
  if (p > kMaxExactShapleyFeatures)
    throw ConfigError("shap: " + std::to_string(p) + " features exceed the exact-enumeration limit of " +
                      std::to_string(kMaxExactShapleyFeatures) + "; use a sampling approximation instead");
  const std::size_t subsets = std::size_t{1} << p;
  std::vector<double> value(subsets);
  std::vector<double> row(p);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    for (std::size_t j = 0; j < p; ++j) row[j] = (mask >> j) & 1u ? instance[j] : background[j];
    value[mask] = model.predict(row);
  }
  // weight(s) = s! (p - s - 1)! / p! = 1 / (p * C(p - 1, s))
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) binom = binom * static_cast<double>(p - 1 - s + k) / static_cast<double>(k);
    weight[s] = 1.0 / (static_cast<double>(p) * binom);
  }
  Attribution a;
  a.features = names;
  a.contributions.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    CompensatedSum phi;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
      phi.add(weight[size] * (value[mask | bit] - value[mask]));
    }
    a.contributions[i] = phi.value();
  }
  a.base_value = value[0];
  a.prediction = value[subsets - 1];
  return a;
}

// ---------------------------------------------------------------------------
// Case-study selection

struct CasePair {
  std::size_t accurate = 0;  ///< index into the forecast run
  std::size_t deviated = 0;
};

/// First (accurate, deviated) pair sharing the same true value, scanning
/// accurate candidates in time order.
inline std::optional<CasePair> select_case_pair(const forecast::ForecastRun& run, double accurate_below = 0.01,
                                                double deviated_above = 2.0) {
  for (std::size_t i = 0; i < run.size(); ++i) {
    if (!(std::abs(run.y_pred[i] - run.y_true[i]) < accurate_below)) continue;
    for (std::size_t j = 0; j < run.size(); ++j) {
      if (run.y_true[j] == run.y_true[i] && std::abs(run.y_pred[j] - run.y_true[j]) > deviated_above)
        return CasePair{i, j};
    }
  }
  return std::nullopt;
}

}  // namespace roomcast::explain
