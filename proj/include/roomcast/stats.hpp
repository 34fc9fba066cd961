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
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "roomcast/common.hpp"
#include "roomcast/linalg.hpp"

namespace roomcast::stats {

namespace detail {

inline double mean(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

}  // namespace detail

/// Sample autocorrelation for lags 0..max_lag, normalised by the lag-0
/// autocovariance (both with denominator n).
inline std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) throw ConfigError("acf: series length must exceed max_lag");
  const double mu = detail::mean(series);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mu;
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  if (!(c0 > 0.0) || c0 <= 1e-300 * static_cast<double>(n))
    throw DataError("acf: degenerate input, zero-variance series");
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t i = k; i < n; ++i) ck += centered[i] * centered[i - k];
    out[k] = ck / c0;
  }
  return out;
}

/// Partial autocorrelation via the Durbin-Levinson recursion on acf.
inline std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
  const auto rho = acf(series, max_lag);
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  if (max_lag == 0) return out;
  std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
  double v = 1.0;  // innovation variance relative to c0
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = rho[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * rho[k - j];
    const double a = num / v;
    phi[k] = a;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - a * prev[k - j];
    v *= (1.0 - a * a);
    out[k] = a;
    if (!(v > 0.0)) {
      // Perfectly predictable series; later partial correlations are zero.
      for (std::size_t j = k + 1; j <= max_lag; ++j) out[j] = 0.0;
      break;
    }
    prev = phi;
  }
  return out;
}

/// Augmented Dickey-Fuller result (constant, no trend).
struct AdfResult {
  double statistic = 0.0;
  std::size_t used_lags = 0;
  std::size_t nobs = 0;
  /// Critical values at 1%, 5%, 10%.
  std::array<double, 3> critical_values{};
  /// Rejection of the unit-root null at 1%, 5%, 10%.
  std::array<bool, 3> reject_at{};
  /// p-value bracket implied by the critical-value table.
  std::pair<double, double> p_bracket{0.0, 1.0};
};

inline constexpr std::array<double, 3> kAdfLevels = {0.01, 0.05, 0.10};

/// MacKinnon (2010) response surface for the constant-only Dickey-Fuller
/// distribution, one asset: cv = b0 + b1/n + b2/n^2 + b3/n^3.
inline std::array<double, 3> adf_critical_values(std::size_t nobs) {
  static constexpr double kCoef[3][4] = {
      {-3.43035, -6.5393, -16.786, -79.433},
      {-2.86154, -2.8903, -4.234, -40.040},
      {-2.56677, -1.5384, -2.809, 0.0},
  };
  const double n = static_cast<double>(nobs);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i)
    out[i] = kCoef[i][0] + kCoef[i][1] / n + kCoef[i][2] / (n * n) + kCoef[i][3] / (n * n * n);
  return out;
}

/// Schwert rule: floor(12 * (n / 100)^(1/4)).
inline std::size_t default_adf_max_lags(std::size_t n) {
  return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

namespace detail {

/// Regression of dy[t] on [1, y[t], dy[t-1..t-p]] for dy indices in [start, m).
inline void adf_design(std::span<const double> y, const std::vector<double>& dy, std::size_t lags,
                       std::size_t start, linalg::Matrix& x, linalg::Vector& target) {
  const std::size_t rows = dy.size() - start;
  x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(2 + lags));
  target.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = start + r;
    const auto row = static_cast<Eigen::Index>(r);
    target(row) = dy[t];
    x(row, 0) = 1.0;
    x(row, 1) = y[t];
    for (std::size_t i = 1; i <= lags; ++i) x(row, static_cast<Eigen::Index>(1 + i)) = dy[t - i];
  }
}

inline linalg::OlsFit adf_regression(std::span<const double> y, const std::vector<double>& dy,
                                     std::size_t lags, std::size_t start) {
  linalg::Matrix x;
  linalg::Vector target;
  adf_design(y, dy, lags, start, x, target);
  return linalg::ols(x, target);
}

/// Residual sums of squares of every lag order 0..max_p on the common sample
/// starting at max_p. The models are nested column prefixes of one design, so
/// a single QR gives them all: SSR(k columns) = sum of (Q'y)_i^2 for i >= k.
inline std::vector<double> adf_nested_ssr(std::span<const double> y, const std::vector<double>& dy,
                                          std::size_t max_p) {
  linalg::Matrix x;
  linalg::Vector target;
  adf_design(y, dy, max_p, max_p, x, target);
  const Eigen::HouseholderQR<linalg::Matrix> qr(x);
  const linalg::Vector z = qr.householderQ().adjoint() * target;
  const auto k = x.cols();
  const double scale = qr.matrixQR().diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(std::abs(qr.matrixQR()(i, i)) > 1e-12 * scale)) throw NumericError("adf: singular lag regression");
  std::vector<double> ssr(max_p + 1);
  double tail = z.tail(z.size() - k).squaredNorm();
  for (Eigen::Index c = k; c >= 2; --c) {
    ssr[static_cast<std::size_t>(c - 2)] = tail;
    tail += z(c - 1) * z(c - 1);
  }
  return ssr;
}

}  // namespace detail

/// ADF unit-root test with AIC lag selection over 0..max_lags (a common
/// sample is used for the selection, the chosen order is then refit on all
/// available observations).
inline AdfResult adf_test(std::span<const double> series, std::optional<std::size_t> max_lags = std::nullopt) {
  const std::size_t n = series.size();
  const std::size_t max_p = max_lags.value_or(default_adf_max_lags(n));
  if (n < 25 + max_p) throw ConfigError("adf: series too short for the requested lag order");
  std::vector<double> dy(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) dy[i] = series[i + 1] - series[i];

  std::size_t best_p = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  const auto ssr = detail::adf_nested_ssr(series, dy, max_p);
  const double nobs = static_cast<double>(dy.size() - max_p);
  for (std::size_t p = 0; p <= max_p; ++p) {
    if (!(ssr[p] > 0.0)) throw NumericError("adf: perfect fit, statistic undefined");
    const double aic = nobs * std::log(ssr[p] / nobs) + 2.0 * static_cast<double>(p + 2);
    if (aic < best_aic) {
      best_aic = aic;
      best_p = p;
    }
  }
  const auto fit = detail::adf_regression(series, dy, best_p, best_p);
  const double dof = static_cast<double>(fit.nobs) - static_cast<double>(best_p + 2);
  const double sigma2 = fit.ssr / dof;
  const double se = std::sqrt(sigma2 * fit.xtx_inverse(1, 1));
  if (!(se > 0.0) || !std::isfinite(se)) throw NumericError("adf: degenerate standard error");

  AdfResult r;
  r.statistic = fit.coefficients(1) / se;
  r.used_lags = best_p;
  r.nobs = fit.nobs;
  r.critical_values = adf_critical_values(fit.nobs);
  for (int i = 0; i < 3; ++i) r.reject_at[i] = r.statistic < r.critical_values[i];
  if (r.reject_at[0]) r.p_bracket = {0.0, 0.01};
  else if (r.reject_at[1]) r.p_bracket = {0.01, 0.05};
  else if (r.reject_at[2]) r.p_bracket = {0.05, 0.10};
  else r.p_bracket = {0.10, 1.0};
  return r;
}

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

/// Counts over bins [c - w/2, c + w/2) centred on integer multiples of the
/// bin width; every bin between the extremes is emitted, empty or not.
inline std::vector<HistogramBin> histogram(std::span<const double> series, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("histogram: bin_width must be > 0");
  if (series.empty()) return {};
  std::map<long long, std::size_t> counts;
  for (double v : series) {
    if (!std::isfinite(v)) throw DataError("histogram: non-finite value");
    counts[static_cast<long long>(std::floor(v / bin_width + 0.5))]++;
  }
  std::vector<HistogramBin> out;
  const long long lo = counts.begin()->first, hi = counts.rbegin()->first;
  for (long long k = lo; k <= hi; ++k) {
    const auto it = counts.find(k);
    out.push_back({static_cast<double>(k) * bin_width, it == counts.end() ? 0 : it->second});
  }
  return out;
}

/// Inverse standard normal CDF, Acklam's rational approximation
/// (|error| < 1.15e-9 relative in the central region).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - kLow) return -normal_quantile(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

struct QqPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

/// Normal Q-Q pairs; theoretical quantiles use plotting positions
/// (i - 0.5) / n, rescaled by the sample mean and standard deviation.
inline std::vector<QqPoint> qq_normal(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 3) throw ConfigError("qq_normal: need at least 3 values");
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  const double mu = detail::mean(sorted);
  double ss = 0.0;
  for (double v : sorted) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DataError("qq_normal: degenerate input, zero variance");
  std::vector<QqPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Mirror the lower half so the quantiles are exactly antisymmetric.
    const std::size_t lower = std::min(i, n - 1 - i);
    double z = normal_quantile((static_cast<double>(lower) + 0.5) / static_cast<double>(n));
    if (2 * i + 1 == n) z = 0.0;
    else if (i != lower) z = -z;
    out[i] = {mu + sd * z, sorted[i]};
  }
  return out;
}

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  /// Undefined when any true value is zero.
  std::optional<double> mape;
  double r2 = 0.0;
  std::size_t n = 0;
};

/// MSE, MAE, MAPE (percent) and R^2 = 1 - SSE/SST. With zero total variance
/// R^2 is 1 for a perfect fit and 0 otherwise.
inline MetricReport metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ConfigError("metrics: length mismatch");
  if (y_true.empty()) throw ConfigError("metrics: empty input");
  const std::size_t n = y_true.size();
  const double mu = detail::mean(y_true);
  CompensatedSum sse, sae, sape, sst;
  bool mape_defined = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y_true[i] - y_pred[i];
    sse.add(e * e);
    sae.add(std::abs(e));
    sst.add((y_true[i] - mu) * (y_true[i] - mu));
    if (y_true[i] == 0.0) mape_defined = false;
    else sape.add(std::abs(e) / std::abs(y_true[i]));
  }
  MetricReport r;
  r.n = n;
  const double dn = static_cast<double>(n);
  r.mse = sse.value() / dn;
  r.mae = sae.value() / dn;
  if (mape_defined) r.mape = 100.0 * sape.value() / dn;
  if (sst.value() > 0.0) r.r2 = 1.0 - sse.value() / sst.value();
  else r.r2 = sse.value() == 0.0 ? 1.0 : 0.0;
  return r;
}

}  // namespace roomcast::stats
