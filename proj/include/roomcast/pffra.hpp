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

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "roomcast/common.hpp"
#include "roomcast/features.hpp"
#include "roomcast/fft.hpp"
#include "roomcast/forecast.hpp"
#include "roomcast/gbm.hpp"

namespace roomcast::pffra {

enum class Taper { kNone, kHann };

/// One-sided amplitude spectrum with the DC term reported separately.
///
/// For bins 1 <= k < n/2 the amplitude is 2|F_k|/n; the Nyquist bin of an
/// even-length series is |F_k|/n; dc = F_0/n is the series mean. A pure
/// cosine of amplitude A on an exact bin therefore shows magnitude A.
struct Spectrum {
  std::vector<double> frequencies;  ///< cycles/hour, ascending, DC excluded
  std::vector<double> magnitudes;   ///< °C
  double dc = 0.0;                  ///< °C
  std::size_t n = 0;
  double sample_interval = 600.0;   ///< seconds
  Taper taper = Taper::kNone;

  bool has_nyquist_bin() const { return n % 2 == 0; }

  /// Mean-square contribution of bin index i (0-based into magnitudes).
  double bin_power(std::size_t i) const {
    const double a = magnitudes[i];
    const bool nyquist = has_nyquist_bin() && i + 1 == magnitudes.size();
    return nyquist ? a * a : 0.5 * a * a;
  }

  /// dc^2 + sum of bin powers; equals mean(x^2) for an untapered spectrum.
  double total_power() const {
    CompensatedSum s;
    s.add(dc * dc);
    for (std::size_t i = 0; i < magnitudes.size(); ++i) s.add(bin_power(i));
    return s.value();
  }

  double nyquist() const { return 0.5 * 3600.0 / sample_interval; }
};

/// Amplitude spectrum of a uniformly sampled series (`sample_interval` in
/// seconds). The Hann option scales by the window's coherent gain.
inline Spectrum dft(std::span<const double> series, double sample_interval = 600.0,
                    Taper taper = Taper::kNone) {
  const std::size_t n = series.size();
  if (n < 2) throw ConfigError("dft: series length must be >= 2");
  if (!(sample_interval > 0.0)) throw ConfigError("dft: sample interval must be > 0");
  std::vector<double> x(series.begin(), series.end());
  double norm = static_cast<double>(n);
  if (taper == Taper::kHann) {
    CompensatedSum gain;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));
      x[t] *= w;
      gain.add(w);
    }
    norm = gain.value();
  }
  const auto f = fft::dft(x);
  Spectrum s;
  s.n = n;
  s.sample_interval = sample_interval;
  s.taper = taper;
  if (taper == Taper::kNone) {
    CompensatedSum mean;
    for (double v : series) mean.add(v);
    s.dc = mean.value() / static_cast<double>(n);
  } else {
    s.dc = f[0].real() / norm;
  }
  const double fs = 3600.0 / sample_interval;  // samples per hour
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    s.frequencies.push_back(fs * static_cast<double>(k) / static_cast<double>(n));
    s.magnitudes.push_back((nyquist ? 1.0 : 2.0) * std::abs(f[k]) / norm);
  }
  return s;
}

/// Frequency interval in cycles/hour. The upper bound is inclusive; the lower
/// bound is inclusive only when `include_lower` is set, which is the only way
/// to capture the DC term (lower = 0).
struct Band {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool include_lower = false;
};

/// {dc}, low (0, 0.2], mid (0.2, 1], high (1, 3] cycles/hour.
inline std::vector<Band> default_bands() {
  return {{"dc", 0.0, 0.0, true}, {"low", 0.0, 0.2, false}, {"mid", 0.2, 1.0, false}, {"high", 1.0, 3.0, false}};
}

/// Mean-square power (°C^2) per band.
inline std::map<std::string, double> band_energy(const Spectrum& s, const std::vector<Band>& bands) {
  const double nyq = s.nyquist();
  std::map<std::string, double> out;
  for (const auto& b : bands) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower < 0.0 || b.upper < b.lower ||
        b.upper > nyq * (1.0 + 1e-12))
      throw ConfigError("band_energy: malformed interval for band '" + b.name + "'");
    if (out.contains(b.name)) throw ConfigError("band_energy: duplicate band '" + b.name + "'");
    CompensatedSum e;
    if (b.include_lower && b.lower == 0.0) e.add(s.dc * s.dc);
    for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
      const double f = s.frequencies[i];
      const bool above = b.include_lower ? f >= b.lower : f > b.lower;
      if (above && f <= b.upper) e.add(s.bin_power(i));
    }
    out[b.name] = e.value();
  }
  return out;
}

using Means = std::map<std::string, double>;

/// Column means keyed by feature name.
inline Means column_means(const FeatureMatrix& x) {
  const auto v = x.column_means();
  Means out;
  for (std::size_t j = 0; j < x.cols(); ++j) out[x.feature_names[j]] = v[j];
  return out;
}

/// Replaces the listed columns by their scalar means; other columns are
/// untouched. Values need not be integral (a binary column may become 0.37).
inline FeatureMatrix mean_substitute(FeatureMatrix x, const std::set<std::string>& names, const Means& means) {
  for (const auto& name : names) {
    const std::size_t j = x.index_of(name);
    const auto it = means.find(name);
    if (it == means.end()) throw ConfigError("mean_substitute: no mean for feature '" + name + "'");
    for (std::size_t i = 0; i < x.rows(); ++i) x.at(i, j) = it->second;
  }
  return x;
}

/// A model whose inputs have some columns pinned to constants.
template <Regressor M>
class MaskedModel {
 public:
  MaskedModel(const M& model, const std::set<std::string>& names, const Means& means) : model_(model) {
    const auto& fn = model.feature_names();
    for (const auto& name : names) {
      const auto it = std::find(fn.begin(), fn.end(), name);
      if (it == fn.end()) throw ConfigError("mask: unknown feature '" + name + "'");
      const auto m = means.find(name);
      if (m == means.end()) throw ConfigError("mask: no mean for feature '" + name + "'");
      pinned_.emplace_back(static_cast<std::size_t>(it - fn.begin()), m->second);
    }
  }

  double predict(std::span<const double> row) const {
    scratch_.assign(row.begin(), row.end());
    for (const auto& [j, v] : pinned_) scratch_[j] = v;
    return model_.predict(scratch_);
  }

  const std::vector<std::string>& feature_names() const { return model_.feature_names(); }

 private:
  const M& model_;
  std::vector<std::pair<std::size_t, double>> pinned_;
  mutable std::vector<double> scratch_;
};

struct BandEnergies {
  double feature_only = 0.0;
  double feature_permuted = 0.0;
  double original = 0.0;
  double truth = 0.0;
};

struct Report {
  std::string feature;
  Spectrum spectrum_feature_only;      ///< feature kept, all others mean-substituted
  Spectrum spectrum_feature_permuted;  ///< feature mean-substituted, others kept
  Spectrum spectrum_original;
  Spectrum spectrum_truth;
  std::map<std::string, BandEnergies> band_energies;
};

struct Options {
  Taper taper = Taper::kNone;
  std::vector<Band> bands = default_bands();
  double sample_interval = 600.0;
};

namespace detail {

inline Report assemble(const std::string& feature, std::span<const double> only, std::span<const double> permuted,
                       std::span<const double> original, std::span<const double> truth, const Options& opt) {
  Report r;
  r.feature = feature;
  r.spectrum_feature_only = dft(only, opt.sample_interval, opt.taper);
  r.spectrum_feature_permuted = dft(permuted, opt.sample_interval, opt.taper);
  r.spectrum_original = dft(original, opt.sample_interval, opt.taper);
  r.spectrum_truth = dft(truth, opt.sample_interval, opt.taper);
  const auto e_only = band_energy(r.spectrum_feature_only, opt.bands);
  const auto e_perm = band_energy(r.spectrum_feature_permuted, opt.bands);
  const auto e_orig = band_energy(r.spectrum_original, opt.bands);
  const auto e_true = band_energy(r.spectrum_truth, opt.bands);
  for (const auto& b : opt.bands)
    r.band_energies[b.name] = {e_only.at(b.name), e_perm.at(b.name), e_orig.at(b.name), e_true.at(b.name)};
  return r;
}

inline std::set<std::string> complement(const std::vector<std::string>& names, const std::string& keep) {
  std::set<std::string> out(names.begin(), names.end());
  out.erase(keep);
  return out;
}

}  // namespace detail

/// Permutation-feature frequency response analysis on a static design
/// matrix: spectra of the predictions with `feature` mean-substituted, with
/// every other feature mean-substituted, unmodified, and of the truth.
template <Regressor M>
Report analyze(const M& model, const FeatureMatrix& x, std::span<const double> y_true, const std::string& feature,
               const Means& means, const Options& options = {}) {
  require_compatible(model, x);
  x.index_of(feature);
  if (y_true.size() != x.rows()) throw ConfigError("pffra: truth length mismatch");
  const auto permuted = predict_all(model, mean_substitute(x, {feature}, means));
  const auto only = predict_all(model, mean_substitute(x, detail::complement(x.feature_names, feature), means));
  const auto original = predict_all(model, x);
  return detail::assemble(feature, only, permuted, original, y_true, options);
}

/// Same analysis under the rolling protocol: substitution applies to the
/// model's input view while MVART still recurses on the (masked) model's own
/// predictions. The protocol must score every instant (horizon equal to the
/// access interval) so the series stays uniformly sampled.
template <Regressor M>
Report analyze_rolling(const M& model, const TimeTable& table, const EngineeringConfig& config,
                       const FeatureSelection& selection, const forecast::Protocol& protocol,
                       forecast::Window window, const std::string& feature, const Means& means,
                       const Options& options = {}) {
  if (protocol.horizon != protocol.access_interval)
    throw ConfigError("pffra: rolling analysis needs horizon equal to the access interval");
  const auto& names = model.feature_names();
  if (std::find(names.begin(), names.end(), feature) == names.end())
    throw ConfigError("pffra: unknown feature '" + feature + "'");
  const MaskedModel<M> permuted_model(model, {feature}, means);
  const MaskedModel<M> only_model(model, detail::complement(names, feature), means);
  const auto original = forecast::rolling_forecast(model, table, config, selection, protocol, window);
  const auto permuted = forecast::rolling_forecast(permuted_model, table, config, selection, protocol, window);
  const auto only = forecast::rolling_forecast(only_model, table, config, selection, protocol, window);
  Options opt = options;
  opt.sample_interval = static_cast<double>(table.interval.count());
  return detail::assemble(feature, only.y_pred, permuted.y_pred, original.y_pred, original.y_true, opt);
}

}  // namespace roomcast::pffra
