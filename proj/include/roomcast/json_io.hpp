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

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "roomcast/csv.hpp"
#include "roomcast/explain.hpp"
#include "roomcast/forecast.hpp"
#include "roomcast/gbm.hpp"
#include "roomcast/pffra.hpp"
#include "roomcast/stats.hpp"
#include "roomcast/time.hpp"

namespace roomcast::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Model

namespace detail {

inline Json node_to_json(const gbm::Tree& tree, int k, const std::vector<std::string>& names) {
  const auto& n = tree.nodes()[static_cast<std::size_t>(k)];
  if (n.is_leaf()) return Json{{"leaf", n.weight}, {"cover", n.cover}};
  return Json{{"feature", names[static_cast<std::size_t>(n.feature)]},
              {"feature_index", n.feature},
              {"threshold", n.threshold},
              {"gain", n.gain},
              {"cover", n.cover},
              {"left", node_to_json(tree, n.left, names)},
              {"right", node_to_json(tree, n.right, names)}};
}

inline int node_from_json(const Json& j, std::vector<gbm::TreeNode>& nodes, std::size_t width, int depth) {
  if (depth > 64) throw DataError("model: tree too deep");
  const int k = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[k].weight = j.at("leaf").get<double>();
    nodes[k].cover = j.value("cover", 0.0);
    return k;
  }
  gbm::TreeNode n;
  n.feature = j.at("feature_index").get<int>();
  if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= width) throw DataError("model: bad feature index");
  n.threshold = j.at("threshold").get<double>();
  n.gain = j.value("gain", 0.0);
  n.cover = j.value("cover", 0.0);
  n.left = node_from_json(j.at("left"), nodes, width, depth + 1);
  n.right = node_from_json(j.at("right"), nodes, width, depth + 1);
  nodes[k] = n;
  return k;
}

}  // namespace detail

inline Json to_json(const gbm::Ensemble& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees()) trees.push_back(detail::node_to_json(t, 0, m.feature_names()));
  return Json{{"schema_version", kSchemaVersion}, {"kind", "gbm_ensemble"},
              {"base_score", m.base_score()},      {"learning_rate", m.learning_rate()},
              {"lambda", m.lambda()},              {"gamma", m.gamma()},
              {"feature_names", m.feature_names()}, {"trees", trees}};
}

inline gbm::Ensemble ensemble_from_json(const Json& j) {
  try {
    if (j.at("kind").get<std::string>() != "gbm_ensemble") throw DataError("model: not a gbm_ensemble document");
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    std::vector<gbm::Tree> trees;
    for (const auto& t : j.at("trees")) {
      std::vector<gbm::TreeNode> nodes;
      detail::node_from_json(t, nodes, names.size(), 0);
      trees.emplace_back(std::move(nodes));
    }
    return gbm::Ensemble(std::move(names), j.at("base_score").get<double>(), j.at("learning_rate").get<double>(),
                         j.at("lambda").get<double>(), j.at("gamma").get<double>(), std::move(trees));
  } catch (const Json::exception& e) {
    throw DataError(std::string("model: malformed document: ") + e.what());
  }
}

inline Json to_json(const gbm::Hyperparams& h) {
  return Json{{"max_depth", h.max_depth}, {"n_trees", h.n_trees}, {"gamma", h.gamma},
              {"lambda", h.lambda},       {"learning_rate", h.learning_rate}};
}

// ---------------------------------------------------------------------------
// Statistics

inline Json to_json(const stats::MetricReport& m) {
  return Json{{"mse", m.mse}, {"mae", m.mae}, {"mape", nullable(m.mape)}, {"r2", m.r2}, {"n", m.n}};
}

inline Json to_json(const stats::AdfResult& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"statistic", r.statistic},
              {"used_lags", r.used_lags},
              {"nobs", r.nobs},
              {"critical_values", {{"1%", r.critical_values[0]}, {"5%", r.critical_values[1]}, {"10%", r.critical_values[2]}}},
              {"reject_at", {{"1%", r.reject_at[0]}, {"5%", r.reject_at[1]}, {"10%", r.reject_at[2]}}},
              {"p_bracket", {r.p_bracket.first, r.p_bracket.second}}};
}

// ---------------------------------------------------------------------------
// Explanations

inline Json to_json(const explain::Attribution& a) {
  Json contributions = Json::object();
  for (std::size_t j = 0; j < a.features.size(); ++j) contributions[a.features[j]] = a.contributions[j];
  Json out{{"schema_version", kSchemaVersion}, {"base_value", a.base_value}, {"prediction", a.prediction},
           {"contributions", contributions}, {"feature_order", a.features}};
  if (a.local_r2) out["local_r2"] = *a.local_r2;
  return out;
}

inline Json to_json(const explain::LimeExplanation& e) {
  Json out = to_json(e.attribution);
  out["method"] = "lime";
  out["labels"] = e.labels;
  return out;
}

inline Json to_json(const explain::PdpCurve& c) {
  return Json{{"schema_version", kSchemaVersion}, {"feature", c.feature}, {"grid", c.grid},
              {"mean_response", c.mean_response}, {"degenerate", c.degenerate}};
}

inline Json to_json(const explain::LinearSurrogate& s) {
  Json coef = Json::object(), stdcoef = Json::object(), standardization = Json::object();
  for (std::size_t j = 0; j < s.features.size(); ++j) {
    coef[s.features[j]] = s.coefficients[j];
    stdcoef[s.features[j]] = s.standardized_coefficients[j];
    standardization[s.features[j]] = {{"mean", s.feature_means[j]}, {"sd", s.feature_sds[j]}};
  }
  return Json{{"schema_version", kSchemaVersion}, {"kind", "ridge_surrogate"}, {"lambda", s.lambda},
              {"intercept", s.intercept}, {"coefficients", coef},
              {"standardized_intercept", s.standardized_intercept}, {"standardized_coefficients", stdcoef},
              {"standardization", standardization}, {"fidelity_r2", s.fidelity_r2}};
}

inline Json to_json(const explain::TreeSurrogate& s) {
  return Json{{"schema_version", kSchemaVersion}, {"kind", "tree_surrogate"}, {"fidelity_r2", s.fidelity_r2},
              {"importance", s.importance}, {"depth", s.tree().depth()}, {"model", to_json(s.model)}};
}

// ---------------------------------------------------------------------------
// Spectra

inline Json to_json(const pffra::Spectrum& s) {
  return Json{{"dc", s.dc}, {"n", s.n}, {"sample_interval", s.sample_interval},
              {"taper", s.taper == pffra::Taper::kHann ? "hann" : "none"},
              {"frequencies", s.frequencies}, {"magnitudes", s.magnitudes}};
}

inline Json to_json(const pffra::Report& r) {
  Json bands = Json::object();
  for (const auto& [name, e] : r.band_energies)
    bands[name] = {{"feature_only", e.feature_only}, {"feature_permuted", e.feature_permuted},
                   {"original", e.original}, {"truth", e.truth}};
  return Json{{"schema_version", kSchemaVersion},
              {"feature", r.feature},
              {"spectrum_feature_only", to_json(r.spectrum_feature_only)},
              {"spectrum_feature_permuted", to_json(r.spectrum_feature_permuted)},
              {"spectrum_original", to_json(r.spectrum_original)},
              {"spectrum_truth", to_json(r.spectrum_truth)},
              {"band_energies", bands}};
}

// ---------------------------------------------------------------------------
// CSV artifacts

/// frequency,magnitude with the DC term on the first row (frequency 0).
inline void write_spectrum_csv(std::ostream& out, const pffra::Spectrum& s) {
  csv::Writer w(out);
  w.row({"frequency", "magnitude"});
  w.row({"0", csv::format_number(s.dc)});
  for (std::size_t i = 0; i < s.frequencies.size(); ++i)
    w.row({csv::format_number(s.frequencies[i]), csv::format_number(s.magnitudes[i])});
}

inline std::vector<std::string> metric_fields(const stats::MetricReport& m) {
  return {csv::format_number(m.mse), csv::format_number(m.mae), m.mape ? csv::format_number(*m.mape) : "",
          csv::format_number(m.r2)};
}

/// width_or_interval (minutes),mse,mae,mape,r2
inline void write_sweep_csv(std::ostream& out, const std::vector<forecast::SweepRow>& rows) {
  csv::Writer w(out);
  w.row({"width_or_interval", "mse", "mae", "mape", "r2"});
  for (const auto& r : rows) {
    auto fields = metric_fields(r.metrics);
    fields.insert(fields.begin(), csv::format_number(static_cast<double>(r.setting.count()) / 60.0));
    w.row(fields);
  }
}

struct AblationRow {
  std::string group;
  stats::MetricReport metrics;
};

inline void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  csv::Writer w(out);
  w.row({"group", "mse", "mae", "mape", "r2"});
  for (const auto& r : rows) {
    auto fields = metric_fields(r.metrics);
    fields.insert(fields.begin(), r.group);
    w.row(fields);
  }
}

/// timestamp,y_true,y_pred,anchor_id
inline void write_forecast_csv(std::ostream& out, const forecast::ForecastRun& run) {
  csv::Writer w(out);
  w.row({"timestamp", "y_true", "y_pred", "anchor_id"});
  for (std::size_t i = 0; i < run.size(); ++i)
    w.row({format_instant(run.timestamps[i]), csv::format_number(run.y_true[i]), csv::format_number(run.y_pred[i]),
           std::to_string(run.anchor_id[i])});
}

/// Force-plot data: base value, then one row per feature push.
inline void write_force_csv(std::ostream& out, const explain::Attribution& a, std::span<const double> instance) {
  csv::Writer w(out);
  w.row({"feature", "value", "contribution"});
  w.row({"base_value", "", csv::format_number(a.base_value)});
  for (std::size_t j = 0; j < a.features.size(); ++j)
    w.row({a.features[j], csv::format_number(instance[j]), csv::format_number(a.contributions[j])});
  w.row({"prediction", "", csv::format_number(a.prediction)});
}

inline void write_grid_csv(std::ostream& out, const std::vector<gbm::GridRow>& rows) {
  csv::Writer w(out);
  w.row({"max_depth", "n_trees", "gamma", "lambda", "learning_rate", "mse", "mae", "mape", "r2"});
  for (const auto& r : rows) {
    std::vector<std::string> f{std::to_string(r.params.max_depth), std::to_string(r.params.n_trees),
                               csv::format_number(r.params.gamma), csv::format_number(r.params.lambda),
                               csv::format_number(r.params.learning_rate)};
    for (auto& s : metric_fields(r.validation)) f.push_back(std::move(s));
    w.row(f);
  }
}

}  // namespace roomcast::io
