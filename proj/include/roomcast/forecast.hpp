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

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "roomcast/common.hpp"
#include "roomcast/dataio.hpp"
#include "roomcast/features.hpp"
#include "roomcast/gbm.hpp"
#include "roomcast/stats.hpp"

namespace roomcast::forecast {

using namespace std::chrono_literals;

/// When true values become available and how far ahead each anchor predicts.
struct Protocol {
  Seconds access_interval = 24h;
  Seconds horizon = 8h;
  /// Anchors sit at local midnight + offset (mod access_interval).
  Seconds anchor_offset = 0s;
};

/// Row range [begin, end) of the table that is scored.
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Result of a rolling multi-step forecast with periodic re-anchoring.
struct ForecastRun {
  Seconds access_interval{};
  Seconds horizon{};
  std::vector<Instant> anchors;
  /// Scored predictions, one per instant in (anchor, anchor + horizon].
  std::vector<Instant> timestamps;
  std::vector<double> y_true;
  std::vector<double> y_pred;
  std::vector<std::size_t> anchor_id;
  /// Source-table row of each prediction.
  std::vector<std::size_t> rows;
  /// Exact model inputs behind each prediction (MVART from the rolling buffer).
  FeatureMatrix inputs;

  std::size_t size() const { return y_pred.size(); }
};

namespace detail {

inline std::size_t steps_of(Seconds span, Seconds interval, const char* what) {
  if (span.count() <= 0 || span.count() % interval.count() != 0)
    throw ConfigError(std::string("forecast: ") + what + " must be a positive multiple of the sampling interval");
  return static_cast<std::size_t>(span.count() / interval.count());
}

}  // namespace detail

/// Recursive forecasting. At every anchor the MVART buffer is reset from the
/// true target history up to and including the anchor instant; the model
/// then predicts one step at a time for `horizon`, appending each prediction
/// to the buffer. Exogenous columns are read from the table as a given
/// scenario. Instants after anchor + horizon and before the next anchor are
/// not scored.
template <Regressor M>
ForecastRun rolling_forecast(const M& model, const TimeTable& table, const EngineeringConfig& config,
                             const FeatureSelection& selection, const Protocol& protocol = {},
                             std::optional<Window> window = std::nullopt) {
  if (protocol.horizon > protocol.access_interval)
    throw ConfigError("forecast: horizon must not exceed the access interval");
  const std::size_t horizon = detail::steps_of(protocol.horizon, table.interval, "horizon");
  detail::steps_of(protocol.access_interval, table.interval, "access interval");
  const Window w = window.value_or(Window{0, table.size()});
  if (w.begin >= w.end || w.end > table.size()) throw ConfigError("forecast: invalid window");

  const FeatureMatrix full = build_design_matrix(table, config, selection, /*drop_warmup=*/false);
  require_compatible(model, full);
  const auto mvart_col = full.find(features::kMvart);
  const std::size_t history = mvart_col ? config.mva_window : 0;

  ForecastRun run;
  run.access_interval = protocol.access_interval;
  run.horizon = protocol.horizon;
  run.inputs.feature_names = full.feature_names;

  const auto local_seconds = [&](std::size_t i) {
    return config.clock.to_local(table.timestamps[i]).time_since_epoch().count();
  };
  std::vector<double> buffer;
  std::vector<double> row(full.cols());
  for (std::size_t a = w.begin; a + 1 < w.end; ++a) {
    const auto phase = (local_seconds(a) - protocol.anchor_offset.count()) % protocol.access_interval.count();
    if (phase != 0) continue;
    if (a + 1 < history) continue;  // not enough true history for the buffer
    const std::size_t id = run.anchors.size();
    run.anchors.push_back(table.timestamps[a]);
    buffer.assign(table.target.begin() + static_cast<std::ptrdiff_t>(a + 1 - history),
                  table.target.begin() + static_cast<std::ptrdiff_t>(a + 1));
    for (std::size_t s = 1; s <= horizon && a + s < w.end; ++s) {
      const std::size_t t = a + s;
      const auto src = full.row(t);
      std::copy(src.begin(), src.end(), row.begin());
      if (mvart_col) {
        double sum = 0.0;
        for (std::size_t k = buffer.size() - history; k < buffer.size(); ++k) sum += buffer[k];
        row[*mvart_col] = sum / static_cast<double>(history);
      }
      const double pred = model.predict(row);
      buffer.push_back(pred);
      run.timestamps.push_back(table.timestamps[t]);
      run.y_true.push_back(table.target[t]);
      run.y_pred.push_back(pred);
      run.anchor_id.push_back(id);
      run.rows.push_back(t);
      run.inputs.values.insert(run.inputs.values.end(), row.begin(), row.end());
      run.inputs.target.push_back(table.target[t]);
      run.inputs.timestamps.push_back(table.timestamps[t]);
    }
  }
  if (run.size() == 0) throw DataError("forecast: no scored predictions in the window");
  return run;
}

inline stats::MetricReport score(const ForecastRun& run) { return stats::metrics(run.y_true, run.y_pred); }

/// A trained configuration and its validation forecast.
struct Evaluation {
  FeatureSelection selection;
  EngineeringConfig config;
  gbm::Hyperparams params;
  gbm::Ensemble model;
  ForecastRun run;
  stats::MetricReport validation;
};

/// Training rows of a design matrix built over the full table.
inline FeatureMatrix rows_in(const FeatureMatrix& m, std::size_t begin, std::size_t end) {
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t src = m.source_offset + i;
    if (src < begin) lo = i + 1;
    if (src < end) hi = i + 1;
  }
  if (lo >= hi) throw DataError("no design-matrix rows inside the requested range");
  return m.slice(lo, hi);
}

/// Trains on the training range and scores a rolling forecast over the
/// validation range (history before it is available to the forecaster).
/// With `grid`, hyperparameters are chosen by grid search on the same
/// validation protocol.
inline Evaluation evaluate_selection(const TimeTable& table, const SplitRanges& ranges,
                                     const EngineeringConfig& config, const FeatureSelection& selection,
                                     const gbm::Hyperparams& params, const Protocol& protocol = {},
                                     const gbm::GridRanges* grid = nullptr) {
  const FeatureMatrix design = build_design_matrix(table, config, selection);
  const FeatureMatrix train_x = rows_in(design, ranges.train_begin, ranges.train_end);
  const Window val{ranges.val_begin, ranges.val_end};
  Evaluation e{selection, config, params, {}, {}, {}};
  if (grid) {
    e.params = gbm::grid_search(train_x, *grid, [&](const gbm::Ensemble& m) {
                 return score(rolling_forecast(m, table, config, selection, protocol, val));
               }).best;
  }
  e.model = gbm::train(train_x, e.params);
  e.run = rolling_forecast(e.model, table, config, selection, protocol, val);
  e.validation = score(e.run);
  return e;
}

/// One row of a sweep table.
struct SweepRow {
  Seconds setting{};  ///< window width or predicting interval
  stats::MetricReport metrics;
};

/// Re-evaluates a trained model with access interval = horizon = each
/// predicting interval, over the validation window.
template <Regressor M>
std::vector<SweepRow> horizon_sweep(const M& model, const TimeTable& table, const EngineeringConfig& config,
                                    const FeatureSelection& selection, const std::vector<Seconds>& intervals,
                                    Window validation) {
  if (intervals.empty()) throw ConfigError("horizon_sweep: no intervals");
  std::vector<SweepRow> out;
  for (const auto interval : intervals) {
    const Protocol p{interval, interval, 0s};
    out.push_back({interval, score(rolling_forecast(model, table, config, selection, p, validation))});
  }
  return out;
}

/// Feature selection and engineering used for one MVA window width. Width 0
/// means no historical RT and no smoothing.
inline std::pair<FeatureSelection, EngineeringConfig> window_configuration(const EngineeringConfig& base,
                                                                            Seconds width, Seconds interval) {
  EngineeringConfig cfg = base;
  if (width.count() == 0) return {FeatureSelection{true, false, false, true}, cfg};
  if (width.count() < 0 || width.count() % interval.count() != 0)
    throw ConfigError("window_sweep: width must be a non-negative multiple of the sampling interval");
  cfg.mva_window = static_cast<std::size_t>(width.count() / interval.count());
  return {FeatureSelection::all(), cfg};
}

/// MVA window sweep at a fixed protocol (8 h ahead by default).
inline std::vector<SweepRow> window_sweep(const TimeTable& table, const SplitRanges& ranges,
                                          const EngineeringConfig& base, const std::vector<Seconds>& widths,
                                          const gbm::Hyperparams& params, const Protocol& protocol = {},
                                          const gbm::GridRanges* grid = nullptr) {
  if (widths.empty()) throw ConfigError("window_sweep: no widths");
  std::vector<SweepRow> out;
  for (const auto width : widths) {
    const auto [selection, cfg] = window_configuration(base, width, table.interval);
    const auto e = evaluate_selection(table, ranges, cfg, selection, params, protocol, grid);
    out.push_back({width, e.validation});
  }
  return out;
}

}  // namespace roomcast::forecast
