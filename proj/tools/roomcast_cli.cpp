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

// roomcast: command-line front end for the room-temperature forecasting
// pipeline. Every command reads the same key=value configuration, writes its
// artifacts once into --out and finishes with a hashed manifest.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roomcast.hpp"

namespace {

using namespace roomcast;
using nlohmann::json;
namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool quiet = false;
  std::vector<std::string> overrides;
};

/// Resolved configuration plus the output directory of one invocation.
class Session {
 public:
  Session(const GlobalFlags& flags, const std::vector<std::pair<std::string, std::string>>& command_overrides)
      : quiet_(flags.quiet) {
    if (!flags.config.empty()) kv_ = pipeline::KeyValueConfig::load(flags.config);
    for (const auto& o : flags.overrides) kv_.assign(o);
    if (flags.seed) {
      kv_.set("seed", std::to_string(*flags.seed));
      kv_.set("synth.seed", std::to_string(*flags.seed));
    }
    for (const auto& [k, v] : command_overrides) kv_.set(k, v);
    cfg_ = pipeline::PipelineConfig::resolve(kv_);
    out_.emplace(flags.out);
  }

  const pipeline::PipelineConfig& cfg() const { return cfg_; }
  pipeline::PipelineConfig& cfg() { return cfg_; }
  pipeline::OutputDir& out() { return *out_; }

  const TimeTable& table() {
    if (!table_) table_ = pipeline::load_table(cfg_);
    return *table_;
  }

  const SplitRanges& ranges() {
    if (!ranges_) ranges_ = split_ranges(table().timestamps, cfg_.split, cfg_.engineering.clock);
    return *ranges_;
  }

  void say(const std::string& line) const {
    if (!quiet_) std::cout << line << '\n';
  }

  void write_csv(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream s;
    fill(s);
    out().write(name, s.str());
    say("wrote " + (out().root() / name).string());
  }

  void write_json(const std::string& name, const json& j) {
    out().write_json(name, j);
    say("wrote " + (out().root() / name).string());
  }

  void finish(const std::string& command) {
    const std::string name = "manifest_" + command + ".json";
    out().write_manifest(name, command, kv_, cfg_.seed);
    say("wrote " + (out().root() / name).string());
  }

 private:
  bool quiet_;
  pipeline::KeyValueConfig kv_;
  pipeline::PipelineConfig cfg_;
  std::optional<pipeline::OutputDir> out_;
  std::optional<TimeTable> table_;
  std::optional<SplitRanges> ranges_;
};

// ---------------------------------------------------------------------------
// Model files carry the feature groups and MVA window they were trained with.

struct LoadedModel {
  gbm::Ensemble model;
  FeatureSelection selection;
  EngineeringConfig engineering;
};

json model_document(const gbm::Ensemble& model, const FeatureSelection& selection, const EngineeringConfig& e) {
  json doc = io::to_json(model);
  doc["pipeline"] = {{"groups", selection.label()}, {"mva_window", e.mva_window}};
  return doc;
}

LoadedModel load_model(const std::string& path, const EngineeringConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  LoadedModel m{io::ensemble_from_json(doc), FeatureSelection::all(), base};
  if (doc.contains("pipeline")) {
    try {
      m.selection = FeatureSelection::parse(doc["pipeline"].at("groups").get<std::string>());
      m.engineering.mva_window = doc["pipeline"].at("mva_window").get<std::size_t>();
    } catch (const json::exception& e) {
      throw DataError(std::string("model: malformed pipeline block: ") + e.what());
    }
  }
  if (m.model.feature_names() != m.selection.feature_names())
    throw DataError("model features do not match its feature groups (" + m.selection.label() + ")");
  return m;
}

struct SplitView {
  const char* name;
  std::size_t begin;
  std::size_t end;
};

std::vector<SplitView> split_views(const SplitRanges& r) {
  return {{"train", r.train_begin, r.train_end},
          {"validation", r.val_begin, r.val_end},
          {"test", r.test_begin, r.test_end}};
}

SplitView pick_split(const SplitRanges& r, const std::string& name) {
  for (const auto& v : split_views(r))
    if (name == v.name) return v;
  throw ConfigError("unknown split '" + name + "' (expected train, validation or test)");
}

std::vector<Seconds> minutes_list(const std::vector<long long>& minutes) {
  std::vector<Seconds> out;
  for (auto m : minutes) {
    if (m < 0) throw ConfigError("minute values must be non-negative");
    out.push_back(Seconds{m * 60});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(Session& s) {
  const auto& t = s.table();
  s.write_csv("synth.csv", [&](std::ostream& o) { write_csv(o, t); });
  s.say(std::to_string(t.size()) + " rows");
  s.finish("synth");
}

struct IngestArgs {
  std::string input;
  std::string schema;
  std::vector<std::string> events;
};

void cmd_ingest(Session& s, const IngestArgs& a) {
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw ConfigError("cannot read input '" + a.input + "'");
  Schema schema;
  if (!a.schema.empty()) {
    std::ifstream sf(a.schema);
    if (!sf) throw ConfigError("cannot read schema '" + a.schema + "'");
    schema = Schema::parse(sf);
  }
  schema.quantization = s.cfg().quantization_check;
  TimeTable t = ingest_csv(in, schema);
  for (const auto& spec : a.events) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--events expects COLUMN=PATH, got '" + spec + "'");
    const auto path = spec.substr(eq + 1);
    std::ifstream ef(path, std::ios::binary);
    if (!ef) throw ConfigError("cannot read events '" + path + "'");
    t.set_column(spec.substr(0, eq), align_state_change(read_events(ef), t.timestamps));
  }
  t.validate();
  s.write_csv("ingested.csv", [&](std::ostream& o) { write_csv(o, t); });
  json cols = json::array();
  for (const auto& c : t.columns) cols.push_back(c.name);
  s.write_json("ingest_report.json", {{"schema_version", io::kSchemaVersion},
                                      {"rows", t.size()},
                                      {"first", format_instant(t.timestamps.front())},
                                      {"last", format_instant(t.timestamps.back())},
                                      {"interval_seconds", t.interval.count()},
                                      {"target", t.target_name},
                                      {"columns", cols}});
  s.finish("ingest");
}

void cmd_split(Session& s) {
  const auto& t = s.table();
  const auto& r = s.ranges();
  json parts = json::object();
  for (const auto& v : split_views(r)) {
    const auto part = t.slice(v.begin, v.end);
    s.write_csv(std::string(v.name) + ".csv", [&](std::ostream& o) { write_csv(o, part); });
    parts[v.name] = {{"rows", part.size()},
                     {"first", format_instant(part.timestamps.front())},
                     {"last", format_instant(part.timestamps.back())}};
  }
  s.write_json("split.json", {{"schema_version", io::kSchemaVersion}, {"partitions", parts}});
  s.finish("split");
}

struct TrainArgs {
  bool grid = false;
  std::string fit_on = "train";
};

void cmd_train(Session& s, const TrainArgs& a) {
  const auto& c = s.cfg();
  const auto& t = s.table();
  const auto& r = s.ranges();
  if (a.fit_on != "train" && a.fit_on != "train+validation")
    throw ConfigError("--fit-on must be train or train+validation");
  const auto design = build_design_matrix(t, c.engineering, c.selection);
  const forecast::Window val{r.val_begin, r.val_end};

  gbm::Hyperparams params = c.params;
  json grid_json = nullptr;
  if (a.grid) {
    const auto train_x = forecast::rows_in(design, r.train_begin, r.train_end);
    const auto result = gbm::grid_search(train_x, c.grid, [&](const gbm::Ensemble& m) {
      return forecast::score(forecast::rolling_forecast(m, t, c.engineering, c.selection, c.protocol, val));
    });
    params = result.best;
    s.write_csv("grid_scores.csv", [&](std::ostream& o) { io::write_grid_csv(o, result.table); });
    grid_json = {{"combinations", result.table.size()}, {"best", io::to_json(params)}};
  }

  const auto fit_end = a.fit_on == "train" ? r.train_end : r.val_end;
  const auto fit_x = forecast::rows_in(design, r.train_begin, fit_end);
  gbm::TrainingTrace trace;
  const auto model = gbm::train(fit_x, params, &trace);
  const auto in_sample = stats::metrics(fit_x.target, predict_all(model, fit_x));
  const auto validation =
      forecast::score(forecast::rolling_forecast(model, t, c.engineering, c.selection, c.protocol, val));

  s.write_json("model.json", model_document(model, c.selection, c.engineering));
  s.write_csv("training_trace.csv", [&](std::ostream& o) {
    csv::Writer w(o);
    w.row({"round", "train_mse"});
    for (std::size_t i = 0; i < trace.train_mse.size(); ++i)
      w.row({std::to_string(i), csv::format_number(trace.train_mse[i])});
  });
  s.write_json("train_report.json", {{"schema_version", io::kSchemaVersion},
                                     {"groups", c.selection.label()},
                                     {"fit_on", a.fit_on},
                                     {"fit_rows", fit_x.rows()},
                                     {"hyperparams", io::to_json(params)},
                                     {"grid", grid_json},
                                     {"metrics", {{"fit_static", io::to_json(in_sample)},
                                                  {"validation_rolling", io::to_json(validation)}}},
                                     {"importance_gain", gbm::feature_importance_gain(model)}});
  s.say("validation MAE " + csv::format_number(validation.mae));
  s.finish("train");
}

struct EvaluateArgs {
  std::string model;
  double bin_width = 0.25;
};

void cmd_evaluate(Session& s, const EvaluateArgs& a) {
  const auto m = load_model(a.model, s.cfg().engineering);
  const auto& t = s.table();
  json splits = json::object();
  for (const auto& v : split_views(s.ranges())) {
    const auto run = forecast::rolling_forecast(m.model, t, m.engineering, m.selection, s.cfg().protocol,
                                                forecast::Window{v.begin, v.end});
    const auto report = forecast::score(run);
    splits[v.name] = io::to_json(report);
    std::vector<double> residuals(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) residuals[i] = run.y_true[i] - run.y_pred[i];
    const std::string n = v.name;
    s.write_csv("forecast_" + n + ".csv", [&](std::ostream& o) { io::write_forecast_csv(o, run); });
    s.write_csv("residuals_" + n + ".csv", [&](std::ostream& o) {
      csv::Writer w(o);
      w.row({"timestamp", "residual"});
      for (std::size_t i = 0; i < run.size(); ++i)
        w.row({format_instant(run.timestamps[i]), csv::format_number(residuals[i])});
    });
    s.write_csv("residual_hist_" + n + ".csv", [&](std::ostream& o) {
      csv::Writer w(o);
      w.row({"center", "count"});
      for (const auto& b : stats::histogram(residuals, a.bin_width))
        w.row({csv::format_number(b.center), std::to_string(b.count)});
    });
    s.write_csv("residual_qq_" + n + ".csv", [&](std::ostream& o) {
      csv::Writer w(o);
      w.row({"theoretical", "sample"});
      for (const auto& p : stats::qq_normal(residuals))
        w.row({csv::format_number(p.theoretical), csv::format_number(p.sample)});
    });
    s.say(n + " MAE " + csv::format_number(report.mae));
  }
  const auto& p = s.cfg().protocol;
  s.write_json("metrics.json", {{"schema_version", io::kSchemaVersion},
                                {"groups", m.selection.label()},
                                {"protocol", {{"access_interval_seconds", p.access_interval.count()},
                                              {"horizon_seconds", p.horizon.count()},
                                              {"anchor_offset_seconds", p.anchor_offset.count()}}},
                                {"splits", splits}});
  s.finish("evaluate");
}

struct AblateArgs {
  std::string groups = "IOTS;IOTS-MVA;IOTS+Holiday;IOTS-MVA+Holiday;IOTS+MVART;IOTS-MVA+MVART;"
                       "IOTS+MVART+Holiday;IOTS-MVA+MVART+Holiday";
  std::vector<long long> widths = {0, 10, 60, 180, 360, 720, 1440};
  std::vector<long long> intervals = {10, 60, 480, 1440};
  bool no_sweeps = false;
  bool grid = false;
};

void cmd_ablate(Session& s, const AblateArgs& a) {
  const auto& c = s.cfg();
  const auto& t = s.table();
  const auto& r = s.ranges();
  const gbm::GridRanges* grid = a.grid ? &c.grid : nullptr;

  std::vector<io::AblationRow> rows;
  std::stringstream groups(a.groups);
  std::string item;
  while (std::getline(groups, item, ';')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    const auto selection = FeatureSelection::parse(item);
    const auto e = forecast::evaluate_selection(t, r, c.engineering, selection, c.params, c.protocol, grid);
    rows.push_back({selection.label(), e.validation});
    s.say(selection.label() + " validation MAE " + csv::format_number(e.validation.mae));
  }
  if (rows.empty()) throw ConfigError("--groups lists no feature groups");
  s.write_csv("ablation.csv", [&](std::ostream& o) { io::write_ablation_csv(o, rows); });

  if (!a.no_sweeps) {
    const auto windows = forecast::window_sweep(t, r, c.engineering, minutes_list(a.widths), c.params,
                                                c.protocol, grid);
    s.write_csv("window_sweep.csv", [&](std::ostream& o) { io::write_sweep_csv(o, windows); });
    const auto e = forecast::evaluate_selection(t, r, c.engineering, c.selection, c.params, c.protocol, grid);
    const auto horizons = forecast::horizon_sweep(e.model, t, c.engineering, c.selection, minutes_list(a.intervals),
                                                  forecast::Window{r.val_begin, r.val_end});
    s.write_csv("horizon_sweep.csv", [&](std::ostream& o) { io::write_sweep_csv(o, horizons); });
  }
  s.finish("ablate");
}

struct ExplainArgs {
  std::string method;
  std::string model;
  std::string split;
  std::vector<std::string> features;
  // importance
  std::string metric = "mae";
  std::string strategy = "mean";
  // pdp
  std::size_t grid_size = 20;
  std::size_t max_rows = 0;
  // surrogate
  double lambda = 1.0;
  int depth = 3;
  // lime / shap
  std::string select = "accurate,deviated";
  std::optional<std::size_t> index;
  double threshold_acc = 0.01;
  double threshold_dev = 2.0;
  std::size_t samples = 5000;
  // pffra
  bool rolling = false;
  std::string taper = "none";
  long long interval_minutes = 1440;
};

/// Forecast-run indices to explain, keyed by case label.
std::vector<std::pair<std::string, std::size_t>> explain_cases(const forecast::ForecastRun& run,
                                                               const ExplainArgs& a) {
  if (a.index) {
    if (*a.index >= run.size())
      throw ConfigError("--index " + std::to_string(*a.index) + " is beyond the " + std::to_string(run.size()) +
                        " scored predictions");
    return {{"index" + std::to_string(*a.index), *a.index}};
  }
  bool accurate = false, deviated = false;
  std::stringstream ss(a.select);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "accurate") accurate = true;
    else if (item == "deviated") deviated = true;
    else throw ConfigError("--select accepts accurate and deviated, got '" + item + "'");
  }
  const auto pair = explain::select_case_pair(run, a.threshold_acc, a.threshold_dev);
  if (!pair)
    throw DataError("no accurate/deviated pair with equal true RT (thresholds " + csv::format_number(a.threshold_acc) +
                    " and " + csv::format_number(a.threshold_dev) + ")");
  std::vector<std::pair<std::string, std::size_t>> out;
  if (accurate) out.emplace_back("accurate", pair->accurate);
  if (deviated) out.emplace_back("deviated", pair->deviated);
  return out;
}

void cmd_explain(Session& s, const ExplainArgs& a) {
  const auto m = load_model(a.model, s.cfg().engineering);
  const auto& t = s.table();
  const auto& r = s.ranges();
  const auto design = build_design_matrix(t, m.engineering, m.selection);
  const auto train_x = forecast::rows_in(design, r.train_begin, r.train_end);
  const auto means = pffra::column_means(train_x);
  const auto background = train_x.column_means();
  const auto split_x = [&](const std::string& name) {
    const auto v = pick_split(r, name);
    return forecast::rows_in(design, v.begin, v.end);
  };
  const auto selected_features = [&]() {
    if (a.features.empty()) return m.model.feature_names();
    for (const auto& f : a.features)
      if (!design.find(f)) throw ConfigError("unknown feature '" + f + "' for this model");
    return a.features;
  };
  const std::string command = "explain_" + a.method;

  if (a.method == "importance") {
    const auto x = split_x(a.split.empty() ? "validation" : a.split);
    explain::ImportanceOptions opt;
    if (a.metric == "mae") opt.metric = explain::ImportanceMetric::kMae;
    else if (a.metric == "mse") opt.metric = explain::ImportanceMetric::kMse;
    else throw ConfigError("--metric must be mae or mse");
    if (a.strategy == "mean") opt.strategy = explain::PermutationStrategy::kMeanSubstitute;
    else if (a.strategy == "shuffle") opt.strategy = explain::PermutationStrategy::kShuffle;
    else throw ConfigError("--strategy must be mean or shuffle");
    opt.seed = s.cfg().seed;
    opt.means = means;
    opt.features = a.features;
    const auto imp = explain::permutation_importance(m.model, x, x.target, opt);
    s.write_json("importance.json", {{"schema_version", io::kSchemaVersion},
                                     {"split", a.split.empty() ? "validation" : a.split},
                                     {"metric", a.metric},
                                     {"strategy", a.strategy},
                                     {"permutation", imp},
                                     {"gain", gbm::feature_importance_gain(m.model)}});
  } else if (a.method == "pdp") {
    const auto x = split_x(a.split.empty() ? "train" : a.split);
    for (const auto& f : selected_features()) {
      explain::PdpOptions opt{a.grid_size, features::is_categorical(f), a.max_rows};
      const auto curve = explain::pdp(m.model, x, f, opt);
      s.write_json("pdp_" + f + ".json", io::to_json(curve));
      s.write_csv("pdp_" + f + ".csv", [&](std::ostream& o) {
        csv::Writer w(o);
        w.row({"value", "mean_response"});
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
          w.row({csv::format_number(curve.grid[i]), csv::format_number(curve.mean_response[i])});
      });
    }
  } else if (a.method == "surrogate") {
    const auto x = split_x(a.split.empty() ? "train" : a.split);
    s.write_json("surrogate_ridge.json", io::to_json(explain::fit_surrogate_ridge(m.model, x, a.lambda)));
    s.write_json("surrogate_tree.json", io::to_json(explain::fit_surrogate_tree(m.model, x, a.depth)));
  } else if (a.method == "lime" || a.method == "shap") {
    const auto v = pick_split(r, a.split.empty() ? "validation" : a.split);
    const auto run = forecast::rolling_forecast(m.model, t, m.engineering, m.selection, s.cfg().protocol,
                                                forecast::Window{v.begin, v.end});
    for (const auto& [label, i] : explain_cases(run, a)) {
      const auto instance = run.inputs.row(i);
      json meta{{"timestamp", format_instant(run.timestamps[i])}, {"y_true", run.y_true[i]},
                {"y_pred", run.y_pred[i]}, {"split", v.name}, {"case", label}};
      explain::Attribution attribution;
      if (a.method == "shap") {
        attribution = explain::shap_exact(m.model, instance, background);
        json doc = io::to_json(attribution);
        doc["method"] = "shap_exact";
        doc["instance"] = meta;
        s.write_json("shap_" + label + ".json", doc);
      } else {
        explain::LimeOptions opt;
        opt.n_samples = a.samples;
        opt.seed = s.cfg().seed;
        const auto e = explain::lime_explain(m.model, instance, train_x, opt);
        attribution = e.attribution;
        json doc = io::to_json(e);
        doc["instance"] = meta;
        s.write_json("lime_" + label + ".json", doc);
      }
      s.write_csv("force_" + a.method + "_" + label + ".csv",
                  [&](std::ostream& o) { io::write_force_csv(o, attribution, instance); });
    }
  } else if (a.method == "pffra") {
    pffra::Options opt;
    if (a.taper == "hann") opt.taper = pffra::Taper::kHann;
    else if (a.taper != "none") throw ConfigError("--taper must be none or hann");
    opt.sample_interval = static_cast<double>(t.interval.count());
    const auto features = a.features.empty() ? std::vector<std::string>{features::kMvart} : a.features;
    std::vector<std::string> splits;
    if (a.split.empty() || a.split == "all") splits = {"train", "validation", "test"};
    else splits = {a.split};
    for (const auto& f : features) {
      if (!design.find(f)) throw ConfigError("unknown feature '" + f + "' for this model");
      for (const auto& sp : splits) {
        const auto v = pick_split(r, sp);
        pffra::Report report;
        if (a.rolling) {
          const Seconds interval{a.interval_minutes * 60};
          report = pffra::analyze_rolling(m.model, t, m.engineering, m.selection, {interval, interval, Seconds{0}},
                                          forecast::Window{v.begin, v.end}, f, means, opt);
        } else {
          const auto x = forecast::rows_in(design, v.begin, v.end);
          report = pffra::analyze(m.model, x, x.target, f, means, opt);
        }
        json doc = io::to_json(report);
        doc["split"] = sp;
        doc["regime"] = a.rolling ? "rolling" : "static";
        const std::string stem = "pffra_" + f + "_" + sp;
        s.write_json(stem + ".json", doc);
        const std::pair<const char*, const pffra::Spectrum*> spectra[] = {
            {"feature_only", &report.spectrum_feature_only},
            {"feature_permuted", &report.spectrum_feature_permuted},
            {"original", &report.spectrum_original},
            {"truth", &report.spectrum_truth}};
        for (const auto& [kind, spectrum] : spectra)
          s.write_csv(stem + "_" + kind + ".csv",
                      [&](std::ostream& o) { io::write_spectrum_csv(o, *spectrum); });
      }
    }
  }
  s.finish(command);
}

struct DiagnoseArgs {
  std::string which;
  std::string split = "all";
  std::size_t max_lag = 30;
  double bin_width = 1.0;
};

void cmd_diagnose(Session& s, const DiagnoseArgs& a) {
  const auto& t = s.table();
  const auto& r = s.ranges();
  std::span<const double> series;
  if (a.split == "all") {
    series = std::span<const double>(t.target).subspan(r.train_begin, r.test_end - r.train_begin);
  } else {
    const auto v = pick_split(r, a.split);
    series = std::span<const double>(t.target).subspan(v.begin, v.end - v.begin);
  }
  const auto lag_table = [&](const std::string& name, const std::vector<double>& values) {
    s.write_csv(name, [&](std::ostream& o) {
      csv::Writer w(o);
      w.row({"lag", "value"});
      for (std::size_t k = 0; k < values.size(); ++k) w.row({std::to_string(k), csv::format_number(values[k])});
    });
  };
  if (a.which == "acf") {
    lag_table("acf.csv", stats::acf(series, a.max_lag));
  } else if (a.which == "pacf") {
    lag_table("pacf.csv", stats::pacf(series, a.max_lag));
  } else if (a.which == "adf") {
    std::vector<double> diff(series.size() > 0 ? series.size() - 1 : 0);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = series[i + 1] - series[i];
    auto level = io::to_json(stats::adf_test(series));
    level["series"] = t.target_name;
    auto first = io::to_json(stats::adf_test(diff));
    first["series"] = t.target_name + " first difference";
    s.write_json("adf_rt.json", level);
    s.write_json("adf_rt_diff1.json", first);
  } else if (a.which == "hist") {
    for (const auto& v : split_views(r)) {
      const std::span<const double> part(t.target.data() + v.begin, v.end - v.begin);
      s.write_csv(std::string("hist_") + v.name + ".csv", [&](std::ostream& o) {
        csv::Writer w(o);
        w.row({"center", "count"});
        for (const auto& b : stats::histogram(part, a.bin_width))
          w.row({csv::format_number(b.center), std::to_string(b.count)});
      });
    }
  }
  s.finish("diagnose_" + a.which);
}

int report(const Error& e) {
  std::cerr << "roomcast: error: " << e.what() << '\n';
  return exit_code_for(e.kind());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roomcast: room-temperature forecasting and explanation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "key=value configuration file");
  app.add_option("--seed", g.seed, "global seed (overrides seed and synth.seed)");
  app.add_option("--out", g.out, "output directory (artifacts are write-once)");
  app.add_flag("--quiet", g.quiet, "print errors only");
  app.add_option("--set", g.overrides, "configuration override key=value (repeatable)");

  std::vector<std::pair<std::string, std::string>> overrides;

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic dataset");
  std::optional<long long> days;
  synth->add_option("--days", days, "number of days to generate");

  auto* ingest = app.add_subcommand("ingest", "validate a CSV and align state-change event streams");
  IngestArgs ingest_args;
  ingest->add_option("--input", ingest_args.input, "CSV time series")->required();
  ingest->add_option("--schema", ingest_args.schema, "schema mapping file (name = role)");
  ingest->add_option("--events", ingest_args.events, "COLUMN=PATH event stream to align (repeatable)");

  auto* split = app.add_subcommand("split", "write the train/validation/test partitions");

  auto* train = app.add_subcommand("train", "train a boosted-tree model");
  TrainArgs train_args;
  train->add_flag("--grid", train_args.grid, "grid search over grid.* ranges on the validation protocol");
  train->add_option("--fit-on", train_args.fit_on, "train or train+validation");

  auto* evaluate = app.add_subcommand("evaluate", "rolling-forecast metrics per split");
  EvaluateArgs eval_args;
  evaluate->add_option("--model", eval_args.model, "model.json from train")->required();
  evaluate->add_option("--bin-width", eval_args.bin_width, "residual histogram bin width (degC)");

  auto* ablate = app.add_subcommand("ablate", "feature-group ablation and window/horizon sweeps");
  AblateArgs ablate_args;
  ablate->add_option("--groups", ablate_args.groups, "';'-separated feature-group sets, e.g. IOTS;IOTS-MVA+MVART");
  ablate->add_option("--widths", ablate_args.widths, "MVA window widths in minutes")->delimiter(',');
  ablate->add_option("--intervals", ablate_args.intervals, "predicting intervals in minutes")->delimiter(',');
  ablate->add_flag("--no-sweeps", ablate_args.no_sweeps, "only run the group ablation");
  ablate->add_flag("--grid", ablate_args.grid, "grid search every configuration");

  auto* explain_cmd = app.add_subcommand("explain", "global and local explanations of a trained model");
  ExplainArgs ex;
  explain_cmd->add_option("method", ex.method, "importance|pdp|surrogate|lime|shap|pffra")
      ->required()
      ->check(CLI::IsMember({"importance", "pdp", "surrogate", "lime", "shap", "pffra"}));
  explain_cmd->add_option("--model", ex.model, "model.json from train")->required();
  explain_cmd->add_option("--split", ex.split, "train|validation|test (pffra also accepts all)");
  explain_cmd->add_option("--feature", ex.features, "feature name (repeatable)");
  explain_cmd->add_option("--metric", ex.metric, "importance metric: mae|mse");
  explain_cmd->add_option("--strategy", ex.strategy, "importance permutation: mean|shuffle");
  explain_cmd->add_option("--grid-size", ex.grid_size, "pdp grid points");
  explain_cmd->add_option("--max-rows", ex.max_rows, "pdp row budget (0 = all)");
  explain_cmd->add_option("--lambda", ex.lambda, "ridge surrogate penalty");
  explain_cmd->add_option("--depth", ex.depth, "tree surrogate depth");
  explain_cmd->add_option("--select", ex.select, "cases to explain: accurate,deviated");
  explain_cmd->add_option("--index", ex.index, "explain one scored prediction by index instead");
  explain_cmd->add_option("--threshold-acc", ex.threshold_acc, "accurate case: |error| below (degC)");
  explain_cmd->add_option("--threshold-dev", ex.threshold_dev, "deviated case: |error| above (degC)");
  explain_cmd->add_option("--samples", ex.samples, "LIME perturbation samples");
  explain_cmd->add_flag("--rolling", ex.rolling, "pffra under the rolling protocol");
  explain_cmd->add_option("--interval", ex.interval_minutes, "pffra rolling access interval = horizon (minutes)");
  explain_cmd->add_option("--taper", ex.taper, "pffra taper: none|hann");

  auto* diagnose = app.add_subcommand("diagnose", "target-series diagnostics");
  DiagnoseArgs diag;
  diagnose->add_option("which", diag.which, "acf|pacf|adf|hist")
      ->required()
      ->check(CLI::IsMember({"acf", "pacf", "adf", "hist"}));
  diagnose->add_option("--split", diag.split, "all|train|validation|test (acf, pacf, adf)");
  diagnose->add_option("--max-lag", diag.max_lag, "largest lag for acf/pacf");
  diagnose->add_option("--bin-width", diag.bin_width, "histogram bin width (degC)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code_for(ErrorKind::kConfig);
  }

  try {
    if (days) overrides.emplace_back("synth.days", std::to_string(*days));
    Session s(g, overrides);
    if (*synth) cmd_synth(s);
    else if (*ingest) cmd_ingest(s, ingest_args);
    else if (*split) cmd_split(s);
    else if (*train) cmd_train(s, train_args);
    else if (*evaluate) cmd_evaluate(s, eval_args);
    else if (*ablate) cmd_ablate(s, ablate_args);
    else if (*explain_cmd) cmd_explain(s, ex);
    else if (*diagnose) cmd_diagnose(s, diag);
    return 0;
  } catch (const Error& e) {
    return report(e);
  } catch (const std::bad_alloc&) {
    std::cerr << "roomcast: error: out of memory\n";
    return exit_code_for(ErrorKind::kNumeric);
  } catch (const std::exception& e) {
    std::cerr << "roomcast: error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::kData);
  }
}
