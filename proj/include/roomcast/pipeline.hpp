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

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "roomcast/common.hpp"
#include "roomcast/dataio.hpp"
#include "roomcast/features.hpp"
#include "roomcast/forecast.hpp"
#include "roomcast/gbm.hpp"

namespace roomcast::pipeline {

/// Flat `section.key = value` configuration; later assignments win.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
      c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    auto c = parse(in);
    // File paths inside a config file are relative to that file.
    for (const char* key : {"data.path", "data.schema", "features.holidays"}) {
      if (!c.has(key)) continue;
      const std::filesystem::path value = c.values_.at(key);
      if (value.is_relative()) c.values_[key] = (path.parent_path() / value).lexically_normal().string();
    }
    return c;
  }

  /// Applies a `key=value` override.
  void assign(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    double v = 0.0;
    if (!csv::parse_number(values_.at(key), v)) throw ConfigError("config: '" + key + "' is not a number");
    return v;
  }

  long long get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto& s = values_.at(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("config: '" + key + "' is not an integer");
    return v;
  }

  template <class T>
  std::vector<T> get_list(const std::string& key, const std::vector<T>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<T> out;
    std::stringstream ss(values_.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      double v = 0.0;
      if (!csv::parse_number(item, v)) throw ConfigError("config: '" + key + "' has a non-numeric entry");
      if constexpr (std::is_integral_v<T>) {
        if (v != std::floor(v)) throw ConfigError("config: '" + key + "' needs integers");
      }
      out.push_back(static_cast<T>(v));
    }
    if (out.empty()) throw ConfigError("config: '" + key + "' is empty");
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& v) {
    const auto a = v.find_first_not_of(" \t\r");
    const auto b = v.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

enum class DataSource { kSynthetic, kCsv };

/// Everything a pipeline command needs, resolved from a KeyValueConfig.
struct PipelineConfig {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path data_path;
  std::filesystem::path schema_path;
  double quantization_check = 0.0;
  SynthConfig synth;
  SplitSpec split;
  EngineeringConfig engineering;
  FeatureSelection selection = FeatureSelection::all();
  gbm::Hyperparams params;
  gbm::GridRanges grid;
  forecast::Protocol protocol;
  std::uint64_t seed = 42;

  static PipelineConfig resolve(const KeyValueConfig& kv) {
    PipelineConfig c;
    const auto source = kv.get("data.source", kv.has("data.path") ? "csv" : "synth");
    if (source == "synth") {
      c.source = DataSource::kSynthetic;
      if (kv.has("data.path")) throw ConfigError("config: data.path given with data.source = synth");
    } else if (source == "csv") {
      c.source = DataSource::kCsv;
      if (!kv.has("data.path")) throw ConfigError("config: data.source = csv requires data.path");
      c.data_path = kv.get("data.path", "");
    } else {
      throw ConfigError("config: data.source must be synth or csv");
    }
    c.schema_path = kv.get("data.schema", "");
    c.quantization_check = kv.get_double("data.quantization", 0.0);

    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 42));
    c.synth.seed = static_cast<std::uint64_t>(kv.get_int("synth.seed", static_cast<long long>(c.seed)));
    c.synth.n_days = static_cast<int>(kv.get_int("synth.days", c.synth.n_days));
    c.synth.start_date = parse_date(kv.get("synth.start", format_date(c.synth.start_date)));
    c.synth.rt_base = kv.get_double("synth.rt_base", c.synth.rt_base);
    c.synth.seasonal_amp = kv.get_double("synth.seasonal_amp", c.synth.seasonal_amp);
    c.synth.daily_amp = kv.get_double("synth.daily_amp", c.synth.daily_amp);
    c.synth.holiday_shift = kv.get_double("synth.holiday_shift", c.synth.holiday_shift);
    c.synth.noise_sd = kv.get_double("synth.noise_sd", c.synth.noise_sd);
    c.synth.noise_ar = kv.get_double("synth.noise_ar", c.synth.noise_ar);
    c.synth.quantization = kv.get_double("synth.quantization", c.synth.quantization);
    c.synth.validate();

    const auto date = [&](const std::string& key, const Date& fallback) {
      try {
        return parse_date(kv.get(key, format_date(fallback)));
      } catch (const DataError& e) {
        throw ConfigError("config: " + key + ": " + e.what());
      }
    };
    c.split.data_start = date("split.data_start", c.split.data_start);
    c.split.train_end = date("split.train_end", c.split.train_end);
    c.split.val_end = date("split.val_end", c.split.val_end);
    c.split.data_cutoff = date("split.data_cutoff", c.split.data_cutoff);
    c.split.validate();

    auto& e = c.engineering;
    const auto window = kv.get_int("features.mva_window", 6);
    const auto horizon = kv.get_int("features.horizon_steps", 48);
    if (window < 1 || horizon < 1) throw ConfigError("config: features.mva_window and horizon_steps must be >= 1");
    e.mva_window = static_cast<std::size_t>(window);
    e.horizon_steps = static_cast<std::size_t>(horizon);
    e.clock.utc_offset_minutes = static_cast<int>(kv.get_int("features.utc_offset_minutes", 120));
    e.work_start_hour = static_cast<int>(kv.get_int("features.work_start_hour", 8));
    e.work_end_hour = static_cast<int>(kv.get_int("features.work_end_hour", 18));
    if (kv.has("features.holidays")) {
      std::ifstream in(kv.get("features.holidays", ""));
      if (!in) throw ConfigError("config: cannot read holiday calendar " + kv.get("features.holidays", ""));
      e.holidays = HolidayCalendar::parse(in);
    }
    e.validate();
    c.selection = FeatureSelection::parse(kv.get("features.groups", "IOTS-MVA,MVART,Holiday"));

    c.params.max_depth = static_cast<int>(kv.get_int("gbm.max_depth", c.params.max_depth));
    c.params.n_trees = static_cast<int>(kv.get_int("gbm.n_trees", c.params.n_trees));
    c.params.gamma = kv.get_double("gbm.gamma", c.params.gamma);
    c.params.lambda = kv.get_double("gbm.lambda", c.params.lambda);
    c.params.learning_rate = kv.get_double("gbm.learning_rate", c.params.learning_rate);
    c.params.validate();

    c.grid.max_depth = kv.get_list<int>("grid.max_depth", c.grid.max_depth);
    c.grid.n_trees = kv.get_list<int>("grid.n_trees", c.grid.n_trees);
    c.grid.gamma = kv.get_list<double>("grid.gamma", c.grid.gamma);
    c.grid.lambda = kv.get_list<double>("grid.lambda", c.grid.lambda);
    c.grid.learning_rate = kv.get_list<double>("grid.learning_rate", c.grid.learning_rate);

    const auto minutes = [&](const std::string& key, long long fallback) {
      return Seconds{60 * kv.get_int(key, fallback)};
    };
    c.protocol.access_interval = minutes("forecast.access_interval_minutes", 24 * 60);
    c.protocol.horizon = minutes("forecast.horizon_minutes", static_cast<long long>(e.horizon_steps) * 10);
    c.protocol.anchor_offset = minutes("forecast.anchor_offset_minutes", 0);
    if (c.protocol.horizon > c.protocol.access_interval)
      throw ConfigError("config: forecast horizon exceeds the access interval");
    return c;
  }
};

/// Loads the configured data source.
inline TimeTable load_table(const PipelineConfig& c) {
  if (c.source == DataSource::kSynthetic) return synthesize(c.synth, c.engineering.holidays, c.engineering.clock);
  std::ifstream in(c.data_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read data file " + c.data_path.string());
  Schema schema;
  if (!c.schema_path.empty()) {
    std::ifstream s(c.schema_path);
    if (!s) throw ConfigError("cannot read schema file " + c.schema_path.string());
    schema = Schema::parse(s);
  }
  schema.quantization = c.quantization_check;
  return ingest_csv(in, schema);
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Write-once artifact directory with a content-hashed manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
      throw ConfigError("cannot create output directory " + root_.string());
  }

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& name, const std::string& content) {
    const auto path = root_ / name;
    if (std::filesystem::exists(path))
      throw ConfigError("refusing to overwrite existing artifact " + path.string());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw ConfigError("failed writing " + path.string());
    artifacts_.push_back({name, content.size(), fnv1a64(content)});
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  /// Records every artifact written so far plus the invocation itself.
  void write_manifest(const std::string& name, const std::string& command, const KeyValueConfig& config,
                      std::uint64_t seed) {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : artifacts_) arts.push_back({{"path", a.name}, {"bytes", a.bytes}, {"fnv1a64", a.hash}});
    nlohmann::json m{{"schema_version", 1}, {"command", command}, {"seed", seed},
                     {"config", config.values()}, {"artifacts", arts}};
    write(name, m.dump(2) + "\n");
  }

 private:
  struct Artifact {
    std::string name;
    std::size_t bytes;
    std::string hash;
  };
  std::filesystem::path root_;
  std::vector<Artifact> artifacts_;
};

}  // namespace roomcast::pipeline
