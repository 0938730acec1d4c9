// Copyright 2026 The decipher Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Config files, run records and evaluation reports.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "decipher/error.hpp"
#include "decipher/eval.hpp"
#include "decipher/trainer.hpp"
#include "json.hpp"

namespace decipher {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// key=value config

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(value, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError("'" + key + "': expected a number, got '" + value + "'");
  } else {
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw ConfigError("'" + key + "': expected an integer, got '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace detail

inline std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::ramp: return "ramp";
    case ScheduleKind::explicit_list: return "list";
  }
  return "ramp";
}

/// Sets one TrainConfig field from its config-file key.
inline void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  auto& m = cfg.model;
  if (key == "iterations") cfg.iterations = parse_number<int>(key, value);
  else if (key == "cognates") cfg.cognates = parse_number<std::int64_t>(key, value);
  else if (key == "noiseless") cfg.noiseless = parse_bool(key, value);
  else if (key == "schedule") {
    cfg.schedule_from_config = true;
    if (value == "constant") cfg.schedule.kind = ScheduleKind::constant;
    else if (value == "ramp") cfg.schedule.kind = ScheduleKind::ramp;
    else if (value == "list") cfg.schedule.kind = ScheduleKind::explicit_list;
    else throw ConfigError("'schedule': expected constant, ramp or list, got '" + value + "'");
  } else if (key == "ramp_start") cfg.schedule.start_fraction = parse_number<double>(key, value);
  else if (key == "demands") {
    cfg.schedule.values.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.schedule.values.push_back(parse_number<std::int64_t>(key, detail::trim(item)));
    cfg.schedule.kind = ScheduleKind::explicit_list;
    cfg.schedule_from_config = true;
  } else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
  else if (key == "known_capacity") cfg.known_capacity = parse_number<std::int64_t>(key, value);
  else if (key == "top_k") cfg.top_k = parse_number<std::size_t>(key, value);
  else if (key == "subset_fraction") cfg.subset_fraction = parse_number<double>(key, value);
  else if (key == "min_subset_words") cfg.min_subset_words = parse_number<std::size_t>(key, value);
  else if (key == "restarts") cfg.restarts = parse_number<int>(key, value);
  else if (key == "restart_screen") cfg.restart_screen = parse_number<int>(key, value);
  else if (key == "epochs") cfg.epochs = parse_number<int>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "learning_rate") cfg.adam.learning_rate = parse_number<double>(key, value);
  else if (key == "lr_decay") cfg.lr_decay = parse_bool(key, value);
  else if (key == "use_flow") cfg.use_flow = parse_bool(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") cfg.threads = parse_number<int>(key, value);
  else if (key == "embedding_dim") m.embedding_dim = parse_number<int>(key, value);
  else if (key == "hidden_dim") m.hidden_dim = parse_number<int>(key, value);
  else if (key == "universal_size") m.universal_size = parse_number<int>(key, value);
  else if (key == "lambda") m.lambda = parse_number<double>(key, value);
  else if (key == "norm_ratio") m.norm_ratio = parse_number<double>(key, value);
  else if (key == "regularizer") m.regularizer = parse_regularizer(value);
  else if (key == "samples") m.samples = parse_number<int>(key, value);
  else if (key == "max_decode_length") m.max_decode_length = parse_number<int>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Applies `key = value` lines; '#' starts a comment.
inline void apply_config_text(TrainConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  for (auto raw : detail::split_lines(text)) {
    ++line_no;
    std::string line(raw.substr(0, raw.find('#')));
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  apply_config_text(cfg, text);
}

inline Json config_json(const TrainConfig& c) {
  Json j;
  j["iterations"] = c.iterations;
  j["cognates"] = c.cognates;
  j["noiseless"] = c.noiseless;
  j["schedule"] = std::string(to_string(c.schedule.kind));
  j["ramp_start"] = c.schedule.start_fraction;
  if (c.schedule.kind == ScheduleKind::explicit_list) j["demands"] = c.schedule.values;
  j["gamma"] = c.gamma;
  j["known_capacity"] = c.known_capacity;
  j["top_k"] = c.top_k;
  j["subset_fraction"] = c.subset_fraction;
  j["min_subset_words"] = c.min_subset_words;
  j["restarts"] = c.restarts;
  j["restart_screen"] = c.restart_screen;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.adam.learning_rate;
  j["lr_decay"] = c.lr_decay;
  j["use_flow"] = c.use_flow;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["embedding_dim"] = c.model.embedding_dim;
  j["hidden_dim"] = c.model.hidden_dim;
  j["universal_size"] = c.model.universal_size;
  j["lambda"] = c.model.lambda;
  j["norm_ratio"] = c.model.norm_ratio;
  j["regularizer"] = std::string(to_string(c.model.regularizer));
  j["samples"] = c.model.samples;
  j["max_decode_length"] = c.model.max_decode_length;
  return j;
}

// ---------------------------------------------------------------------------
// Records and reports

inline Json run_record_json(const RunRecord& r) {
  Json j;
  j["seed"] = r.seed;
  j["cognates"] = r.cognates;
  j["subset_lost"] = r.subset_lost;
  j["subset_known"] = r.subset_known;
  j["objective"] = r.objective();
  j["iterations"] = Json::array();
  for (const auto& it : r.iterations) {
    Json e;
    e["iteration"] = it.iteration;
    e["loss_curve"] = it.loss_curve;
    e["demand_requested"] = it.demand_requested;
    e["demand_used"] = it.demand_used;
    e["flow_cost"] = it.flow_cost;
    e["objective"] = it.objective;
    e["accuracy"] = it.accuracy ? Json(*it.accuracy) : Json(nullptr);
    e["seconds"] = it.seconds;
    j["iterations"].push_back(std::move(e));
  }
  j["warnings"] = r.warnings;
  return j;
}

inline Json eval_json(const EvalReport& r) {
  Json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["precision_defined"] = r.precision_defined;
  j["gold_words"] = r.gold_words;
  j["gold_pairs"] = r.gold_pairs;
  j["emitted"] = r.emitted;
  j["correct_words"] = r.correct_words;
  j["correct_pairs"] = r.correct_pairs;
  j["pairs"] = Json::array();
  for (const auto& p : r.pairs) j["pairs"].push_back({p.lost, p.known, p.weight, p.correct});
  return j;
}

inline EvalReport eval_from_json(const Json& j) {
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.precision_defined = j.at("precision_defined").get<bool>();
    r.gold_words = j.at("gold_words").get<std::size_t>();
    r.gold_pairs = j.at("gold_pairs").get<std::size_t>();
    r.emitted = j.at("emitted").get<std::size_t>();
    r.correct_words = j.at("correct_words").get<std::size_t>();
    r.correct_pairs = j.at("correct_pairs").get<std::size_t>();
    for (const auto& p : j.at("pairs"))
      r.pairs.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>(), p.at(2).get<double>(),
                         p.at(3).get<bool>()});
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << std::setprecision(17) << j.dump(2) << '\n';
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

inline Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(detail::read_file(path));
  } catch (const Json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

inline std::string summary_text(const RunRecord* record, const EvalReport* eval) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  if (record) {
    out << "seed " << record->seed << ", cognates " << record->cognates << ", subset " << record->subset_lost << " x "
        << record->subset_known << '\n';
    for (const auto& it : record->iterations) {
      out << "iteration " << it.iteration << ": demand " << it.demand_used << '/' << it.demand_requested
          << ", objective " << it.objective;
      if (!it.loss_curve.empty()) out << ", final loss " << it.loss_curve.back();
      if (it.accuracy) out << ", accuracy " << *it.accuracy;
      out << ", " << std::setprecision(1) << it.seconds << "s" << std::setprecision(4) << '\n';
    }
    for (const auto& w : record->warnings) out << "warning: " << w << '\n';
  }
  if (eval) {
    out << "accuracy " << eval->accuracy << " (" << eval->correct_words << '/' << eval->gold_words << " gold words)\n";
    out << "precision ";
    if (eval->precision_defined)
      out << eval->precision << " (" << eval->correct_pairs << '/' << eval->emitted << " emitted pairs)\n";
    else
      out << "undefined (no pairs emitted)\n";
  }
  return out.str();
}

/// Writes `<stem>.json` with everything needed to reproduce the run and a
/// short `<stem>.txt` summary beside it.
inline void write_report(const std::filesystem::path& json_path, const RunRecord* record, const EvalReport* eval,
                         const TrainConfig* config) {
  Json j;
  if (config) j["config"] = config_json(*config);
  if (record) j["run"] = run_record_json(*record);
  if (eval) j["eval"] = eval_json(*eval);
  write_json(json_path, j);
  auto txt = json_path;
  txt.replace_extension(".txt");
  std::ofstream out(txt, std::ios::binary);
  if (!out) throw InputError("cannot write '" + txt.string() + "'");
  out << summary_text(record, eval);
}

}  // namespace decipher
