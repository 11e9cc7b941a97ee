// Copyright 2026 The Vo-Ve Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vove/error.hpp"
#include "vove/mel.hpp"
#include "vove/model.hpp"
#include "vove/pairs.hpp"

namespace vove {

// Similarity / classification evaluation parameters.
struct MetricParams {
  std::vector<double> taus = {0.3, 0.5, 0.7};
  int n_per_speaker = 100;
  int repeats = 10;
  std::vector<int> ks = {1, 2, 3};
};

// Pair-set construction parameters.
struct PairParams {
  PairThresholds thresholds;
  int n_pairs = 20;
  bool gender_control = true;
  bool exclude_gender_attributes = false;
};

// One declarative run configuration shared by every subcommand. Strictly
// parsed: any key outside the schema is an error, reported before any work
// starts. Paths may be provided under "paths" as defaults for the
// corresponding command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  FrontendConfig frontend;
  ModelConfig model;  // n_speakers stays 0 until a manifest fixes it
  MetricParams metrics;
  PairParams pairs;
  std::map<std::string, std::string> paths;

  void validate() const {
    frontend.validate();
    ModelConfig mc = model;
    mc.n_speakers = 1;  // unknown until training; validate the rest
    mc.validate();
    if (metrics.taus.empty())
      throw ValidationError("config: metrics.taus must not be empty");
    for (double t : metrics.taus)
      if (!(t > 0.0 && t < 1.0))
        throw ValidationError("config: tau values must lie in (0,1), got " +
                              std::to_string(t));
    if (metrics.n_per_speaker < 2)
      throw ValidationError("config: metrics.n_per_speaker must be >= 2");
    if (metrics.repeats < 1)
      throw ValidationError("config: metrics.repeats must be >= 1");
    if (metrics.ks.empty())
      throw ValidationError("config: metrics.ks must not be empty");
    for (int k : metrics.ks)
      if (k < 1)
        throw ValidationError("config: k values must be >= 1, got " +
                              std::to_string(k));
    pairs.thresholds.validate();
    if (pairs.n_pairs < 1)
      throw ValidationError("config: pairs.n_pairs must be >= 1");
  }
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j,
                               std::initializer_list<const char*> allowed,
                               const std::string& scope) {
  if (!j.is_object())
    throw ValidationError("config: '" + scope + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError("config: unknown key '" +
                            (scope.empty() ? item.key()
                                           : scope + "." + item.key()) +
                            "'");
  }
}

inline const nlohmann::json* maybe(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline int cfg_int(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw ValidationError("config: '" + where + "' must be an integer");
  return j.get<int>();
}

inline std::uint64_t cfg_u64(const nlohmann::json& j,
                             const std::string& where) {
  if (!j.is_number_integer() ||
      (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    throw ValidationError("config: '" + where +
                          "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

inline double cfg_double(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number())
    throw ValidationError("config: '" + where + "' must be a number");
  return j.get<double>();
}

inline bool cfg_bool(const nlohmann::json& j, const std::string& where) {
  if (!j.is_boolean())
    throw ValidationError("config: '" + where + "' must be a boolean");
  return j.get<bool>();
}

inline std::string cfg_string(const nlohmann::json& j,
                              const std::string& where) {
  if (!j.is_string())
    throw ValidationError("config: '" + where + "' must be a string");
  return j.get<std::string>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::maybe;
  detail::require_known_keys(
      j, {"seed", "frontend", "model", "metrics", "pairs", "paths"}, "");
  RunConfig cfg;
  if (const auto* v = maybe(j, "seed")) cfg.seed = detail::cfg_u64(*v, "seed");

  if (const auto* f = maybe(j, "frontend")) {
    detail::require_known_keys(*f,
                               {"sample_rate", "window_ms", "hop_ms", "n_mels",
                                "fft_size", "log_floor", "mean_normalize"},
                               "frontend");
    if (const auto* v = maybe(*f, "sample_rate"))
      cfg.frontend.sample_rate = detail::cfg_int(*v, "frontend.sample_rate");
    if (const auto* v = maybe(*f, "window_ms"))
      cfg.frontend.window_ms = detail::cfg_double(*v, "frontend.window_ms");
    if (const auto* v = maybe(*f, "hop_ms"))
      cfg.frontend.hop_ms = detail::cfg_double(*v, "frontend.hop_ms");
    if (const auto* v = maybe(*f, "n_mels"))
      cfg.frontend.n_mels = detail::cfg_int(*v, "frontend.n_mels");
    if (const auto* v = maybe(*f, "fft_size"))
      cfg.frontend.fft_size = detail::cfg_int(*v, "frontend.fft_size");
    if (const auto* v = maybe(*f, "log_floor"))
      cfg.frontend.log_floor = detail::cfg_double(*v, "frontend.log_floor");
    if (const auto* v = maybe(*f, "mean_normalize"))
      cfg.frontend.mean_normalize =
          detail::cfg_bool(*v, "frontend.mean_normalize");
  }

  if (const auto* m = maybe(j, "model")) {
    detail::require_known_keys(
        *m,
        {"backbone_channels", "svhead_hidden", "learning_rate",
         "weight_decay", "epochs", "batch", "crop_seconds", "val_fraction"},
        "model");
    if (const auto* v = maybe(*m, "backbone_channels"))
      cfg.model.backbone_channels =
          detail::cfg_int(*v, "model.backbone_channels");
    if (const auto* v = maybe(*m, "svhead_hidden"))
      cfg.model.svhead_hidden = detail::cfg_int(*v, "model.svhead_hidden");
    if (const auto* v = maybe(*m, "learning_rate"))
      cfg.model.learning_rate =
          detail::cfg_double(*v, "model.learning_rate");
    if (const auto* v = maybe(*m, "weight_decay"))
      cfg.model.weight_decay = detail::cfg_double(*v, "model.weight_decay");
    if (const auto* v = maybe(*m, "epochs"))
      cfg.model.epochs = detail::cfg_int(*v, "model.epochs");
    if (const auto* v = maybe(*m, "batch"))
      cfg.model.batch = detail::cfg_int(*v, "model.batch");
    if (const auto* v = maybe(*m, "crop_seconds"))
      cfg.model.crop_seconds = detail::cfg_double(*v, "model.crop_seconds");
    if (const auto* v = maybe(*m, "val_fraction"))
      cfg.model.val_fraction = detail::cfg_double(*v, "model.val_fraction");
  }

  if (const auto* m = maybe(j, "metrics")) {
    detail::require_known_keys(
        *m, {"taus", "n_per_speaker", "repeats", "ks"}, "metrics");
    if (const auto* v = maybe(*m, "taus")) {
      if (!v->is_array())
        throw ValidationError("config: 'metrics.taus' must be an array");
      cfg.metrics.taus.clear();
      for (const auto& t : *v)
        cfg.metrics.taus.push_back(detail::cfg_double(t, "metrics.taus[]"));
    }
    if (const auto* v = maybe(*m, "n_per_speaker"))
      cfg.metrics.n_per_speaker =
          detail::cfg_int(*v, "metrics.n_per_speaker");
    if (const auto* v = maybe(*m, "repeats"))
      cfg.metrics.repeats = detail::cfg_int(*v, "metrics.repeats");
    if (const auto* v = maybe(*m, "ks")) {
      if (!v->is_array())
        throw ValidationError("config: 'metrics.ks' must be an array");
      cfg.metrics.ks.clear();
      for (const auto& k : *v)
        cfg.metrics.ks.push_back(detail::cfg_int(k, "metrics.ks[]"));
    }
  }

  if (const auto* p = maybe(j, "pairs")) {
    detail::require_known_keys(*p,
                               {"dissimilar_threshold", "similar_threshold",
                                "n_pairs", "gender_control",
                                "exclude_gender_attributes"},
                               "pairs");
    if (const auto* v = maybe(*p, "dissimilar_threshold"))
      cfg.pairs.thresholds.dissimilar =
          detail::cfg_double(*v, "pairs.dissimilar_threshold");
    if (const auto* v = maybe(*p, "similar_threshold"))
      cfg.pairs.thresholds.similar =
          detail::cfg_double(*v, "pairs.similar_threshold");
    if (const auto* v = maybe(*p, "n_pairs"))
      cfg.pairs.n_pairs = detail::cfg_int(*v, "pairs.n_pairs");
    if (const auto* v = maybe(*p, "gender_control"))
      cfg.pairs.gender_control =
          detail::cfg_bool(*v, "pairs.gender_control");
    if (const auto* v = maybe(*p, "exclude_gender_attributes"))
      cfg.pairs.exclude_gender_attributes =
          detail::cfg_bool(*v, "pairs.exclude_gender_attributes");
  }

  if (const auto* p = maybe(j, "paths")) {
    detail::require_known_keys(
        *p,
        {"annotations", "labels", "manifest", "audio_root", "store",
         "pred_store", "gt_store", "synth_store", "checkpoint", "out",
         "out_dir", "log", "errors", "pairs", "key", "responses", "wer",
         "fake_a", "fake_b"},
        "paths");
    for (const auto& item : p->items())
      cfg.paths[item.key()] =
          detail::cfg_string(item.value(), "paths." + item.key());
  }

  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: '" + path + "' is not valid JSON: " +
                          e.what());
  }
  return parse_run_config(j);
}

}  // namespace vove
