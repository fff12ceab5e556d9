// Copyright 2026 The Evalkit Authors
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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "backends/oracle.hpp"
#include "util/config.hpp"

namespace evalkit::pipeline {

inline constexpr const char* kToolVersion = "evalkit 0.1.0";

// Effective run configuration. File values come from a plain-text key-value
// config; EVALKIT_* environment variables override file values, explicit
// sets override both. Numeric defaults follow the published protocol: 500
// images per prompt, T=5, delta=0.8, gamma=0.2, entropy thresholds
// 0.8/1.0/1.0.
class RunConfig {
 public:
  static RunConfig load(const std::optional<std::string>& config_path,
                        const std::vector<std::pair<std::string, std::string>>& overrides = {});

  const KeyValueConfig& raw() const { return cfg_; }

  std::string model() const { return cfg_.get_string("run.model", "model-under-test"); }
  backends::CacheMode mode() const;
  std::string cache_dir() const { return cfg_.get_string("run.cache_dir", "cache"); }
  std::string out_dir() const { return cfg_.get_string("run.out_dir", "out"); }
  std::string data_dir() const;
  std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg_.get_int("run.seed", 1)); }
  std::size_t images_per_prompt() const {
    return static_cast<std::size_t>(cfg_.get_int("run.images_per_prompt", 500));
  }
  std::optional<std::size_t> limit() const;

  std::size_t open_samples() const {
    return static_cast<std::size_t>(cfg_.get_int("coverage.T", 5));
  }
  double delta() const { return cfg_.get_double("coverage.delta", 0.8); }
  double gamma() const { return cfg_.get_double("coverage.gamma", 0.2); }

  double threshold(const std::string& attribute) const;

  std::string get(const std::string& key, const std::string& def = "") const {
    return cfg_.get_string(key, def);
  }
  bool has(const std::string& key) const { return cfg_.has(key); }

  nlohmann::json effective_json() const;
  std::string config_hash() const;

  // The provenance block stamped into every report file.
  nlohmann::json provenance(const std::string& cache_identity) const;

 private:
  KeyValueConfig cfg_;
};

struct RunResult {
  std::vector<std::string> files;  // produced report files
};

// Subcommands: generate | aesthetics | realism | coverage | fairness |
// report. Reports land under <out_dir>/<model-slug>/; `report` merges the
// per-model partials into <out_dir>/eval_report.json. Replay-mode runs are
// pure functions of the cache and config, so reruns are byte-identical.
RunResult run_subcommand(const std::string& name, const RunConfig& cfg);

std::string model_slug(const std::string& model);

}  // namespace evalkit::pipeline
