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

#include "evalkit/evalkit.h"

#include <string>
#include <vector>

#include "coverage/coverage.hpp"
#include "fairness/fairness.hpp"
#include "metrics/rank.hpp"
#include "pipeline/run.hpp"
#include "realism/defect.hpp"
#include "schema/annotation.hpp"
#include "util/error.hpp"

using evalkit::Error;
using evalkit::ErrorCode;

struct evalkit_session {
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string config_path;
  bool has_config_path = false;
  std::string last_error;
  std::string output_files;
};

namespace {

thread_local std::string tls_last_error;

evalkit_status status_from(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return EVALKIT_ERR_CONFIG;
    case ErrorCode::io: return EVALKIT_ERR_IO;
    case ErrorCode::precondition: return EVALKIT_ERR_PRECONDITION;
    case ErrorCode::schema: return EVALKIT_ERR_SCHEMA;
    case ErrorCode::cache_miss: return EVALKIT_ERR_CACHE_MISS;
    case ErrorCode::backend: return EVALKIT_ERR_BACKEND;
    case ErrorCode::metric: return EVALKIT_ERR_METRIC;
    case ErrorCode::internal: return EVALKIT_ERR_INTERNAL;
  }
  return EVALKIT_ERR_INTERNAL;
}

template <typename Fn>
evalkit_status guard(std::string* error_sink, Fn&& fn) {
  try {
    fn();
    if (error_sink) error_sink->clear();
    return EVALKIT_OK;
  } catch (const Error& e) {
    if (error_sink) *error_sink = e.to_json().dump();
    return status_from(e.code());
  } catch (const std::exception& e) {
    if (error_sink) {
      *error_sink = nlohmann::json{{"code", "internal"}, {"message", e.what()}}.dump();
    }
    return EVALKIT_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* evalkit_version(void) { return evalkit::pipeline::kToolVersion; }

evalkit_status evalkit_session_open(const char* config_path, evalkit_session** out_session) {
  if (!out_session) return EVALKIT_ERR_PRECONDITION;
  auto* s = new evalkit_session();
  if (config_path) {
    s->config_path = config_path;
    s->has_config_path = true;
  }
  // Validate the config file eagerly so open fails fast.
  const evalkit_status st = guard(&tls_last_error, [&] {
    evalkit::pipeline::RunConfig::load(
        s->has_config_path ? std::optional<std::string>(s->config_path) : std::nullopt);
  });
  if (st != EVALKIT_OK) {
    delete s;
    *out_session = nullptr;
    return st;
  }
  *out_session = s;
  return EVALKIT_OK;
}

void evalkit_session_close(evalkit_session* session) { delete session; }

evalkit_status evalkit_session_set(evalkit_session* session, const char* key, const char* value) {
  if (!session || !key || !value) return EVALKIT_ERR_PRECONDITION;
  session->overrides.emplace_back(key, value);
  return EVALKIT_OK;
}

evalkit_status evalkit_run(evalkit_session* session, const char* subcommand) {
  if (!session || !subcommand) return EVALKIT_ERR_PRECONDITION;
  return guard(&session->last_error, [&] {
    const auto cfg = evalkit::pipeline::RunConfig::load(
        session->has_config_path ? std::optional<std::string>(session->config_path) : std::nullopt,
        session->overrides);
    const auto result = evalkit::pipeline::run_subcommand(subcommand, cfg);
    session->output_files.clear();
    for (std::size_t i = 0; i < result.files.size(); ++i) {
      if (i) session->output_files += '\n';
      session->output_files += result.files[i];
    }
  });
}

const char* evalkit_session_error(const evalkit_session* session) {
  if (!session || session->last_error.empty()) return nullptr;
  return session->last_error.c_str();
}

const char* evalkit_session_output_files(const evalkit_session* session) {
  if (!session) return nullptr;
  return session->output_files.c_str();
}

const char* evalkit_last_error(void) {
  return tls_last_error.empty() ? nullptr : tls_last_error.c_str();
}

evalkit_status evalkit_srcc(const double* pred, const double* gt, size_t n,
                            double* out_coefficient) {
  if (!pred || !gt || !out_coefficient) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    *out_coefficient = evalkit::metrics::srcc(std::span(pred, n), std::span(gt, n));
  });
}

evalkit_status evalkit_rank_accuracy(const double* pred, const double* gt, size_t n,
                                     double* out_fraction) {
  if (!pred || !gt || !out_fraction) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    *out_fraction = evalkit::metrics::rank_accuracy(std::span(pred, n), std::span(gt, n));
  });
}

evalkit_status evalkit_semantic_entropy(const uint32_t* counts, size_t k, double* out_bits) {
  if (!counts || !out_bits) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    std::vector<int> c;
    c.reserve(k);
    for (size_t i = 0; i < k; ++i) c.push_back(static_cast<int>(counts[i]));
    *out_bits = evalkit::coverage::entropy_bits(c);
  });
}

evalkit_status evalkit_merge_coarse(const int* component_labels, int* out_face_body_whole) {
  if (!component_labels || !out_face_body_whole) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    evalkit::schema::ComponentMap components;
    for (std::size_t i = 0; i < evalkit::schema::kComponents.size(); ++i) {
      const int v = component_labels[i];
      if (v < 0 || v > 2) throw Error(ErrorCode::schema, "label codes are 0|1|2");
      components[evalkit::schema::kComponents[i]] =
          static_cast<evalkit::schema::ComponentLabel>(v);
    }
    const auto coarse = evalkit::schema::merge_coarse(components);
    out_face_body_whole[0] = static_cast<int>(coarse.face);
    out_face_body_whole[1] = static_cast<int>(coarse.body);
    out_face_body_whole[2] = static_cast<int>(coarse.whole);
  });
}

evalkit_status evalkit_detect_bias(const char* attribute, double entropy_bits, int* out_biased) {
  if (!attribute || !out_biased) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    const auto specs = evalkit::fairness::default_attributes();
    const auto& spec = evalkit::fairness::attribute_spec(
        specs, evalkit::fairness::attribute_from_string(attribute));
    *out_biased = evalkit::fairness::detect_bias(entropy_bits, spec) ? 1 : 0;
  });
}

evalkit_status evalkit_defect_rate(const int* labels, size_t n, double* out_rate) {
  if (!labels || !out_rate) return EVALKIT_ERR_PRECONDITION;
  return guard(&tls_last_error, [&] {
    std::vector<evalkit::schema::ComponentLabel> v;
    v.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (labels[i] < 0 || labels[i] > 2) throw Error(ErrorCode::schema, "label codes are 0|1|2");
      v.push_back(static_cast<evalkit::schema::ComponentLabel>(labels[i]));
    }
    *out_rate = evalkit::realism::defect_rate(v);
  });
}

}  // extern "C"
