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

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aesthetics/image.hpp"
#include "backends/oracle.hpp"
#include "coverage/coverage.hpp"
#include "schema/annotation.hpp"
#include "util/base64.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"

namespace evalkit::test {

inline std::string data_dir() { return EVALKIT_DATA_DIR; }

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("evalkit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

// Rule-based equivalence oracle: two strings are equivalent iff they map to
// the same canonical form. Symmetric, reflexive and transitive.
inline coverage::EquivalenceOracle synonym_oracle(
    const std::map<std::string, std::string>& canon) {
  return [canon](const std::string& a, const std::string& b) {
    auto canonical = [&canon](const std::string& s) {
      auto it = canon.find(s);
      return it == canon.end() ? s : it->second;
    };
    return canonical(a) == canonical(b);
  };
}

// Scripted in-process backend. Tests preload responses per (kind, payload,
// sample_index); used with a record-mode cache it produces replayable
// transcript fixtures through the real pipeline.
class ScriptedBackend : public backends::LiveBackend {
 public:
  using Responder = std::function<nlohmann::json(const nlohmann::json&, std::uint32_t)>;

  void script(backends::BackendKind kind, Responder responder) {
    responders_[kind] = std::move(responder);
  }

  nlohmann::json call(backends::BackendKind kind, const nlohmann::json& payload,
                      std::uint32_t sample_index) override {
    auto it = responders_.find(kind);
    if (it == responders_.end()) {
      throw Error(ErrorCode::backend,
                  std::string("scripted backend has no responder for ") +
                      backends::kind_name(kind));
    }
    ++calls_;
    return it->second(payload, sample_index);
  }

  std::string id() const override { return "scripted-test-backend"; }
  std::size_t calls() const { return calls_; }

 private:
  std::map<backends::BackendKind, Responder> responders_;
  std::size_t calls_ = 0;
};

inline nlohmann::json text_response(const std::string& text) {
  return {{"type", "text"}, {"text", text}};
}

inline nlohmann::json vector_response(const std::vector<double>& values) {
  return {{"type", "vector"}, {"values", values}};
}

inline nlohmann::json image_response(const std::string& ref) {
  return {{"type", "image"}, {"ref", ref}};
}

// Equivalence responder over a synonym table: answers the directed
// implication "premise => hypothesis" with yes iff canonical forms match.
inline ScriptedBackend::Responder equivalence_responder(
    std::map<std::string, std::string> canon) {
  return [canon = std::move(canon)](const nlohmann::json& payload, std::uint32_t) {
    auto canonical = [&canon](const std::string& s) {
      auto it = canon.find(s);
      return it == canon.end() ? s : it->second;
    };
    const bool same = canonical(payload.at("premise").get<std::string>()) ==
                      canonical(payload.at("hypothesis").get<std::string>());
    return text_response(same ? "yes" : "no");
  };
}

// Flat-color test image.
inline img::Image solid_image(int w, int h, float r, float g, float b) {
  img::Image im(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      im.at(x, y, 0) = r;
      im.at(x, y, 1) = g;
      im.at(x, y, 2) = b;
    }
  }
  return im;
}

inline img::Image noise_image(int w, int h, RngStream& rng) {
  img::Image im(w, h, 3);
  for (float& v : im.data) v = static_cast<float>(rng.uniform());
  return im;
}

inline schema::AnnotationRecord make_record(const std::string& id,
                                            schema::ComponentLabel fill =
                                                schema::ComponentLabel::good) {
  schema::AnnotationRecord r;
  r.image_id = id;
  r.source = schema::Source::generated;
  r.prompt = "a realistic photo of a person";
  for (const char* c : schema::kComponents) r.components[c] = fill;
  r.coarse = schema::merge_coarse(r.components);
  return r;
}

}  // namespace evalkit::test
