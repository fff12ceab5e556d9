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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "backends/transcript.hpp"

namespace evalkit::backends {

// A live oracle endpoint (HTTP in production, scripted fixtures in tests).
class LiveBackend {
 public:
  virtual ~LiveBackend() = default;
  virtual nlohmann::json call(BackendKind kind, const nlohmann::json& payload,
                              std::uint32_t sample_index) = 0;
  virtual std::string id() const = 0;
};

// HTTP POST of the canonical JSON payload to the per-kind endpoint URL.
// Body: {"kind":..., "payload":..., "sample_index":...}; response body is the
// response JSON. Auth is a bearer token header when a token is configured.
class HttpBackend : public LiveBackend {
 public:
  struct Endpoints {
    std::string generator_url;
    std::string vqa_url;
    std::string equivalence_url;
    std::string embed_url;
    std::string bearer_token;
  };

  explicit HttpBackend(Endpoints endpoints);
  nlohmann::json call(BackendKind kind, const nlohmann::json& payload,
                      std::uint32_t sample_index) override;
  std::string id() const override { return "http"; }

 private:
  Endpoints endpoints_;
};

struct NormalizeResult {
  std::string answer;  // "yes" or "no"
  bool parsed = true;  // false when the raw answer was neither
};

// Lowercases, trims and maps leading "yes"/"no" word variants. Anything else
// conservatively becomes "no" with parsed=false.
NormalizeResult normalize_closed_answer(const std::string& raw);

enum class QuestionKind { closed, open };

// Routes oracle queries through the record/replay cache. In replay mode no
// live backend is touched; in record mode every response is written through;
// mixed mode reads the cache first and records misses.
class OracleHub {
 public:
  OracleHub(std::shared_ptr<TranscriptCache> cache, std::shared_ptr<LiveBackend> live,
            std::string equivalence_template =
                "Does '{a}' imply '{b}'? Answer yes or no.");

  nlohmann::json query(BackendKind kind, const nlohmann::json& payload,
                       std::uint32_t sample_index);

  // n image references for a prompt. Replay resolves to cached entries.
  std::vector<std::string> generate_images(const std::string& prompt, std::size_t n,
                                           const nlohmann::json& params);

  // T answers, sample_index order. Closed answers are normalized; open
  // answers are returned verbatim, trimmed.
  std::vector<std::string> vqa_ask(const std::string& image_ref, const std::string& question,
                                   std::size_t samples, QuestionKind kind);

  // Bidirectional implication through the equivalence backend. Identical
  // strings short-circuit. Both directed queries are always issued (in
  // lexicographic order), so the transcript set and the verdict are
  // symmetric in the arguments.
  bool sem_equivalent(const std::string& a, const std::string& b);

  // Cosine similarity between the image and text embeddings.
  double clip_score(const std::string& image_ref, const std::string& text);

  std::vector<double> embed_image(const std::string& image_ref);
  std::vector<double> embed_text(const std::string& text);

  std::size_t network_calls() const { return network_calls_.load(); }
  std::size_t normalizer_warnings() const { return normalizer_warnings_.load(); }
  std::size_t equivalence_queries() const { return equivalence_queries_.load(); }

  TranscriptCache& cache() { return *cache_; }
  const std::string& equivalence_template() const { return equivalence_template_; }

  // Injectable for reproducible cache fixtures; defaults to wall time.
  std::function<std::int64_t()> clock;

 private:
  bool directed_implication(const std::string& premise, const std::string& hypothesis);
  std::string response_text(const nlohmann::json& response, BackendKind kind) const;

  std::shared_ptr<TranscriptCache> cache_;
  std::shared_ptr<LiveBackend> live_;
  std::string equivalence_template_;
  std::map<std::string, bool> equivalence_memo_;
  std::mutex memo_mutex_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> normalizer_warnings_{0};
  std::atomic<std::size_t> equivalence_queries_{0};
};

}  // namespace evalkit::backends
