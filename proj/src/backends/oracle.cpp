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

#include "backends/oracle.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "util/base64.hpp"
#include "util/config.hpp"
#include "util/error.hpp"

namespace evalkit::backends {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Splits "http://host:port/path" for httplib.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::config, "backend URL must include a scheme: " + url);
  }
  const std::size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

HttpBackend::HttpBackend(Endpoints endpoints) : endpoints_(std::move(endpoints)) {}

nlohmann::json HttpBackend::call(BackendKind kind, const nlohmann::json& payload,
                                 std::uint32_t sample_index) {
  std::string url;
  switch (kind) {
    case BackendKind::generate: url = endpoints_.generator_url; break;
    case BackendKind::vqa: url = endpoints_.vqa_url; break;
    case BackendKind::equivalence: url = endpoints_.equivalence_url; break;
    case BackendKind::embed_image:
    case BackendKind::embed_text: url = endpoints_.embed_url; break;
  }
  if (url.empty()) {
    throw Error(ErrorCode::backend,
                std::string("no endpoint configured for backend kind ") + kind_name(kind));
  }
  const auto [host, path] = split_url(url);
  httplib::Client client(host);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!endpoints_.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoints_.bearer_token);
  }
  const nlohmann::json body{
      {"kind", kind_name(kind)}, {"payload", payload}, {"sample_index", sample_index}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::backend, std::string("backend unreachable: ") + url,
                {{"kind", kind_name(kind)}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::backend, "backend returned status " + std::to_string(res->status),
                {{"kind", kind_name(kind)}, {"body", res->body}});
  }
  return nlohmann::json::parse(res->body);
}

NormalizeResult normalize_closed_answer(const std::string& raw) {
  const std::string t = to_lower(trim(raw));
  auto leading_word = [&](const char* word) {
    const std::size_t n = std::string(word).size();
    if (t.size() < n || t.compare(0, n, word) != 0) return false;
    if (t.size() == n) return true;
    const unsigned char next = static_cast<unsigned char>(t[n]);
    return !std::isalnum(next);
  };
  if (leading_word("yes")) return {"yes", true};
  if (leading_word("no")) return {"no", true};
  return {"no", false};  // conservative: counts against coverage
}

OracleHub::OracleHub(std::shared_ptr<TranscriptCache> cache, std::shared_ptr<LiveBackend> live,
                     std::string equivalence_template)
    : clock(now_ms), cache_(std::move(cache)), live_(std::move(live)),
      equivalence_template_(std::move(equivalence_template)) {}

nlohmann::json OracleHub::query(BackendKind kind, const nlohmann::json& payload,
                                std::uint32_t sample_index) {
  const BackendRequest req{kind, payload, sample_index};
  const std::string hash = req.hash();
  const CacheMode mode = cache_->mode();

  if (mode == CacheMode::replay) {
    return cache_->get_or_throw(hash, sample_index).response;
  }
  if (mode == CacheMode::mixed) {
    if (auto hit = cache_->get(hash, sample_index)) return hit->response;
  }
  if (!live_) {
    throw Error(ErrorCode::backend,
                std::string("no live backend configured (mode ") + mode_name(mode) + ")",
                {{"request_hash", hash}});
  }
  network_calls_++;
  nlohmann::json response = live_->call(kind, payload, sample_index);

  // Generators may return raw image bytes; store them content-addressed and
  // keep only the reference in the transcript.
  if (kind == BackendKind::generate && response.contains("bytes_b64")) {
    const std::string bytes = base64_decode(response.at("bytes_b64").get<std::string>());
    const std::string ext = response.value("ext", "ppm");
    const std::string ref = cache_->put_image(bytes, ext);
    response = nlohmann::json{{"type", "image"}, {"ref", ref}};
  }

  Transcript t;
  t.request_hash = hash;
  t.kind = kind;
  t.payload = payload;
  t.sample_index = sample_index;
  t.response = response;
  t.timestamp_ms = clock();
  t.backend_id = live_->id();
  if (kind == BackendKind::vqa && payload.value("question_kind", "") == "closed") {
    const NormalizeResult n = normalize_closed_answer(response_text(response, kind));
    if (!n.parsed) t.warnings.push_back("unparsed_closed_answer");
  }
  cache_->put(t);
  return response;
}

std::string OracleHub::response_text(const nlohmann::json& response, BackendKind kind) const {
  if (!response.is_object() || response.value("type", "") != "text" || !response.contains("text")) {
    throw Error(ErrorCode::backend,
                std::string("expected a text response from ") + kind_name(kind),
                {{"response", response}});
  }
  return response.at("text").get<std::string>();
}

std::vector<std::string> OracleHub::generate_images(const std::string& prompt, std::size_t n,
                                                    const nlohmann::json& params) {
  if (n < 1) throw Error(ErrorCode::precondition, "generate_images requires n >= 1");
  nlohmann::json payload{{"prompt", prompt}, {"params", params}};
  std::vector<std::string> refs;
  refs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const nlohmann::json r = query(BackendKind::generate, payload, static_cast<std::uint32_t>(i));
    if (!r.is_object() || r.value("type", "") != "image" || !r.contains("ref")) {
      throw Error(ErrorCode::backend, "generator response is not an image reference",
                  {{"response", r}});
    }
    refs.push_back(r.at("ref").get<std::string>());
  }
  return refs;
}

std::vector<std::string> OracleHub::vqa_ask(const std::string& image_ref,
                                            const std::string& question, std::size_t samples,
                                            QuestionKind kind) {
  if (samples < 1) throw Error(ErrorCode::precondition, "vqa_ask requires samples >= 1");
  const nlohmann::json payload{{"image", image_ref},
                               {"question", question},
                               {"question_kind", kind == QuestionKind::closed ? "closed" : "open"}};
  std::vector<std::string> answers;
  answers.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const nlohmann::json r = query(BackendKind::vqa, payload, static_cast<std::uint32_t>(i));
    const std::string raw = response_text(r, BackendKind::vqa);
    if (kind == QuestionKind::closed) {
      const NormalizeResult n = normalize_closed_answer(raw);
      if (!n.parsed) normalizer_warnings_++;
      answers.push_back(n.answer);
    } else {
      answers.push_back(trim(raw));
    }
  }
  return answers;
}

bool OracleHub::directed_implication(const std::string& premise, const std::string& hypothesis) {
  std::string q = equivalence_template_;
  auto replace = [&q](const std::string& slot, const std::string& value) {
    const std::size_t pos = q.find(slot);
    if (pos != std::string::npos) q.replace(pos, slot.size(), value);
  };
  replace("{a}", premise);
  replace("{b}", hypothesis);
  const nlohmann::json payload{
      {"premise", premise}, {"hypothesis", hypothesis}, {"question", q}};
  const nlohmann::json r = query(BackendKind::equivalence, payload, 0);
  const std::string raw = to_lower(trim(response_text(r, BackendKind::equivalence)));
  const NormalizeResult n = normalize_closed_answer(raw);
  if (!n.parsed) {
    throw Error(ErrorCode::backend, "equivalence backend returned a non-parseable verdict",
                {{"verdict", raw}, {"premise", premise}, {"hypothesis", hypothesis}});
  }
  return n.answer == "yes";
}

bool OracleHub::sem_equivalent(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::precondition, "sem_equivalent requires non-empty strings");
  }
  if (a == b) return true;  // reflexivity without a backend call
  const std::string lo = std::min(a, b), hi = std::max(a, b);
  const std::string memo_key = lo + "\x1f" + hi;
  {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    auto it = equivalence_memo_.find(memo_key);
    if (it != equivalence_memo_.end()) return it->second;
  }
  equivalence_queries_++;
  const bool forward = directed_implication(lo, hi);
  const bool backward = directed_implication(hi, lo);
  const bool verdict = forward && backward;
  {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    equivalence_memo_[memo_key] = verdict;
  }
  return verdict;
}

std::vector<double> OracleHub::embed_image(const std::string& image_ref) {
  const nlohmann::json r = query(BackendKind::embed_image, {{"image", image_ref}}, 0);
  if (!r.is_object() || r.value("type", "") != "vector" || !r.contains("values")) {
    throw Error(ErrorCode::backend, "embedding backend did not return a vector", {{"response", r}});
  }
  return r.at("values").get<std::vector<double>>();
}

std::vector<double> OracleHub::embed_text(const std::string& text) {
  const nlohmann::json r = query(BackendKind::embed_text, {{"text", text}}, 0);
  if (!r.is_object() || r.value("type", "") != "vector" || !r.contains("values")) {
    throw Error(ErrorCode::backend, "embedding backend did not return a vector", {{"response", r}});
  }
  return r.at("values").get<std::vector<double>>();
}

double OracleHub::clip_score(const std::string& image_ref, const std::string& text) {
  const std::vector<double> vi = embed_image(image_ref);
  const std::vector<double> vt = embed_text(text);
  if (vi.size() != vt.size() || vi.empty()) {
    throw Error(ErrorCode::backend, "embedding dimension mismatch",
                {{"image_dim", vi.size()}, {"text_dim", vt.size()}});
  }
  double dot = 0, ni = 0, nt = 0;
  for (std::size_t i = 0; i < vi.size(); ++i) {
    dot += vi[i] * vt[i];
    ni += vi[i] * vi[i];
    nt += vt[i] * vt[i];
  }
  if (ni == 0.0 || nt == 0.0) {
    throw Error(ErrorCode::backend, "zero-norm embedding");
  }
  const double cos = dot / (std::sqrt(ni) * std::sqrt(nt));
  return std::max(-1.0, std::min(1.0, cos));
}

}  // namespace evalkit::backends
