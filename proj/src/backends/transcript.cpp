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

#include "backends/transcript.hpp"

#include <filesystem>
#include <fstream>

#include "util/error.hpp"
#include "util/hash.hpp"
#include "util/jsonl.hpp"

namespace fs = std::filesystem;

namespace evalkit::backends {

const char* kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::generate: return "generate";
    case BackendKind::vqa: return "vqa";
    case BackendKind::equivalence: return "equivalence";
    case BackendKind::embed_image: return "embed_image";
    case BackendKind::embed_text: return "embed_text";
  }
  return "?";
}

BackendKind kind_from_string(const std::string& s) {
  if (s == "generate") return BackendKind::generate;
  if (s == "vqa") return BackendKind::vqa;
  if (s == "equivalence") return BackendKind::equivalence;
  if (s == "embed_image") return BackendKind::embed_image;
  if (s == "embed_text") return BackendKind::embed_text;
  throw Error(ErrorCode::schema, "unknown backend kind: " + s);
}

CacheMode mode_from_string(const std::string& s) {
  if (s == "record") return CacheMode::record;
  if (s == "replay") return CacheMode::replay;
  if (s == "mixed") return CacheMode::mixed;
  throw Error(ErrorCode::config, "unknown cache mode: " + s + " (want record|replay|mixed)");
}

const char* mode_name(CacheMode m) {
  switch (m) {
    case CacheMode::record: return "record";
    case CacheMode::replay: return "replay";
    case CacheMode::mixed: return "mixed";
  }
  return "?";
}

std::string BackendRequest::hash() const {
  return sha256_hex(std::string(kind_name(kind)) + "\n" + canonical_json(payload));
}

nlohmann::json Transcript::to_json() const {
  nlohmann::json j{{"request_hash", request_hash},
                   {"kind", kind_name(kind)},
                   {"payload", payload},
                   {"sample_index", sample_index},
                   {"response", response},
                   {"timestamp_ms", timestamp_ms},
                   {"backend_id", backend_id}};
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

Transcript Transcript::from_json(const nlohmann::json& j) {
  Transcript t;
  t.request_hash = j.at("request_hash").get<std::string>();
  t.kind = kind_from_string(j.at("kind").get<std::string>());
  t.payload = j.at("payload");
  t.sample_index = j.at("sample_index").get<std::uint32_t>();
  t.response = j.at("response");
  t.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
  t.backend_id = j.value("backend_id", "");
  if (j.contains("warnings")) t.warnings = j.at("warnings").get<std::vector<std::string>>();
  return t;
}

TranscriptCache::TranscriptCache(std::string dir, CacheMode mode)
    : dir_(std::move(dir)), mode_(mode) {
  fs::create_directories(dir_);
  fs::create_directories(images_dir());
  const std::string path = transcripts_path();
  if (fs::exists(path)) {
    for (const auto& j : read_jsonl(path)) {
      Transcript t = Transcript::from_json(j);
      const std::string computed = BackendRequest{t.kind, t.payload, t.sample_index}.hash();
      if (computed != t.request_hash) {
        throw Error(ErrorCode::io, "transcript hash mismatch in " + path,
                    {{"stored", t.request_hash}, {"computed", computed}});
      }
      by_key_[{t.request_hash, t.sample_index}] = std::move(t);
    }
  }
}

std::string TranscriptCache::transcripts_path() const { return dir_ + "/transcripts.jsonl"; }
std::string TranscriptCache::images_dir() const { return dir_ + "/images"; }

std::optional<Transcript> TranscriptCache::get(const std::string& request_hash,
                                               std::uint32_t sample_index) const {
  auto it = by_key_.find({request_hash, sample_index});
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

Transcript TranscriptCache::get_or_throw(const std::string& request_hash,
                                         std::uint32_t sample_index) const {
  auto t = get(request_hash, sample_index);
  if (!t) {
    throw Error(ErrorCode::cache_miss,
                "replay cache miss for request " + request_hash + " sample " +
                    std::to_string(sample_index),
                {{"request_hash", request_hash}, {"sample_index", sample_index}});
  }
  return *t;
}

void TranscriptCache::put(const Transcript& t) {
  if (mode_ == CacheMode::replay) {
    throw Error(ErrorCode::precondition, "cannot write to a replay-mode cache");
  }
  std::lock_guard<std::mutex> lock(write_mutex_);
  if (by_key_.count({t.request_hash, t.sample_index})) return;  // idempotent
  append_jsonl(transcripts_path(), t.to_json());
  by_key_[{t.request_hash, t.sample_index}] = t;
}

std::string TranscriptCache::put_image(const std::string& bytes, const std::string& ext) {
  const std::string ref = sha256_hex(bytes) + "." + ext;
  const std::string path = image_path(ref);
  if (!fs::exists(path)) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    write_text_file(path, bytes);
  }
  return ref;
}

std::string TranscriptCache::image_path(const std::string& ref) const {
  return images_dir() + "/" + ref;
}

std::string TranscriptCache::identity() const {
  const std::string path = transcripts_path();
  if (!fs::exists(path)) return "empty";
  return sha256_file_hex(path);
}

}  // namespace evalkit::backends
