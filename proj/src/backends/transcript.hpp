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

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace evalkit::backends {

enum class BackendKind { generate, vqa, equivalence, embed_image, embed_text };

const char* kind_name(BackendKind k);
BackendKind kind_from_string(const std::string& s);

enum class CacheMode { record, replay, mixed };

CacheMode mode_from_string(const std::string& s);
const char* mode_name(CacheMode m);

// A backend query. The payload is canonicalized (sorted keys, no whitespace)
// before hashing, so the request hash is stable across runs and platforms.
// sample_index distinguishes repeated stochastic draws of the same request.
struct BackendRequest {
  BackendKind kind;
  nlohmann::json payload;
  std::uint32_t sample_index = 0;

  // sha256 over "<kind>\n<canonical payload>"; sample_index is not part of
  // the hash, the cache keys on (hash, sample_index).
  std::string hash() const;
};

struct Transcript {
  std::string request_hash;
  BackendKind kind;
  nlohmann::json payload;
  std::uint32_t sample_index = 0;
  nlohmann::json response;     // {"type":"text"|"vector"|"image", ...}
  std::int64_t timestamp_ms = 0;
  std::string backend_id;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static Transcript from_json(const nlohmann::json& j);
};

// Append-only JSON-lines transcript store. Record mode writes through,
// replay mode never touches the network, mixed mode reads first and records
// misses. Readers are lock-free after load; writes are serialized.
class TranscriptCache {
 public:
  TranscriptCache(std::string dir, CacheMode mode);

  CacheMode mode() const { return mode_; }
  const std::string& dir() const { return dir_; }
  std::string transcripts_path() const;
  std::string images_dir() const;

  std::optional<Transcript> get(const std::string& request_hash, std::uint32_t sample_index) const;

  // Throws a cache_miss error naming the request hash.
  Transcript get_or_throw(const std::string& request_hash, std::uint32_t sample_index) const;

  void put(const Transcript& t);

  // Stores image bytes content-addressed; returns "<sha256>.<ext>".
  std::string put_image(const std::string& bytes, const std::string& ext);
  std::string image_path(const std::string& ref) const;

  std::size_t size() const { return by_key_.size(); }

  // sha256 of the transcripts file; identifies the cache in reports.
  std::string identity() const;

 private:
  std::string dir_;
  CacheMode mode_;
  std::map<std::pair<std::string, std::uint32_t>, Transcript> by_key_;
  mutable std::mutex write_mutex_;
};

}  // namespace evalkit::backends
