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

#include <string>
#include <string_view>

#include <json.hpp>

namespace evalkit {

// SHA-256 hex digest. Stable across runs and platforms.
std::string sha256_hex(std::string_view data);

std::string sha256_file_hex(const std::string& path);

// Canonical JSON: sorted keys, no whitespace, UTF-8. nlohmann::json keeps
// object keys sorted (std::map), so a compact dump is canonical.
inline std::string canonical_json(const nlohmann::json& j) { return j.dump(); }

}  // namespace evalkit
