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
#include <vector>

#include <json.hpp>

namespace evalkit {

// One JSON object per line, UTF-8. Parse errors carry the 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);

void append_jsonl(const std::string& path, const nlohmann::json& row);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace evalkit
