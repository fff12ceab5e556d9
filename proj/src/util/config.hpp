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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace evalkit {

// Plain-text nested key-value configuration:
//   # comment
//   section.key = value
//   section.list = a | b | c
// Keys are dotted paths; later assignments win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def = "") const;
  double get_double(const std::string& key, double def) const;
  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  bool get_bool(const std::string& key, bool def) const;
  // "a | b | c" -> {"a","b","c"}; empty value -> {}.
  std::vector<std::string> get_list(const std::string& key) const;

  // Keys under "prefix." with the prefix stripped, sorted.
  std::vector<std::string> subkeys(const std::string& prefix) const;

  // Environment variables override file values: override("backends.vqa_url",
  // "EVALKIT_VQA_URL") copies the env value in when the variable is set.
  void override_from_env(const std::string& key, const std::string& env_var);

  nlohmann::json to_json() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(const std::string& s);
std::string to_lower(std::string s);

}  // namespace evalkit
