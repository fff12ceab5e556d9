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

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace evalkit {

// Error taxonomy shared with the C API status codes in evalkit.h.
enum class ErrorCode {
  config = 1,
  io = 2,
  precondition = 3,
  schema = 4,
  cache_miss = 5,
  backend = 6,
  metric = 7,
  internal = 8,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::schema: return "schema";
    case ErrorCode::cache_miss: return "cache_miss";
    case ErrorCode::backend: return "backend";
    case ErrorCode::metric: return "metric";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, nlohmann::json detail = nullptr)
      : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }

  // Machine-readable form used by the CLI and the C API.
  nlohmann::json to_json() const {
    nlohmann::json j{{"code", error_code_name(code_)}, {"message", what()}};
    if (!detail_.is_null()) j["detail"] = detail_;
    return j;
  }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace evalkit
