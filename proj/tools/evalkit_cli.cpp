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

// evalkit <subcommand> --config <file> [--mode record|replay|mixed]
//         [--limit N] [--out DIR] [--model NAME] [--cache DIR]
//         [--set key=value ...]
//
// Thin driver over the evalkit C API. Errors print as one JSON object on
// stderr; exit code 2 on a replay cache miss, 1 on any other error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evalkit/evalkit.h"

namespace {

int fail(evalkit_session* session, evalkit_status status) {
  const char* err = session ? evalkit_session_error(session) : evalkit_last_error();
  if (!err) err = "{\"code\":\"internal\",\"message\":\"unknown error\"}";
  std::fprintf(stderr, "%s\n", err);
  if (session) evalkit_session_close(session);
  return status == EVALKIT_ERR_CACHE_MISS ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evalkit - text-to-image model evaluation harness"};
  app.require_subcommand(1);

  std::string config_path, mode, out_dir, cache_dir, model;
  long long limit = 0;
  std::vector<std::string> sets;

  const std::vector<std::string> names = {"generate", "aesthetics", "realism",
                                          "coverage", "fairness",   "report"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "plain-text key-value config file");
    sub->add_option("--mode", mode, "cache mode: record|replay|mixed");
    sub->add_option("--limit", limit, "deterministic image subsample size");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--cache", cache_dir, "transcript cache directory");
    sub->add_option("--model", model, "model id under test");
    sub->add_option("--set", sets, "extra config override key=value")->take_all();
  }

  CLI11_PARSE(app, argc, argv);
  const std::string subcommand = app.get_subcommands().front()->get_name();

  evalkit_session* session = nullptr;
  evalkit_status st =
      evalkit_session_open(config_path.empty() ? nullptr : config_path.c_str(), &session);
  if (st != EVALKIT_OK) return fail(nullptr, st);

  auto set = [&](const char* key, const std::string& value) {
    if (!value.empty()) evalkit_session_set(session, key, value.c_str());
  };
  set("run.mode", mode);
  set("run.out_dir", out_dir);
  set("run.cache_dir", cache_dir);
  set("run.model", model);
  if (limit > 0) set("run.limit", std::to_string(limit));
  for (const auto& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "{\"code\":\"config\",\"message\":\"--set expects key=value: %s\"}\n",
                   kv.c_str());
      evalkit_session_close(session);
      return 1;
    }
    evalkit_session_set(session, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }

  st = evalkit_run(session, subcommand.c_str());
  if (st != EVALKIT_OK) return fail(session, st);

  const char* files = evalkit_session_output_files(session);
  if (files && files[0]) std::printf("%s\n", files);
  evalkit_session_close(session);
  return 0;
}
