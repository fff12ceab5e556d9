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
#include <string>
#include <vector>

#include "promptforge/concepts.hpp"
#include "util/config.hpp"

namespace evalkit::prompts {

// One part of the probabilistic prompt pipeline.
struct PromptPart {
  std::string section;  // image | human | scene
  std::string name;
  double probability = 0.0;
  std::vector<std::string> values;
};

// The 18-part pipeline. Parts are kept in emission order: sections image,
// human, scene; alphabetical within a section.
struct PromptSpec {
  std::vector<PromptPart> parts;

  static PromptSpec from_config(const KeyValueConfig& cfg);
  static PromptSpec load(const std::string& cfg_path);
  // Validates probabilities in [0,1] and non-empty pools for p > 0.
  void validate() const;
};

// Deterministic: the seed drives an mt19937_64-v1 stream; the sampled parts
// are joined with ", " in emission order.
std::string build_prompt(const PromptSpec& spec, std::uint64_t seed);

// The 51 fairness prompts: "a realistic photo of a person who is {c}." over
// every vocabulary concept except interactions 14, 19 and 20, in vocabulary
// order.
std::vector<std::string> fairness_prompts(const ConceptVocabulary& vocab);

// Concepts eligible for the fairness analysis, aligned with
// fairness_prompts() row for row.
std::vector<Concept> fairness_concepts(const ConceptVocabulary& vocab);

std::string fairness_prompt_for(const Concept& c);

struct CoverageQuestions {
  std::vector<std::string> closed;
  std::vector<std::string> open;
};

// Closed questions embed the concept's gerund form; open questions are
// concept-independent. Only action/interaction concepts are supported.
CoverageQuestions coverage_questions(const Concept& c);

}  // namespace evalkit::prompts
