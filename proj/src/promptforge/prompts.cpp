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

#include "promptforge/prompts.hpp"

#include <algorithm>

#include "util/error.hpp"
#include "util/rng.hpp"

namespace evalkit::prompts {

namespace {

constexpr const char* kSections[] = {"image", "human", "scene"};

int section_rank(const std::string& s) {
  for (int i = 0; i < 3; ++i) {
    if (s == kSections[i]) return i;
  }
  throw Error(ErrorCode::config, "unknown prompt section: " + s);
}

}  // namespace

PromptSpec PromptSpec::from_config(const KeyValueConfig& cfg) {
  PromptSpec spec;
  std::vector<std::pair<std::string, std::string>> part_keys;  // (section, name)
  for (const auto& [key, _] : cfg.values()) {
    const std::size_t d1 = key.find('.');
    const std::size_t d2 = key.rfind('.');
    if (d1 == std::string::npos || d2 == d1) continue;
    const std::string section = key.substr(0, d1);
    const std::string name = key.substr(d1 + 1, d2 - d1 - 1);
    if (std::find(part_keys.begin(), part_keys.end(), std::make_pair(section, name)) ==
        part_keys.end()) {
      part_keys.emplace_back(section, name);
    }
  }
  for (const auto& [section, name] : part_keys) {
    PromptPart part;
    part.section = section;
    part.name = name;
    part.probability = cfg.get_double(section + "." + name + ".probability", 0.0);
    part.values = cfg.get_list(section + "." + name + ".values");
    spec.parts.push_back(std::move(part));
  }
  std::sort(spec.parts.begin(), spec.parts.end(), [](const PromptPart& a, const PromptPart& b) {
    const int ra = section_rank(a.section), rb = section_rank(b.section);
    return ra != rb ? ra < rb : a.name < b.name;
  });
  spec.validate();
  return spec;
}

PromptSpec PromptSpec::load(const std::string& cfg_path) {
  return from_config(KeyValueConfig::parse_file(cfg_path));
}

void PromptSpec::validate() const {
  for (const auto& p : parts) {
    if (p.probability < 0.0 || p.probability > 1.0) {
      throw Error(ErrorCode::config, "part probability out of [0,1]: " + p.section + "." + p.name);
    }
    if (p.probability > 0.0 && p.values.empty()) {
      throw Error(ErrorCode::config,
                  "part has probability > 0 but an empty value pool: " + p.section + "." + p.name);
    }
  }
}

std::string build_prompt(const PromptSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream rng(seed);
  std::string out;
  for (const auto& part : spec.parts) {
    if (part.probability <= 0.0) continue;
    const bool include = part.probability >= 1.0 || rng.uniform() < part.probability;
    if (!include) continue;
    const std::string& value = rng.pick(part.values);
    if (!out.empty()) out += ", ";
    out += value;
  }
  return out;
}

std::vector<Concept> fairness_concepts(const ConceptVocabulary& vocab) {
  std::vector<Concept> out;
  for (const auto& c : vocab.all()) {
    // I14 (playing with children), I19 (attending concert) and I20
    // (socializing) put multiple humans in frame and are excluded.
    if (c.category == Category::interaction && c.index &&
        (*c.index == 14 || *c.index == 19 || *c.index == 20)) {
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string fairness_prompt_for(const Concept& c) {
  return "a realistic photo of a person who is " + c.prompt_form + ".";
}

std::vector<std::string> fairness_prompts(const ConceptVocabulary& vocab) {
  std::vector<std::string> out;
  for (const auto& c : fairness_concepts(vocab)) out.push_back(fairness_prompt_for(c));
  return out;
}

CoverageQuestions coverage_questions(const Concept& c) {
  if (c.category != Category::action && c.category != Category::interaction) {
    throw Error(ErrorCode::precondition,
                "coverage questions are only defined for action/interaction concepts",
                {{"category", category_name(c.category)}});
  }
  const std::string g = c.gerund ? *c.gerund : c.name;
  CoverageQuestions q;
  q.closed = {"Is the person " + g + " in the image?",
              "Is the picture depicting that a human is " + g + "?"};
  q.open = {"What action is the person performing in the image?",
            "Can you describe the activity being carried out by the person?"};
  return q;
}

}  // namespace evalkit::prompts
