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

#include <optional>
#include <string>
#include <vector>

namespace evalkit::prompts {

enum class Category {
  action,
  interaction,
  age_stage,
  ethnicity,
  eye_color,
  gender,
  hair_color,
  hairstyle,
  height,
  skin_tone,
  weight,
};

const char* category_name(Category c);
Category category_from_string(const std::string& s);

struct Concept {
  std::string name;            // vocabulary value, e.g. "run", "blue"
  Category category;
  std::optional<int> index;    // A_i / I_j numbering for actions/interactions
  std::string label;           // display/report name, e.g. "blue eye"
  std::string prompt_form;     // what the prompt template receives
  std::optional<std::string> gerund;  // actions carry "run"/"running"
};

class ConceptVocabulary {
 public:
  // Loads and validates concepts.jsonl: (category, name) unique, labels
  // unique, action indices 1..10 and interaction indices 1..20 complete.
  static ConceptVocabulary load(const std::string& jsonl_path);

  const std::vector<Concept>& all() const { return concepts_; }
  std::vector<Concept> by_category(Category c) const;
  // Action + interaction concepts, the 30 coverage concepts.
  std::vector<Concept> coverage_concepts() const;
  const Concept& find(Category c, const std::string& name) const;
  const Concept* find_by_label(const std::string& label) const;

 private:
  std::vector<Concept> concepts_;
};

}  // namespace evalkit::prompts
