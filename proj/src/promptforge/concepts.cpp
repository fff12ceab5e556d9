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

#include "promptforge/concepts.hpp"

#include <set>

#include "util/error.hpp"
#include "util/jsonl.hpp"

namespace evalkit::prompts {

const char* category_name(Category c) {
  switch (c) {
    case Category::action: return "action";
    case Category::interaction: return "interaction";
    case Category::age_stage: return "age_stage";
    case Category::ethnicity: return "ethnicity";
    case Category::eye_color: return "eye_color";
    case Category::gender: return "gender";
    case Category::hair_color: return "hair_color";
    case Category::hairstyle: return "hairstyle";
    case Category::height: return "height";
    case Category::skin_tone: return "skin_tone";
    case Category::weight: return "weight";
  }
  return "?";
}

Category category_from_string(const std::string& s) {
  static const std::vector<std::pair<std::string, Category>> table = {
      {"action", Category::action},       {"interaction", Category::interaction},
      {"age_stage", Category::age_stage}, {"ethnicity", Category::ethnicity},
      {"eye_color", Category::eye_color}, {"gender", Category::gender},
      {"hair_color", Category::hair_color}, {"hairstyle", Category::hairstyle},
      {"height", Category::height},       {"skin_tone", Category::skin_tone},
      {"weight", Category::weight}};
  for (const auto& [name, cat] : table) {
    if (name == s) return cat;
  }
  throw Error(ErrorCode::schema, "unknown concept category: " + s);
}

ConceptVocabulary ConceptVocabulary::load(const std::string& jsonl_path) {
  ConceptVocabulary vocab;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> labels;
  std::set<int> action_indices, interaction_indices;
  for (const auto& j : read_jsonl(jsonl_path)) {
    Concept c;
    c.name = j.at("name").get<std::string>();
    c.category = category_from_string(j.at("category").get<std::string>());
    if (j.contains("index") && !j.at("index").is_null()) c.index = j.at("index").get<int>();
    c.label = j.value("label", c.name);
    c.prompt_form = j.value("prompt_form", c.label);
    if (j.contains("gerund") && !j.at("gerund").is_null()) {
      c.gerund = j.at("gerund").get<std::string>();
    }
    if (!seen.insert({category_name(c.category), c.name}).second) {
      throw Error(ErrorCode::schema, "duplicate concept: " + c.name,
                  {{"category", category_name(c.category)}});
    }
    if (!labels.insert(c.label).second) {
      throw Error(ErrorCode::schema, "duplicate concept label: " + c.label);
    }
    if (c.category == Category::action) {
      if (!c.index) throw Error(ErrorCode::schema, "action concept missing index: " + c.name);
      action_indices.insert(*c.index);
    }
    if (c.category == Category::interaction) {
      if (!c.index) throw Error(ErrorCode::schema, "interaction concept missing index: " + c.name);
      interaction_indices.insert(*c.index);
    }
    vocab.concepts_.push_back(std::move(c));
  }
  for (int i = 1; i <= 10; ++i) {
    if (!action_indices.count(i)) {
      throw Error(ErrorCode::schema, "action index missing: " + std::to_string(i));
    }
  }
  for (int i = 1; i <= 20; ++i) {
    if (!interaction_indices.count(i)) {
      throw Error(ErrorCode::schema, "interaction index missing: " + std::to_string(i));
    }
  }
  return vocab;
}

std::vector<Concept> ConceptVocabulary::by_category(Category c) const {
  std::vector<Concept> out;
  for (const auto& k : concepts_) {
    if (k.category == c) out.push_back(k);
  }
  return out;
}

std::vector<Concept> ConceptVocabulary::coverage_concepts() const {
  std::vector<Concept> out;
  for (const auto& k : concepts_) {
    if (k.category == Category::action || k.category == Category::interaction) out.push_back(k);
  }
  return out;
}

const Concept& ConceptVocabulary::find(Category c, const std::string& name) const {
  for (const auto& k : concepts_) {
    if (k.category == c && k.name == name) return k;
  }
  throw Error(ErrorCode::schema, "concept not found: " + name,
              {{"category", category_name(c)}});
}

const Concept* ConceptVocabulary::find_by_label(const std::string& label) const {
  for (const auto& k : concepts_) {
    if (k.label == label) return &k;
  }
  return nullptr;
}

}  // namespace evalkit::prompts
