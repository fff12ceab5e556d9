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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace evalkit::schema {

enum class ComponentLabel { good, bad, invisible };

const char* label_name(ComponentLabel l);
ComponentLabel label_from_string(const std::string& s);

// The ten annotated body components, and the face/body groups they merge into.
inline constexpr std::array<const char*, 10> kComponents = {
    "eye", "nose", "mouth", "hair", "cheek", "hand", "arm", "foot", "leg", "trunk"};
inline constexpr std::array<const char*, 5> kFaceGroup = {"eye", "nose", "mouth", "hair", "cheek"};
inline constexpr std::array<const char*, 5> kBodyGroup = {"hand", "arm", "foot", "leg", "trunk"};
inline constexpr std::array<const char*, 3> kCoarseNames = {"face", "body", "whole"};

using ComponentMap = std::map<std::string, ComponentLabel>;

struct CoarseLabels {
  ComponentLabel face = ComponentLabel::good;
  ComponentLabel body = ComponentLabel::good;
  ComponentLabel whole = ComponentLabel::good;

  bool operator==(const CoarseLabels&) const = default;
};

// Coarse merge rule: bad if any member is bad; invisible if all members are
// invisible; good otherwise. face = 5 face components, body = 5 body
// components, whole = all ten. Throws a schema error naming any missing or
// unknown component key.
CoarseLabels merge_coarse(const ComponentMap& components);

struct Box {
  double x = 0, y = 0, w = 0, h = 0;

  bool operator==(const Box&) const = default;
  bool contains(const Box& inner) const {
    return inner.x >= x && inner.y >= y && inner.x + inner.w <= x + w && inner.y + inner.h <= y + h;
  }
};

enum class Source { generated, real };

struct AnnotationRecord {
  std::string image_id;
  Source source = Source::generated;
  std::optional<std::string> prompt;           // required when source == generated
  std::optional<Box> face_box;
  std::optional<Box> body_box;
  std::optional<int> image_width;              // box-bounds checks apply when known
  std::optional<int> image_height;
  ComponentMap components;
  CoarseLabels coarse;                         // always merge_coarse(components)
  nlohmann::json extras = nlohmann::json::object();  // unknown fields, preserved on round trip

  bool operator==(const AnnotationRecord& o) const;
};

// Parses one JSONL object. Coarse labels are re-derived; a stored "coarse"
// field is checked against the recomputation by validate_record.
AnnotationRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const AnnotationRecord& r);

// Recomputes coarse labels and enforces the schema invariants. On violation
// throws a schema error whose detail lists {path, message} entries.
AnnotationRecord validate_record(const AnnotationRecord& record);

std::vector<AnnotationRecord> load_annotations(const std::string& jsonl_path);
void save_annotations(const std::string& jsonl_path, const std::vector<AnnotationRecord>& records);

struct LabelCounts {
  std::int64_t good = 0, bad = 0, invisible = 0;

  std::int64_t total() const { return good + bad + invisible; }
  std::int64_t& at(ComponentLabel l);
};

struct DatasetStats {
  // source name ("generated"/"real") -> component or coarse name -> counts
  std::map<std::string, std::map<std::string, LabelCounts>> components;
  std::map<std::string, std::map<std::string, LabelCounts>> coarse;
  std::int64_t record_count = 0;
};

DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records);
nlohmann::json stats_to_json(const DatasetStats& s);

}  // namespace evalkit::schema
