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

#include "schema/annotation.hpp"

#include <algorithm>
#include <set>

#include "util/error.hpp"
#include "util/jsonl.hpp"

namespace evalkit::schema {

namespace {

const std::set<std::string>& known_fields() {
  static const std::set<std::string> f = {
      "image_id", "source", "prompt", "face_box", "body_box",
      "image_width", "image_height", "components", "coarse"};
  return f;
}

ComponentLabel merge_group(const ComponentMap& components, const char* const* names, std::size_t n) {
  bool any_bad = false;
  bool all_invisible = true;
  for (std::size_t i = 0; i < n; ++i) {
    auto it = components.find(names[i]);
    if (it == components.end()) {
      throw Error(ErrorCode::schema, std::string("missing component: ") + names[i],
                  {{"missing", names[i]}});
    }
    any_bad |= it->second == ComponentLabel::bad;
    all_invisible &= it->second == ComponentLabel::invisible;
  }
  if (any_bad) return ComponentLabel::bad;
  if (all_invisible) return ComponentLabel::invisible;
  return ComponentLabel::good;
}

Box box_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j.contains("w") || !j.contains("h")) {
    throw Error(ErrorCode::schema, "box must be an object with x, y, w, h", {{"path", path}});
  }
  return Box{j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
             j.at("h").get<double>()};
}

nlohmann::json box_to_json(const Box& b) {
  return {{"h", b.h}, {"w", b.w}, {"x", b.x}, {"y", b.y}};
}

void check_box(const AnnotationRecord& r, const std::optional<Box>& b, const std::string& path,
               std::vector<nlohmann::json>& violations) {
  if (!b) return;
  if (b->x < 0 || b->y < 0) {
    violations.push_back({{"path", path}, {"message", "box coordinates must be non-negative"}});
  }
  if (b->w <= 0 || b->h <= 0) {
    violations.push_back({{"path", path}, {"message", "box width and height must be positive"}});
  }
  if (r.image_width && r.image_height) {
    if (b->x + b->w > *r.image_width || b->y + b->h > *r.image_height) {
      violations.push_back({{"path", path}, {"message", "box exceeds image bounds"}});
    }
  }
}

}  // namespace

const char* label_name(ComponentLabel l) {
  switch (l) {
    case ComponentLabel::good: return "good";
    case ComponentLabel::bad: return "bad";
    case ComponentLabel::invisible: return "invisible";
  }
  return "?";
}

ComponentLabel label_from_string(const std::string& s) {
  if (s == "good") return ComponentLabel::good;
  if (s == "bad") return ComponentLabel::bad;
  if (s == "invisible") return ComponentLabel::invisible;
  throw Error(ErrorCode::schema, "unknown component label: " + s);
}

CoarseLabels merge_coarse(const ComponentMap& components) {
  for (const auto& [name, _] : components) {
    if (std::find_if(kComponents.begin(), kComponents.end(),
                     [&](const char* c) { return name == c; }) == kComponents.end()) {
      throw Error(ErrorCode::schema, "unknown component: " + name, {{"unknown", name}});
    }
  }
  CoarseLabels out;
  out.face = merge_group(components, kFaceGroup.data(), kFaceGroup.size());
  out.body = merge_group(components, kBodyGroup.data(), kBodyGroup.size());
  out.whole = merge_group(components, kComponents.data(), kComponents.size());
  return out;
}

bool AnnotationRecord::operator==(const AnnotationRecord& o) const {
  return image_id == o.image_id && source == o.source && prompt == o.prompt &&
         face_box == o.face_box && body_box == o.body_box && image_width == o.image_width &&
         image_height == o.image_height && components == o.components && coarse == o.coarse &&
         extras == o.extras;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema, "annotation record must be a JSON object");
  AnnotationRecord r;
  if (!j.contains("image_id") || !j.at("image_id").is_string()) {
    throw Error(ErrorCode::schema, "record missing string image_id");
  }
  r.image_id = j.at("image_id").get<std::string>();
  const std::string src = j.value("source", "generated");
  if (src == "generated") {
    r.source = Source::generated;
  } else if (src == "real") {
    r.source = Source::real;
  } else {
    throw Error(ErrorCode::schema, "unknown source: " + src, {{"path", "source"}});
  }
  if (j.contains("prompt") && !j.at("prompt").is_null()) r.prompt = j.at("prompt").get<std::string>();
  if (j.contains("face_box") && !j.at("face_box").is_null()) {
    r.face_box = box_from_json(j.at("face_box"), "face_box");
  }
  if (j.contains("body_box") && !j.at("body_box").is_null()) {
    r.body_box = box_from_json(j.at("body_box"), "body_box");
  }
  if (j.contains("image_width") && !j.at("image_width").is_null()) {
    r.image_width = j.at("image_width").get<int>();
  }
  if (j.contains("image_height") && !j.at("image_height").is_null()) {
    r.image_height = j.at("image_height").get<int>();
  }
  if (j.contains("components")) {
    if (!j.at("components").is_object()) {
      throw Error(ErrorCode::schema, "components must be an object", {{"path", "components"}});
    }
    for (const auto& [k, v] : j.at("components").items()) {
      r.components[k] = label_from_string(v.get<std::string>());
    }
  }
  // Stored coarse labels are re-derived on load; validate_record compares.
  for (const auto& [k, v] : j.items()) {
    if (!known_fields().count(k)) r.extras[k] = v;
  }
  return r;
}

nlohmann::json record_to_json(const AnnotationRecord& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : r.extras.items()) j[k] = v;
  j["image_id"] = r.image_id;
  j["source"] = r.source == Source::generated ? "generated" : "real";
  if (r.prompt) j["prompt"] = *r.prompt;
  if (r.face_box) j["face_box"] = box_to_json(*r.face_box);
  if (r.body_box) j["body_box"] = box_to_json(*r.body_box);
  if (r.image_width) j["image_width"] = *r.image_width;
  if (r.image_height) j["image_height"] = *r.image_height;
  nlohmann::json comps = nlohmann::json::object();
  for (const auto& [k, v] : r.components) comps[k] = label_name(v);
  j["components"] = comps;
  j["coarse"] = {{"body", label_name(r.coarse.body)},
                 {"face", label_name(r.coarse.face)},
                 {"whole", label_name(r.coarse.whole)}};
  return j;
}

AnnotationRecord validate_record(const AnnotationRecord& record) {
  std::vector<nlohmann::json> violations;
  AnnotationRecord r = record;

  for (const char* name : kComponents) {
    if (!r.components.count(name)) {
      violations.push_back({{"path", std::string("components.") + name},
                            {"message", std::string("missing: ") + name}});
    }
  }
  for (const auto& [name, label] : r.components) {
    if (std::find_if(kComponents.begin(), kComponents.end(),
                     [&, n = name](const char* c) { return n == c; }) == kComponents.end()) {
      violations.push_back({{"path", "components." + name}, {"message", "unknown component: " + name}});
    }
    if (r.source == Source::real && label == ComponentLabel::bad) {
      violations.push_back(
          {{"path", "components." + name}, {"message", "real records may not carry bad"}});
    }
  }
  if (r.source == Source::generated && !r.prompt) {
    violations.push_back({{"path", "prompt"}, {"message", "generated records require a prompt"}});
  }
  check_box(r, r.face_box, "face_box", violations);
  check_box(r, r.body_box, "body_box", violations);

  if (violations.empty()) {
    r.coarse = merge_coarse(r.components);
  }
  if (!violations.empty()) {
    std::string first = violations.front().at("message").get<std::string>();
    throw Error(ErrorCode::schema, "invalid annotation record (" + r.image_id + "): " + first,
                {{"image_id", r.image_id}, {"violations", violations}});
  }
  return r;
}

std::vector<AnnotationRecord> load_annotations(const std::string& jsonl_path) {
  std::vector<AnnotationRecord> out;
  for (const auto& j : read_jsonl(jsonl_path)) {
    out.push_back(validate_record(record_from_json(j)));
  }
  return out;
}

void save_annotations(const std::string& jsonl_path, const std::vector<AnnotationRecord>& records) {
  std::vector<nlohmann::json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(record_to_json(r));
  write_jsonl(jsonl_path, rows);
}

std::int64_t& LabelCounts::at(ComponentLabel l) {
  switch (l) {
    case ComponentLabel::good: return good;
    case ComponentLabel::bad: return bad;
    case ComponentLabel::invisible: return invisible;
  }
  return good;
}

DatasetStats dataset_stats(const std::vector<AnnotationRecord>& records) {
  DatasetStats s;
  for (const auto& r : records) {
    const std::string src = r.source == Source::generated ? "generated" : "real";
    for (const auto& [name, label] : r.components) {
      s.components[src][name].at(label)++;
    }
    s.coarse[src]["face"].at(r.coarse.face)++;
    s.coarse[src]["body"].at(r.coarse.body)++;
    s.coarse[src]["whole"].at(r.coarse.whole)++;
    s.record_count++;
  }
  return s;
}

nlohmann::json stats_to_json(const DatasetStats& s) {
  auto counts_json = [](const std::map<std::string, std::map<std::string, LabelCounts>>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [src, per_name] : m) {
      nlohmann::json block = nlohmann::json::object();
      for (const auto& [name, c] : per_name) {
        block[name] = {{"bad", c.bad}, {"good", c.good}, {"invisible", c.invisible}};
      }
      out[src] = block;
    }
    return out;
  };
  return {{"record_count", s.record_count},
          {"components", counts_json(s.components)},
          {"coarse", counts_json(s.coarse)}};
}

}  // namespace evalkit::schema
