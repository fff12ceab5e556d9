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

#include <doctest.h>

#include "schema/annotation.hpp"
#include "support/fixtures.hpp"
#include "util/jsonl.hpp"

using namespace evalkit;
using namespace evalkit::schema;
using evalkit::test::make_record;

namespace {

// Independent merge rule used as the oracle: per group, bad if any bad,
// invisible if all invisible, else good.
ComponentLabel oracle_group(const ComponentMap& m, const std::vector<std::string>& names) {
  bool any_bad = false, all_inv = true;
  for (const auto& n : names) {
    any_bad = any_bad || m.at(n) == ComponentLabel::bad;
    all_inv = all_inv && m.at(n) == ComponentLabel::invisible;
  }
  if (any_bad) return ComponentLabel::bad;
  if (all_inv) return ComponentLabel::invisible;
  return ComponentLabel::good;
}

// The annotated example: hand bad, foot and leg invisible, everything else
// good.
ComponentMap example_components() {
  ComponentMap m;
  for (const char* c : kComponents) m[c] = ComponentLabel::good;
  m["hand"] = ComponentLabel::bad;
  m["foot"] = ComponentLabel::invisible;
  m["leg"] = ComponentLabel::invisible;
  return m;
}

}  // namespace

TEST_CASE("merge_coarse on the annotated example") {
  const CoarseLabels c = merge_coarse(example_components());
  CHECK(c.face == ComponentLabel::good);
  CHECK(c.body == ComponentLabel::bad);
  CHECK(c.whole == ComponentLabel::bad);
}

TEST_CASE("merge_coarse trivial cases") {
  ComponentMap all_inv, all_good;
  for (const char* c : kComponents) {
    all_inv[c] = ComponentLabel::invisible;
    all_good[c] = ComponentLabel::good;
  }
  const CoarseLabels inv = merge_coarse(all_inv);
  CHECK(inv.face == ComponentLabel::invisible);
  CHECK(inv.body == ComponentLabel::invisible);
  CHECK(inv.whole == ComponentLabel::invisible);
  const CoarseLabels good = merge_coarse(all_good);
  CHECK(good.face == ComponentLabel::good);
  CHECK(good.body == ComponentLabel::good);
  CHECK(good.whole == ComponentLabel::good);
}

TEST_CASE("merge_coarse rejects missing and unknown keys") {
  ComponentMap m = example_components();
  m.erase("trunk");
  CHECK_THROWS_WITH_AS(merge_coarse(m), doctest::Contains("trunk"), Error);
  m["trunk"] = ComponentLabel::good;
  m["tail"] = ComponentLabel::good;
  CHECK_THROWS_WITH_AS(merge_coarse(m), doctest::Contains("tail"), Error);
}

TEST_CASE("merge_coarse equals brute-force oracle on all 3^10 assignments") {
  const std::vector<std::string> face(kFaceGroup.begin(), kFaceGroup.end());
  const std::vector<std::string> body(kBodyGroup.begin(), kBodyGroup.end());
  const std::vector<std::string> whole(kComponents.begin(), kComponents.end());
  ComponentMap m;
  for (int code = 0; code < 59049; ++code) {
    int rest = code;
    for (const char* c : kComponents) {
      m[c] = static_cast<ComponentLabel>(rest % 3);
      rest /= 3;
    }
    const CoarseLabels got = merge_coarse(m);
    REQUIRE(got.face == oracle_group(m, face));
    REQUIRE(got.body == oracle_group(m, body));
    REQUIRE(got.whole == oracle_group(m, whole));
  }
}

TEST_CASE("merge_coarse monotone under invisible->good upgrades") {
  RngStream rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    ComponentMap m;
    for (const char* c : kComponents) m[c] = static_cast<ComponentLabel>(rng.index(3));
    const CoarseLabels before = merge_coarse(m);
    // Upgrade one invisible component to good.
    for (const char* c : kComponents) {
      if (m[c] == ComponentLabel::invisible) {
        ComponentMap up = m;
        up[c] = ComponentLabel::good;
        const CoarseLabels after = merge_coarse(up);
        if (before.whole == ComponentLabel::good) {
          CHECK(after.whole == ComponentLabel::good);
        }
        break;
      }
    }
  }
}

TEST_CASE("validate_record errors") {
  AnnotationRecord r = make_record("img1");
  r.components.erase("trunk");
  CHECK_THROWS_WITH_AS(validate_record(r), doctest::Contains("missing: trunk"), Error);

  AnnotationRecord real = make_record("img2");
  real.source = Source::real;
  real.prompt.reset();
  real.components["hand"] = ComponentLabel::bad;
  CHECK_THROWS_WITH_AS(validate_record(real), doctest::Contains("real records may not carry bad"),
                       Error);

  AnnotationRecord gen = make_record("img3");
  gen.prompt.reset();
  CHECK_THROWS_AS(validate_record(gen), Error);

  AnnotationRecord boxed = make_record("img4");
  boxed.image_width = 100;
  boxed.image_height = 100;
  boxed.face_box = Box{90, 90, 20, 20};
  CHECK_THROWS_WITH_AS(validate_record(boxed), doctest::Contains("exceeds image bounds"), Error);
}

TEST_CASE("validate_record recomputes coarse labels") {
  AnnotationRecord r = make_record("fig4");
  r.components = example_components();
  r.coarse = {};  // stale
  const AnnotationRecord v = validate_record(r);
  CHECK(v.coarse.face == ComponentLabel::good);
  CHECK(v.coarse.body == ComponentLabel::bad);
  CHECK(v.coarse.whole == ComponentLabel::bad);
}

TEST_CASE("serialization round trip is bit-exact and keeps unknown fields") {
  AnnotationRecord r = make_record("rt1");
  r.components = example_components();
  r.coarse = merge_coarse(r.components);
  r.face_box = Box{4, 4, 10, 12};
  r.body_box = Box{0, 0, 32, 48};
  r.image_width = 64;
  r.image_height = 64;
  r.extras["annotator_note"] = "left hand";

  const nlohmann::json j = record_to_json(r);
  const AnnotationRecord parsed = validate_record(record_from_json(j));
  CHECK(parsed == r);
  CHECK(record_to_json(parsed).dump() == j.dump());
  CHECK(j.at("annotator_note") == "left hand");
}

TEST_CASE("dataset_stats counts and order independence") {
  CHECK(dataset_stats({}).record_count == 0);

  AnnotationRecord fig4 = make_record("a");
  fig4.components = example_components();
  fig4.coarse = merge_coarse(fig4.components);
  AnnotationRecord fig4b = fig4;
  fig4b.image_id = "b";
  const DatasetStats two = dataset_stats({fig4, fig4b});
  CHECK(two.components.at("generated").at("hand").bad == 2);
  CHECK(two.coarse.at("generated").at("whole").bad == 2);

  // 10 records, 3 with a bad component -> whole bad count 3.
  std::vector<AnnotationRecord> records;
  for (int i = 0; i < 10; ++i) {
    AnnotationRecord r = make_record("r" + std::to_string(i));
    if (i < 3) r.components["arm"] = ComponentLabel::bad;
    r.coarse = merge_coarse(r.components);
    records.push_back(r);
  }
  const DatasetStats s = dataset_stats(records);
  CHECK(s.coarse.at("generated").at("whole").bad == 3);
  CHECK(s.coarse.at("generated").at("whole").total() == 10);

  std::reverse(records.begin(), records.end());
  CHECK(stats_to_json(dataset_stats(records)).dump() == stats_to_json(s).dump());
}

TEST_CASE("annotations jsonl round trip") {
  test::TempDir tmp("schema");
  AnnotationRecord r = make_record("file1");
  r.components = example_components();
  r.coarse = merge_coarse(r.components);
  save_annotations(tmp.file("annotations.jsonl"), {r});
  const auto loaded = load_annotations(tmp.file("annotations.jsonl"));
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == r);
}
