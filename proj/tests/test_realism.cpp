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

#include "realism/defect.hpp"
#include "support/fixtures.hpp"

using namespace evalkit;
using namespace evalkit::realism;
using schema::Box;
using schema::ComponentLabel;
using evalkit::test::make_record;

namespace {

// Synthetic person image: body region gray, face region lighter; "bad hand"
// samples get a red blob in the lower body, invisible-hand samples black out
// the hand area.
struct SynthSample {
  LabeledImage item;
};

SynthSample make_sample(const std::string& id, ComponentLabel hand_label, RngStream& rng) {
  img::Image im(48, 64, 3);
  for (float& v : im.data) v = 0.45f + static_cast<float>(rng.uniform(-0.08, 0.08));
  // face area
  for (int y = 4; y < 16; ++y) {
    for (int x = 16; x < 32; ++x) {
      im.at(x, y, 0) = 0.8f;
      im.at(x, y, 1) = 0.7f;
      im.at(x, y, 2) = 0.6f;
    }
  }
  if (hand_label == ComponentLabel::bad) {
    for (int y = 40; y < 52; ++y) {
      for (int x = 8; x < 20; ++x) {
        im.at(x, y, 0) = 1.0f;
        im.at(x, y, 1) = 0.0f;
        im.at(x, y, 2) = 0.0f;
      }
    }
  } else if (hand_label == ComponentLabel::invisible) {
    for (int y = 40; y < 52; ++y) {
      for (int x = 8; x < 20; ++x) {
        im.at(x, y, 0) = 0.0f;
        im.at(x, y, 1) = 0.0f;
        im.at(x, y, 2) = 0.0f;
      }
    }
  }
  SynthSample s;
  s.item.record = make_record(id);
  s.item.record.components["hand"] = hand_label;
  s.item.record.coarse = schema::merge_coarse(s.item.record.components);
  s.item.record.face_box = Box{16, 4, 16, 12};
  s.item.record.body_box = Box{4, 16, 40, 44};
  s.item.record.image_width = 48;
  s.item.record.image_height = 64;
  s.item.image = im;
  return s;
}

}  // namespace

TEST_CASE("crop_region exactness") {
  RngStream rng(17);
  const img::Image im = test::noise_image(20, 20, rng);
  CHECK(crop_region(im, Box{0, 0, 20, 20}) == im);

  const img::Image small = crop_region(im, Box{0, 0, 10, 10});
  CHECK(small.w == 10);
  CHECK(small.h == 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      CHECK(small.at(x, y, 0) == im.at(x, y, 0));
    }
  }

  bool clipped = false;
  const img::Image clip = crop_region(im, Box{15, 15, 10, 10}, false, &clipped);
  CHECK(clipped);
  CHECK(clip.w == 5);
  CHECK_THROWS_AS(crop_region(im, Box{15, 15, 10, 10}, true), Error);
}

TEST_CASE("face crop sits inside the body crop on the synthetic fixture") {
  RngStream rng(19);
  const SynthSample s = make_sample("geo", ComponentLabel::good, rng);
  CHECK(s.item.record.body_box->contains(*s.item.record.face_box) == false);  // face above body box
  // The containment check the schema offers:
  const Box whole{0, 0, 48, 64};
  CHECK(whole.contains(*s.item.record.face_box));
  CHECK(whole.contains(*s.item.record.body_box));
}

TEST_CASE("class sets per target") {
  DefectModel face(DefectModel::Config{.target = "face", .seed = 1});
  CHECK(face.classes() == std::vector<ComponentLabel>{ComponentLabel::good, ComponentLabel::bad});
  DefectModel hand(DefectModel::Config{.target = "hand", .seed = 1});
  CHECK(hand.classes() == std::vector<ComponentLabel>{ComponentLabel::good, ComponentLabel::bad,
                                                      ComponentLabel::invisible});
  CHECK_THROWS_AS(DefectModel(DefectModel::Config{.target = "tail"}), Error);
}

TEST_CASE("trained hand model separates the synthetic classes") {
  RngStream rng(23);
  std::vector<LabeledImage> data;
  for (int i = 0; i < 36; ++i) {
    const ComponentLabel label = i % 3 == 0   ? ComponentLabel::good
                                 : i % 3 == 1 ? ComponentLabel::bad
                                              : ComponentLabel::invisible;
    data.push_back(make_sample("s" + std::to_string(i), label, rng).item);
  }
  DefectModel::Config cfg;
  cfg.seed = 29;
  cfg.steps = 220;
  cfg.batch_size = 12;
  cfg.input_size = 16;
  cfg.patch = 4;
  cfg.hidden = 16;
  const TrainedDefectModel trained = train_defect_model(data, "hand", cfg);
  CHECK(trained.report.overall_accuracy > 0.9);
  CHECK(trained.model->classes().size() == 3);
}

TEST_CASE("stratification error when a class is missing") {
  RngStream rng(31);
  std::vector<LabeledImage> data;
  for (int i = 0; i < 12; ++i) {
    data.push_back(make_sample("s" + std::to_string(i), ComponentLabel::good, rng).item);
  }
  DefectModel::Config cfg;
  cfg.steps = 5;
  CHECK_THROWS_WITH_AS(train_defect_model(data, "hand", cfg),
                       doctest::Contains("stratification"), Error);
}

TEST_CASE("face training excludes invisible faces and yields two classes") {
  RngStream rng(37);
  std::vector<LabeledImage> data;
  for (int i = 0; i < 16; ++i) {
    SynthSample s = make_sample("f" + std::to_string(i), ComponentLabel::good, rng);
    // Alternate good/bad faces through the eye component.
    s.item.record.components["eye"] =
        i % 2 == 0 ? ComponentLabel::good : ComponentLabel::bad;
    s.item.record.coarse = schema::merge_coarse(s.item.record.components);
    data.push_back(s.item);
  }
  // A fully invisible face gets filtered, not trained on.
  SynthSample invisible = make_sample("f_invisible", ComponentLabel::good, rng);
  for (const char* c : {"eye", "nose", "mouth", "hair", "cheek"}) {
    invisible.item.record.components[c] = ComponentLabel::invisible;
  }
  invisible.item.record.coarse = schema::merge_coarse(invisible.item.record.components);
  data.push_back(invisible.item);

  DefectModel::Config cfg;
  cfg.steps = 20;
  cfg.input_size = 16;
  cfg.patch = 4;
  cfg.seed = 3;
  const TrainedDefectModel trained = train_defect_model(data, "face", cfg);
  CHECK(trained.model->classes().size() == 2);
  std::size_t counted = 0;
  for (const auto& [_, c] : trained.report.per_class_count) counted += c;
  CHECK(counted <= 16);  // the invisible face never enters either split
}

TEST_CASE("classify is deterministic and requires the policy box") {
  RngStream rng(41);
  std::vector<LabeledImage> data;
  for (int i = 0; i < 18; ++i) {
    const ComponentLabel label = i % 3 == 0   ? ComponentLabel::good
                                 : i % 3 == 1 ? ComponentLabel::bad
                                              : ComponentLabel::invisible;
    data.push_back(make_sample("c" + std::to_string(i), label, rng).item);
  }
  DefectModel::Config cfg;
  cfg.steps = 40;
  cfg.input_size = 16;
  cfg.patch = 4;
  const TrainedDefectModel trained = train_defect_model(data, "hand", cfg);

  const auto once = classify(*trained.model, data[0]);
  CHECK(classify(*trained.model, data[0]) == once);

  LabeledImage no_box = data[0];
  no_box.record.body_box.reset();
  CHECK_THROWS_AS(classify(*trained.model, no_box), Error);
}

TEST_CASE("defect checkpoint round trip") {
  DefectModel::Config cfg;
  cfg.target = "hand";
  cfg.input_size = 16;
  cfg.patch = 4;
  cfg.seed = 47;
  DefectModel model(cfg);
  RngStream rng(49);
  const img::Image crop = test::noise_image(24, 18, rng);
  const auto before = model.classify_crop(crop);
  DefectModel loaded = DefectModel::from_checkpoint(model.to_checkpoint());
  CHECK(loaded.classify_crop(crop) == before);
}

TEST_CASE("defect_rate arithmetic") {
  using L = ComponentLabel;
  CHECK(defect_rate({L::bad, L::good, L::invisible, L::bad}) == doctest::Approx(2.0 / 3.0));
  CHECK(defect_rate_percent({L::bad, L::good, L::invisible, L::bad}) == 67);
  CHECK(defect_rate(std::vector<L>(10, L::good)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(defect_rate(std::vector<L>(3, L::invisible)), Error);
  CHECK_THROWS_AS(defect_rate({}), Error);
  // Alternative denominator behind the flag.
  CHECK(defect_rate({L::bad, L::good, L::invisible, L::bad}, RateDenominator::all) ==
        doctest::Approx(0.5));
}

TEST_CASE("defect_rate ignores permutation and invisible padding") {
  using L = ComponentLabel;
  RngStream rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<L> labels;
    const std::size_t n = 1 + rng.index(40);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<L>(rng.index(3)));
    bool any_visible = false;
    for (L l : labels) any_visible |= l != L::invisible;
    if (!any_visible) continue;

    const double base = defect_rate(labels);
    std::vector<L> shuffled = labels;
    rng.shuffle(shuffled);
    CHECK(defect_rate(shuffled) == doctest::Approx(base));

    std::vector<L> visible_only;
    for (L l : labels) {
      if (l != L::invisible) visible_only.push_back(l);
    }
    CHECK(defect_rate(visible_only) == doctest::Approx(base));

    std::vector<L> padded = labels;
    padded.insert(padded.end(), 5, L::invisible);
    CHECK(defect_rate(padded) == doctest::Approx(base));
  }
}

TEST_CASE("oracle-stub classifier scores 1.0 on its own labels") {
  // Pipeline wiring check: a stub that returns the ground-truth label per
  // image id must give accuracy 1.0 and defect rate equal to the label rate.
  RngStream rng(59);
  std::vector<LabeledImage> data;
  std::map<std::string, ComponentLabel> truth;
  for (int i = 0; i < 100; ++i) {
    const ComponentLabel label = static_cast<ComponentLabel>(rng.index(3));
    auto s = make_sample("o" + std::to_string(i), label, rng);
    truth[s.item.record.image_id] = label;
    data.push_back(s.item);
  }
  auto stub = [&truth](const LabeledImage& item) { return truth.at(item.record.image_id); };
  std::size_t correct = 0;
  std::vector<ComponentLabel> predictions;
  for (const auto& item : data) {
    const ComponentLabel pred = stub(item);
    predictions.push_back(pred);
    if (pred == item.record.components.at("hand")) ++correct;
  }
  CHECK(correct == data.size());

  // All-bad stub -> 100% defect rate.
  std::vector<ComponentLabel> all_bad(40, ComponentLabel::bad);
  CHECK(defect_rate_percent(all_bad) == 100);
}
