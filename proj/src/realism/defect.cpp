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

#include "realism/defect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "util/error.hpp"

namespace evalkit::realism {

img::Image crop_region(const img::Image& image, const schema::Box& box, bool strict,
                       bool* clipped) {
  if (image.empty()) throw Error(ErrorCode::precondition, "crop_region: empty image");
  int x0 = static_cast<int>(std::floor(box.x));
  int y0 = static_cast<int>(std::floor(box.y));
  int x1 = static_cast<int>(std::ceil(box.x + box.w));
  int y1 = static_cast<int>(std::ceil(box.y + box.h));
  const bool exceeds = x0 < 0 || y0 < 0 || x1 > image.w || y1 > image.h;
  if (exceeds && strict) {
    throw Error(ErrorCode::precondition, "crop_region: box exceeds image bounds",
                {{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}});
  }
  if (clipped) *clipped = exceeds;
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(image.w, x1);
  y1 = std::min(image.h, y1);
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::precondition, "crop_region: empty crop after clipping");
  }
  img::Image out(x1 - x0, y1 - y0, image.c);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < image.c; ++c) out.at(x - x0, y - y0, c) = image.at(x, y, c);
    }
  }
  return out;
}

bool is_valid_target(const std::string& target) {
  if (target == "face") return true;
  return std::find_if(schema::kComponents.begin(), schema::kComponents.end(),
                      [&](const char* c) { return target == c; }) != schema::kComponents.end();
}

nlohmann::json DefectModel::Config::to_json() const {
  return {{"target", target},
          {"input_size", input_size},
          {"channels", channels},
          {"patch", patch},
          {"hidden", hidden},
          {"attention_layers", attention_layers},
          {"seed", seed},
          {"steps", steps},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"holdout_fraction", holdout_fraction},
          {"crop_policy", "aspect-preserving pad to square, bilinear resize"},
          {"rng", RngStream::kAlgorithmId}};
}

DefectModel::Config DefectModel::Config::from_json(const nlohmann::json& j) {
  Config c;
  c.target = j.value("target", c.target);
  c.input_size = j.value("input_size", c.input_size);
  c.channels = j.value("channels", c.channels);
  c.patch = j.value("patch", c.patch);
  c.hidden = j.value("hidden", c.hidden);
  c.attention_layers = j.value("attention_layers", c.attention_layers);
  c.seed = j.value("seed", c.seed);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  return c;
}

DefectModel::DefectModel(Config cfg) : cfg_(std::move(cfg)) {
  if (!is_valid_target(cfg_.target)) {
    throw Error(ErrorCode::config, "unknown defect target: " + cfg_.target);
  }
  if (cfg_.input_size % cfg_.patch != 0) {
    throw Error(ErrorCode::config, "defect model: input_size must be a multiple of patch");
  }
  if (cfg_.target == "face") {
    classes_ = {schema::ComponentLabel::good, schema::ComponentLabel::bad};
  } else {
    classes_ = {schema::ComponentLabel::good, schema::ComponentLabel::bad,
                schema::ComponentLabel::invisible};
  }
  const int grid = cfg_.input_size / cfg_.patch;
  tokens_ = grid * grid;
  const int patch_dim = cfg_.patch * cfg_.patch * cfg_.channels;
  RngStream rng(cfg_.seed);
  patch_embed_.init("defect.patch_embed", patch_dim, cfg_.hidden, rng);
  pos_embed_.init("defect.pos_embed", tokens_, cfg_.hidden, 0.02, rng);
  attention_.resize(cfg_.attention_layers);
  for (int i = 0; i < cfg_.attention_layers; ++i) {
    attention_[i].init("defect.attn" + std::to_string(i), cfg_.hidden, tokens_, rng);
  }
  head_.init("defect.head", cfg_.hidden, static_cast<int>(classes_.size()), rng);

  patch_embed_.register_params(params_);
  params_.add(&pos_embed_);
  for (auto& a : attention_) a.register_params(params_);
  head_.register_params(params_);
}

img::Image DefectModel::preprocess(const img::Image& crop) const {
  img::Image in = crop;
  if (cfg_.channels == 3 && in.c == 1) {
    img::Image rgb(in.w, in.h, 3);
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = in.at(x, y, 0);
      }
    }
    in = rgb;
  } else if (cfg_.channels == 1 && in.c == 3) {
    in = img::to_gray(in);
  }
  return img::resize_pad_square(in, cfg_.input_size);
}

nn::Mat DefectModel::forward_batch(const std::vector<const img::Image*>& crops) {
  const int n = static_cast<int>(crops.size());
  n_ = n;
  const int grid = cfg_.input_size / cfg_.patch;
  const int patch_dim = cfg_.patch * cfg_.patch * cfg_.channels;
  nn::Mat patches(n * tokens_, patch_dim);
  for (int i = 0; i < n; ++i) {
    const img::Image& im = *crops[i];
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        const int token = gy * grid + gx;
        int col = 0;
        for (int py = 0; py < cfg_.patch; ++py) {
          for (int px = 0; px < cfg_.patch; ++px) {
            for (int c = 0; c < cfg_.channels; ++c) {
              patches(i * tokens_ + token, col++) =
                  im.at(gx * cfg_.patch + px, gy * cfg_.patch + py, c);
            }
          }
        }
      }
    }
  }
  nn::Mat tokens = patch_embed_.forward(patches);
  for (int i = 0; i < n; ++i) tokens.middleRows(i * tokens_, tokens_) += pos_embed_.value;
  for (auto& a : attention_) tokens = a.forward(tokens);
  nn::Mat pooled(n, cfg_.hidden);
  for (int i = 0; i < n; ++i) {
    pooled.row(i) = tokens.middleRows(i * tokens_, tokens_).colwise().mean();
  }
  return head_.forward(pooled);
}

nn::Mat DefectModel::logits_backward(const nn::Mat& dlogits) {
  nn::Mat d = head_.backward(dlogits);
  nn::Mat dtokens(n_ * tokens_, cfg_.hidden);
  for (int i = 0; i < n_; ++i) {
    for (int t = 0; t < tokens_; ++t) dtokens.row(i * tokens_ + t) = d.row(i) / tokens_;
  }
  for (auto it = attention_.rbegin(); it != attention_.rend(); ++it) {
    dtokens = it->backward(dtokens);
  }
  for (int i = 0; i < n_; ++i) pos_embed_.grad += dtokens.middleRows(i * tokens_, tokens_);
  return patch_embed_.backward(dtokens);
}

schema::ComponentLabel DefectModel::classify_crop(const img::Image& crop) {
  const img::Image prepped = preprocess(crop);
  const nn::Mat logits = forward_batch({&prepped});
  Eigen::Index best;
  logits.row(0).maxCoeff(&best);
  return classes_[static_cast<std::size_t>(best)];
}

nlohmann::json DefectModel::to_checkpoint() const {
  nlohmann::json params = nlohmann::json::object();
  for (const nn::Param* p : params_.all()) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    params[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", data}};
  }
  return {{"format", "evalkit-defect-checkpoint"},
          {"version", 1},
          {"config", cfg_.to_json()},
          {"params", params}};
}

DefectModel DefectModel::from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != "evalkit-defect-checkpoint") {
    throw Error(ErrorCode::io, "not a defect checkpoint");
  }
  DefectModel model(Config::from_json(j.at("config")));
  const auto& params = j.at("params");
  for (nn::Param* p : model.params_.all()) {
    if (!params.contains(p->name)) {
      throw Error(ErrorCode::io, "checkpoint missing parameter: " + p->name);
    }
    const auto& pj = params.at(p->name);
    const auto data = pj.at("data").get<std::vector<double>>();
    if (static_cast<long>(data.size()) != p->value.size()) {
      throw Error(ErrorCode::io, "checkpoint shape mismatch for " + p->name);
    }
    std::copy(data.begin(), data.end(), p->value.data());
  }
  return model;
}

namespace {

const schema::Box& required_box(const LabeledImage& input, const std::string& target) {
  const auto& box = target == "face" ? input.record.face_box : input.record.body_box;
  if (!box) {
    throw Error(ErrorCode::precondition,
                "record " + input.record.image_id + " is missing the required " +
                    (target == "face" ? "face_box" : "body_box"),
                {{"image_id", input.record.image_id}});
  }
  return *box;
}

schema::ComponentLabel target_label(const schema::AnnotationRecord& r, const std::string& target) {
  if (target == "face") return r.coarse.face;
  auto it = r.components.find(target);
  if (it == r.components.end()) {
    throw Error(ErrorCode::schema, "record missing label for target " + target,
                {{"image_id", r.image_id}});
  }
  return it->second;
}

}  // namespace

TrainedDefectModel train_defect_model(const std::vector<LabeledImage>& dataset,
                                      const std::string& target, const DefectModel::Config& cfg) {
  DefectModel::Config config = cfg;
  config.target = target;
  TrainedDefectModel out{std::make_unique<DefectModel>(config), {}};
  DefectModel& model = *out.model;

  // Collect usable (crop, label) pairs.
  std::vector<img::Image> crops;
  std::vector<int> labels;
  for (const auto& item : dataset) {
    const schema::ComponentLabel label = target_label(item.record, target);
    if (target == "face" && item.record.coarse.face == schema::ComponentLabel::invisible) {
      continue;  // invisible faces are excluded from the face task
    }
    const schema::Box& box = required_box(item, target);
    const img::Image crop = crop_region(item.image, box);
    const auto& classes = model.classes();
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) {
      throw Error(ErrorCode::schema,
                  std::string("label not in the model's class set: ") + schema::label_name(label));
    }
    crops.push_back(model.preprocess(crop));
    labels.push_back(static_cast<int>(it - classes.begin()));
  }
  if (crops.empty()) {
    throw Error(ErrorCode::config, "train_defect_model: no usable records for target " + target);
  }

  RngStream rng(config.seed ^ 0xdefec7u);
  std::vector<std::size_t> indices(crops.size());
  std::iota(indices.begin(), indices.end(), 0);
  rng.shuffle(indices);
  const std::size_t holdout =
      std::min(crops.size() - 1,
               static_cast<std::size_t>(std::llround(config.holdout_fraction * crops.size())));
  std::vector<std::size_t> hold_idx(indices.begin(), indices.begin() + holdout);
  std::vector<std::size_t> train_idx(indices.begin() + holdout, indices.end());

  std::set<int> train_classes;
  for (std::size_t i : train_idx) train_classes.insert(labels[i]);
  for (std::size_t k = 0; k < model.classes().size(); ++k) {
    if (!train_classes.count(static_cast<int>(k))) {
      throw Error(ErrorCode::config,
                  std::string("stratification error: class absent from training data: ") +
                      schema::label_name(model.classes()[k]),
                  {{"target", target}});
    }
  }

  nn::Adam opt(config.learning_rate);
  const int bs = static_cast<int>(std::min<std::size_t>(config.batch_size, train_idx.size()));
  for (int step = 0; step < config.steps; ++step) {
    std::vector<const img::Image*> batch;
    std::vector<int> batch_labels;
    for (int b = 0; b < bs; ++b) {
      const std::size_t idx = train_idx[rng.index(train_idx.size())];
      batch.push_back(&crops[idx]);
      batch_labels.push_back(labels[idx]);
    }
    model.params().zero_grad();
    const nn::Mat logits = model.forward_batch(batch);
    model.head_loss().forward(logits, batch_labels);
    model.logits_backward(model.head_loss().backward(1.0 / bs));
    opt.step(model.params());
  }

  // Held-out per-class accuracy.
  const auto& eval_idx = hold_idx.empty() ? train_idx : hold_idx;
  std::map<std::string, std::size_t> correct_per_class;
  for (std::size_t idx : eval_idx) {
    const nn::Mat logits = model.forward_batch({&crops[idx]});
    Eigen::Index best;
    logits.row(0).maxCoeff(&best);
    const std::string cls = schema::label_name(model.classes()[labels[idx]]);
    out.report.per_class_count[cls]++;
    if (static_cast<int>(best) == labels[idx]) correct_per_class[cls]++;
  }
  std::size_t correct = 0;
  for (const auto& [cls, count] : out.report.per_class_count) {
    out.report.per_class_accuracy[cls] =
        static_cast<double>(correct_per_class[cls]) / static_cast<double>(count);
    correct += correct_per_class[cls];
  }
  out.report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(eval_idx.size());
  out.report.train_size = train_idx.size();
  out.report.holdout_size = hold_idx.size();
  return out;
}

schema::ComponentLabel classify(DefectModel& model, const LabeledImage& input) {
  const schema::Box& box = required_box(input, model.config().target);
  return model.classify_crop(crop_region(input.image, box));
}

double defect_rate(const std::vector<schema::ComponentLabel>& predictions, RateDenominator denom) {
  std::size_t bad = 0, good = 0, invisible = 0;
  for (auto l : predictions) {
    switch (l) {
      case schema::ComponentLabel::bad: ++bad; break;
      case schema::ComponentLabel::good: ++good; break;
      case schema::ComponentLabel::invisible: ++invisible; break;
    }
  }
  if (denom == RateDenominator::visible) {
    if (bad + good == 0) {
      throw Error(ErrorCode::metric, "defect_rate undefined: no visible predictions");
    }
    return static_cast<double>(bad) / static_cast<double>(bad + good);
  }
  if (predictions.empty()) {
    throw Error(ErrorCode::metric, "defect_rate undefined: no predictions");
  }
  return static_cast<double>(bad) / static_cast<double>(predictions.size());
}

int defect_rate_percent(const std::vector<schema::ComponentLabel>& predictions,
                        RateDenominator denom) {
  return static_cast<int>(std::lround(100.0 * defect_rate(predictions, denom)));
}

}  // namespace evalkit::realism
