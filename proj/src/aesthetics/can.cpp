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

#include "aesthetics/can.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metrics/rank.hpp"
#include "util/error.hpp"
#include "util/jsonl.hpp"

namespace evalkit::aes {

namespace {

// Image (HWC float) -> feature-map matrix (c x h*w).
nn::Mat image_to_mat(const img::Image& image) {
  nn::Mat m(image.c, static_cast<long>(image.h) * image.w);
  for (int y = 0; y < image.h; ++y) {
    for (int x = 0; x < image.w; ++x) {
      for (int c = 0; c < image.c; ++c) {
        m(c, y * image.w + x) = static_cast<double>(image.at(x, y, c));
      }
    }
  }
  return m;
}

}  // namespace

void CanConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0) {
    throw Error(ErrorCode::config, "can: image_size must be >= 8 and divisible by 4");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::config, "can: channels must be 1 or 3");
  }
  if (no_style_module && no_generic_module) {
    throw Error(ErrorCode::config, "can: cannot ablate both the style and generic modules");
  }
  if (!no_distortion_task && !no_generic_module && distortions.empty()) {
    throw Error(ErrorCode::config, "can: distortion task enabled but no distortions configured");
  }
  if (batch_size < 1 || steps < 0) throw Error(ErrorCode::config, "can: bad training settings");
}

nlohmann::json CanConfig::to_json() const {
  std::vector<std::string> dist;
  for (auto k : distortions) dist.push_back(distortion_name(k));
  return {{"image_size", image_size},
          {"channels", channels},
          {"style_dim", style_dim},
          {"generic_dim", generic_dim},
          {"hidden_dim", hidden_dim},
          {"attention_layers", attention_layers},
          {"conv1_channels", conv1_channels},
          {"conv2_channels", conv2_channels},
          {"distortion_hidden", distortion_hidden},
          {"distortions", dist},
          {"no_distortion_task", no_distortion_task},
          {"no_generic_module", no_generic_module},
          {"no_style_module", no_style_module},
          {"seed", seed},
          {"steps", steps},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"val_fraction", val_fraction},
          {"input_policy", "center-resize to image_size (aspect ignored at toy scale)"},
          {"rng", RngStream::kAlgorithmId},
          {"style_encoder", StyleEncoder::kId}};
}

CanConfig CanConfig::from_json(const nlohmann::json& j) {
  CanConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.style_dim = j.value("style_dim", c.style_dim);
  c.generic_dim = j.value("generic_dim", c.generic_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.attention_layers = j.value("attention_layers", c.attention_layers);
  c.conv1_channels = j.value("conv1_channels", c.conv1_channels);
  c.conv2_channels = j.value("conv2_channels", c.conv2_channels);
  c.distortion_hidden = j.value("distortion_hidden", c.distortion_hidden);
  if (j.contains("distortions")) {
    c.distortions.clear();
    for (const auto& name : j.at("distortions")) {
      c.distortions.push_back(distortion_from_string(name.get<std::string>()));
    }
  }
  c.no_distortion_task = j.value("no_distortion_task", false);
  c.no_generic_module = j.value("no_generic_module", false);
  c.no_style_module = j.value("no_style_module", false);
  c.seed = j.value("seed", c.seed);
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  return c;
}

StyleEncoder::StyleEncoder(int out_dim) : out_dim_(out_dim) {
  // Fixed weights: same seed forever, so the "pretrained" tower is frozen by
  // construction.
  RngStream rng(0x5717e5u);
  projection_.resize(out_dim_, 23);
  for (int i = 0; i < projection_.rows(); ++i) {
    for (int j = 0; j < projection_.cols(); ++j) {
      projection_(i, j) = rng.normal(0.0, 1.0 / std::sqrt(23.0));
    }
  }
}

nn::Vec StyleEncoder::encode(const img::Image& image) const {
  if (image.empty()) throw Error(ErrorCode::precondition, "style encoder: empty image");
  nn::Vec desc = nn::Vec::Zero(23);
  // Per-channel mean and standard deviation.
  for (int c = 0; c < 3; ++c) {
    const int src = image.c == 3 ? c : 0;
    double sum = 0, sum2 = 0;
    const std::size_t n = static_cast<std::size_t>(image.w) * image.h;
    for (int y = 0; y < image.h; ++y) {
      for (int x = 0; x < image.w; ++x) {
        const double v = image.at(x, y, src);
        sum += v;
        sum2 += v * v;
      }
    }
    const double mean = sum / n;
    desc(c) = mean;
    desc(3 + c) = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
  }
  // 4x4 gray thumbnail.
  const img::Image thumb = img::resize_bilinear(img::to_gray(image), 4, 4);
  for (int i = 0; i < 16; ++i) desc(6 + i) = thumb.data[i];
  // Edge density: mean absolute horizontal+vertical gradient.
  const img::Image gray = img::to_gray(image);
  double grad = 0;
  std::size_t cnt = 0;
  for (int y = 0; y + 1 < gray.h; ++y) {
    for (int x = 0; x + 1 < gray.w; ++x) {
      grad += std::abs(gray.at(x + 1, y, 0) - gray.at(x, y, 0)) +
              std::abs(gray.at(x, y + 1, 0) - gray.at(x, y, 0));
      ++cnt;
    }
  }
  desc(22) = cnt ? grad / cnt : 0.0;
  return (projection_ * desc).array().tanh();
}

void GenericEncoder::init(const CanConfig& cfg, RngStream& rng) {
  size_ = cfg.image_size;
  channels_ = cfg.channels;
  conv1.init("generic.conv1", cfg.channels, cfg.conv1_channels, rng);
  conv2.init("generic.conv2", cfg.conv1_channels, cfg.conv2_channels, rng);
  project.init("generic.project", cfg.conv2_channels, cfg.generic_dim, rng);
}

void GenericEncoder::register_params(nn::ParamRegistry& reg) {
  conv1.register_params(reg);
  conv2.register_params(reg);
  project.register_params(reg);
}

nn::Mat GenericEncoder::forward(const std::vector<const img::Image*>& images) {
  const int n = static_cast<int>(images.size());
  const int s = size_, s2 = s / 2, s4 = s / 4;
  cache_.assign(n, {});
  nn::Mat pooled(n, conv2.out_c);
  for (int i = 0; i < n; ++i) {
    const nn::Mat x0 = image_to_mat(*images[i]);
    SampleCache& c = cache_[i];
    nn::Mat z1 = conv1.forward(x0, s, s, c.col1);
    c.mask1 = (z1.array() > 0.0).cast<double>();
    const nn::Mat p1 = nn::avg_pool2(z1.cwiseProduct(c.mask1), s, s);
    nn::Mat z2 = conv2.forward(p1, s2, s2, c.col2);
    c.mask2 = (z2.array() > 0.0).cast<double>();
    const nn::Mat p2 = nn::avg_pool2(z2.cwiseProduct(c.mask2), s2, s2);
    pooled.row(i) = nn::global_avg_pool(p2).transpose();
    (void)s4;
  }
  return project_relu_.forward(project.forward(pooled));
}

void GenericEncoder::backward(const nn::Mat& dfeat) {
  const int s = size_, s2 = s / 2, s4 = s / 4;
  const nn::Mat dpooled = project.backward(project_relu_.backward(dfeat));
  for (int i = 0; i < dpooled.rows(); ++i) {
    SampleCache& c = cache_[i];
    const nn::Mat dp2 = nn::global_avg_pool_backward(dpooled.row(i).transpose(), s4 * s4);
    const nn::Mat dz2 = nn::avg_pool2_backward(dp2, s2, s2).cwiseProduct(c.mask2);
    const nn::Mat dp1 = conv2.backward(dz2, c.col2, s2, s2);
    const nn::Mat dz1 = nn::avg_pool2_backward(dp1, s, s).cwiseProduct(c.mask1);
    conv1.backward(dz1, c.col1, s, s);  // input gradient unused
  }
}

void FusionHead::init(const CanConfig& cfg, RngStream& rng) {
  use_style_ = !cfg.no_style_module;
  use_generic_ = !cfg.no_generic_module;
  tokens_ = (use_style_ ? 1 : 0) + (use_generic_ ? 1 : 0);
  hidden_ = cfg.hidden_dim;
  if (use_style_) style_proj.init("fusion.style_proj", cfg.style_dim, cfg.hidden_dim, rng);
  if (use_generic_) generic_proj.init("fusion.generic_proj", cfg.generic_dim, cfg.hidden_dim, rng);
  attention.resize(cfg.attention_layers);
  for (int i = 0; i < cfg.attention_layers; ++i) {
    attention[i].init("fusion.attn" + std::to_string(i), cfg.hidden_dim, tokens_, rng);
  }
  fc1.init("fusion.fc1", cfg.hidden_dim, cfg.hidden_dim, rng);
  fc2.init("fusion.fc2", cfg.hidden_dim, cfg.hidden_dim, rng);
  fc3.init("fusion.fc3", cfg.hidden_dim, kOutputCount, rng);
}

void FusionHead::register_params(nn::ParamRegistry& reg) {
  if (use_style_) style_proj.register_params(reg);
  if (use_generic_) generic_proj.register_params(reg);
  for (auto& a : attention) a.register_params(reg);
  register_fc_params(reg);
}

void FusionHead::register_fc_params(nn::ParamRegistry& reg) {
  fc1.register_params(reg);
  fc2.register_params(reg);
  fc3.register_params(reg);
}

nn::Mat FusionHead::forward(const nn::Mat* style, const nn::Mat* generic) {
  if (use_style_ && (style == nullptr)) {
    throw Error(ErrorCode::precondition, "fusion: style features required");
  }
  if (use_generic_ && (generic == nullptr)) {
    throw Error(ErrorCode::precondition, "fusion: generic features required");
  }
  n_ = static_cast<int>(use_generic_ ? generic->rows() : style->rows());
  nn::Mat tokens(n_ * tokens_, hidden_);
  int slot = 0;
  nn::Mat sp, gp;
  if (use_style_) {
    sp = style_proj.forward(*style);
    for (int i = 0; i < n_; ++i) tokens.row(i * tokens_ + slot) = sp.row(i);
    ++slot;
  }
  if (use_generic_) {
    gp = generic_proj.forward(*generic);
    for (int i = 0; i < n_; ++i) tokens.row(i * tokens_ + slot) = gp.row(i);
  }
  nn::Mat h = tokens;
  for (auto& a : attention) h = a.forward(h);
  // Mean over each sample's tokens.
  nn::Mat pooled(n_, hidden_);
  for (int i = 0; i < n_; ++i) {
    pooled.row(i) = h.middleRows(i * tokens_, tokens_).colwise().mean();
  }
  nn::Mat y = r1_.forward(fc1.forward(pooled));
  y = r2_.forward(fc2.forward(y));
  return fc3.forward(y);
}

std::pair<nn::Mat, nn::Mat> FusionHead::backward(const nn::Mat& dout) {
  nn::Mat d = fc3.backward(dout);
  d = fc2.backward(r2_.backward(d));
  d = fc1.backward(r1_.backward(d));
  nn::Mat dtokens(n_ * tokens_, hidden_);
  for (int i = 0; i < n_; ++i) {
    for (int t = 0; t < tokens_; ++t) {
      dtokens.row(i * tokens_ + t) = d.row(i) / tokens_;
    }
  }
  for (auto it = attention.rbegin(); it != attention.rend(); ++it) {
    dtokens = it->backward(dtokens);
  }
  nn::Mat dstyle, dgeneric;
  int slot = 0;
  if (use_style_) {
    nn::Mat dsp(n_, hidden_);
    for (int i = 0; i < n_; ++i) dsp.row(i) = dtokens.row(i * tokens_ + slot);
    dstyle = style_proj.backward(dsp);
    ++slot;
  }
  if (use_generic_) {
    nn::Mat dgp(n_, hidden_);
    for (int i = 0; i < n_; ++i) dgp.row(i) = dtokens.row(i * tokens_ + slot);
    dgeneric = generic_proj.backward(dgp);
  }
  return {dstyle, dgeneric};
}

void DistortionHead::init(const CanConfig& cfg, RngStream& rng) {
  fc1.init("dist.fc1", 2 * cfg.generic_dim, cfg.distortion_hidden, rng);
  fc2.init("dist.fc2", cfg.distortion_hidden, static_cast<int>(cfg.distortions.size()), rng);
}

void DistortionHead::register_params(nn::ParamRegistry& reg) {
  fc1.register_params(reg);
  fc2.register_params(reg);
}

nn::Vec DistortionHead::loss(const nn::Mat& feat_pairs, const std::vector<int>& labels) {
  const nn::Mat logits = fc2.forward(relu_.forward(fc1.forward(feat_pairs)));
  return ce_.forward(logits, labels);
}

nn::Mat DistortionHead::backward(double scale) {
  nn::Mat d = ce_.backward(scale);
  d = fc2.backward(d);
  return fc1.backward(relu_.backward(d));
}

CanModel::CanModel(CanConfig cfg) : cfg_(std::move(cfg)), style_(cfg_.style_dim) {
  if (cfg_.distortions.empty()) {
    for (int i = 0; i < kDistortionCount; ++i) {
      cfg_.distortions.push_back(static_cast<DistortionKind>(i));
    }
  }
  cfg_.validate();
  RngStream rng(cfg_.seed);
  if (!cfg_.no_generic_module) generic_.init(cfg_, rng);
  fusion_.init(cfg_, rng);
  const bool distortion_task = !cfg_.no_distortion_task && !cfg_.no_generic_module;
  if (distortion_task) dist_head_.init(cfg_, rng);

  if (!cfg_.no_generic_module) generic_.register_params(params_);
  fusion_.register_params(params_);
  if (distortion_task) dist_head_.register_params(params_);
  fusion_.register_fc_params(fc_params_);
}

img::Image CanModel::preprocess(const img::Image& image) const {
  if (image.empty()) throw Error(ErrorCode::precondition, "can: cannot decode empty image");
  img::Image in = image;
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
  if (in.w != cfg_.image_size || in.h != cfg_.image_size) {
    in = img::resize_bilinear(in, cfg_.image_size, cfg_.image_size);
  }
  return in;
}

nn::Mat CanModel::style_features(const std::vector<const img::Image*>& images) const {
  nn::Mat feats(static_cast<long>(images.size()), cfg_.style_dim);
  for (std::size_t i = 0; i < images.size(); ++i) {
    feats.row(static_cast<long>(i)) = style_.encode(*images[i]).transpose();
  }
  return feats;
}

nn::Mat CanModel::forward_batch(const std::vector<const img::Image*>& images) {
  std::vector<img::Image> prepped;
  prepped.reserve(images.size());
  std::vector<const img::Image*> ptrs;
  for (const img::Image* im : images) {
    prepped.push_back(preprocess(*im));
  }
  for (const auto& im : prepped) ptrs.push_back(&im);

  nn::Mat style, generic;
  const nn::Mat* style_ptr = nullptr;
  const nn::Mat* generic_ptr = nullptr;
  if (!cfg_.no_style_module) {
    style = style_features(ptrs);
    style_ptr = &style;
  }
  if (!cfg_.no_generic_module) {
    generic = generic_.forward(ptrs);
    generic_ptr = &generic;
  }
  return fusion_.forward(style_ptr, generic_ptr);
}

std::array<double, kOutputCount> CanModel::forward(const img::Image& image) {
  const nn::Mat out = forward_batch({&image});
  std::array<double, kOutputCount> scores{};
  for (int i = 0; i < kOutputCount; ++i) {
    scores[i] = out(0, i);
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::internal, "can: non-finite score");
    }
  }
  return scores;
}

LossParts CanModel::training_loss(const img::Image& x, const img::Image& x_distorted,
                                  DistortionKind d, double score) {
  LossParts parts;
  const nn::Mat out = forward_batch({&x});
  const double diff = out(0, 0) - score;
  parts.reg = diff * diff;

  const bool distortion_task = !cfg_.no_distortion_task && !cfg_.no_generic_module;
  if (distortion_task) {
    auto it = std::find(cfg_.distortions.begin(), cfg_.distortions.end(), d);
    if (it == cfg_.distortions.end()) {
      throw Error(ErrorCode::precondition,
                  std::string("distortion not in the configured set: ") + distortion_name(d));
    }
    const int label = static_cast<int>(it - cfg_.distortions.begin());
    const img::Image px = preprocess(x);
    const img::Image pd = preprocess(x_distorted);
    const nn::Mat feats = generic_.forward({&px, &pd});
    nn::Mat pair(1, 2 * cfg_.generic_dim);
    pair << feats.row(0), feats.row(1);
    parts.cls = dist_head_.loss(pair, {label})(0);
  }
  parts.total = parts.reg + parts.cls;
  return parts;
}

nlohmann::json CanModel::to_checkpoint() const {
  nlohmann::json params = nlohmann::json::object();
  for (const nn::Param* p : params_.all()) {
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    params[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", data}};
  }
  return {{"format", "evalkit-can-checkpoint"},
          {"version", 1},
          {"config", cfg_.to_json()},
          {"params", params}};
}

CanModel CanModel::from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", "") != "evalkit-can-checkpoint") {
    throw Error(ErrorCode::io, "not a CAN checkpoint");
  }
  CanModel model(CanConfig::from_json(j.at("config")));
  const auto& params = j.at("params");
  for (nn::Param* p : model.params_.all()) {
    if (!params.contains(p->name)) {
      throw Error(ErrorCode::io, "checkpoint missing parameter: " + p->name);
    }
    const auto& pj = params.at(p->name);
    const long rows = pj.at("rows").get<long>();
    const long cols = pj.at("cols").get<long>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(ErrorCode::io, "checkpoint shape mismatch for " + p->name);
    }
    const auto data = pj.at("data").get<std::vector<double>>();
    std::copy(data.begin(), data.end(), p->value.data());
  }
  return model;
}

void CanModel::save(const std::string& path) const { write_text_file(path, to_checkpoint().dump()); }

CanModel CanModel::load(const std::string& path) {
  return from_checkpoint(nlohmann::json::parse(read_text_file(path)));
}

namespace {

struct Batch {
  std::vector<const img::Image*> originals;
  std::vector<img::Image> distorted;
  std::vector<int> labels;
  std::vector<double> scores;
};

}  // namespace

TrainResult train_can(const std::vector<TrainImage>& train_set, const CanConfig& cfg) {
  if (train_set.empty()) throw Error(ErrorCode::config, "train_can: empty train set");
  TrainResult result;
  result.model = std::make_unique<CanModel>(cfg);
  CanModel& model = *result.model;
  const CanConfig& c = model.config();
  const bool distortion_task = !c.no_distortion_task && !c.no_generic_module;

  RngStream rng(c.seed ^ 0x7ea1u);
  std::vector<std::size_t> indices(train_set.size());
  std::iota(indices.begin(), indices.end(), 0);
  rng.shuffle(indices);
  const std::size_t val_count =
      std::min(train_set.size() - 1,
               static_cast<std::size_t>(std::llround(c.val_fraction * train_set.size())));
  std::vector<std::size_t> val_idx(indices.begin(), indices.begin() + val_count);
  std::vector<std::size_t> train_idx(indices.begin() + val_count, indices.end());
  if (train_idx.empty()) throw Error(ErrorCode::config, "train_can: no training samples left");

  // Preprocess once.
  std::vector<img::Image> prepped(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) prepped[i] = model.preprocess(train_set[i].image);

  nn::Adam opt(c.learning_rate);
  for (int step = 0; step < c.steps; ++step) {
    Batch batch;
    const int bs = std::min<std::size_t>(c.batch_size, train_idx.size());
    for (int b = 0; b < bs; ++b) {
      const std::size_t idx = train_idx[rng.index(train_idx.size())];
      batch.originals.push_back(&prepped[idx]);
      batch.scores.push_back(train_set[idx].score);
      if (distortion_task) {
        const int label = static_cast<int>(rng.index(c.distortions.size()));
        const DistortionKind kind = c.distortions[label];
        DistortionParams params = sample_params(kind, rng);
        batch.distorted.push_back(
            apply_distortion(prepped[idx], kind, params, rng.next_u64()));
        batch.labels.push_back(label);
      }
    }

    model.params().zero_grad();

    // Generic features for originals and distorted pairs in one pass.
    nn::Mat generic;
    const nn::Mat* generic_ptr = nullptr;
    std::vector<const img::Image*> enc_inputs = batch.originals;
    if (distortion_task) {
      for (const auto& d : batch.distorted) enc_inputs.push_back(&d);
    }
    nn::Mat generic_all;
    if (!c.no_generic_module) {
      generic_all = model.generic().forward(enc_inputs);
      generic = generic_all.topRows(bs);
      generic_ptr = &generic;
    }
    nn::Mat style;
    const nn::Mat* style_ptr = nullptr;
    if (!c.no_style_module) {
      style = model.style_features(batch.originals);
      style_ptr = &style;
    }

    const nn::Mat out = model.fusion().forward(style_ptr, generic_ptr);
    double loss_reg = 0;
    nn::Mat dout = nn::Mat::Zero(bs, kOutputCount);
    for (int i = 0; i < bs; ++i) {
      const double diff = out(i, 0) - batch.scores[i];
      loss_reg += diff * diff;
      dout(i, 0) = 2.0 * diff / bs;
    }
    loss_reg /= bs;

    double loss_cls = 0;
    nn::Mat dgeneric_all;
    if (!c.no_generic_module) dgeneric_all = nn::Mat::Zero(generic_all.rows(), generic_all.cols());

    auto [dstyle, dgen_fusion] = model.fusion().backward(dout);
    if (!c.no_generic_module) dgeneric_all.topRows(bs) += dgen_fusion;

    if (distortion_task) {
      nn::Mat pairs(bs, 2 * c.generic_dim);
      for (int i = 0; i < bs; ++i) {
        pairs.row(i) << generic_all.row(i), generic_all.row(bs + i);
      }
      const nn::Vec cls_losses = model.distortion_head().loss(pairs, batch.labels);
      loss_cls = cls_losses.mean();
      const nn::Mat dpairs = model.distortion_head().backward(1.0 / bs);
      dgeneric_all.topRows(bs) += dpairs.leftCols(c.generic_dim);
      dgeneric_all.bottomRows(bs) += dpairs.rightCols(c.generic_dim);
    }

    if (!c.no_generic_module) model.generic().backward(dgeneric_all);
    opt.step(model.params());

    result.log.push_back({step, loss_reg + loss_cls, loss_reg, loss_cls});
  }
  result.prob_clamp_events = model.distortion_head().clamp_events();

  // Held-out evaluation.
  if (val_idx.size() >= 2) {
    std::vector<const img::Image*> val_images;
    std::vector<double> gt;
    for (std::size_t idx : val_idx) {
      val_images.push_back(&prepped[idx]);
      gt.push_back(train_set[idx].score);
    }
    const nn::Mat out = model.forward_batch(val_images);
    std::vector<double> pred(val_images.size());
    for (std::size_t i = 0; i < val_images.size(); ++i) pred[i] = out(static_cast<long>(i), 0);
    bool gt_constant = std::adjacent_find(gt.begin(), gt.end(), std::not_equal_to<>()) == gt.end();
    bool pred_constant =
        std::adjacent_find(pred.begin(), pred.end(), std::not_equal_to<>()) == pred.end();
    if (!gt_constant && !pred_constant) result.val_srcc = metrics::srcc(pred, gt);
  }
  if (distortion_task && !val_idx.empty()) {
    RngStream eval_rng(c.seed ^ 0xe5a1u);
    std::size_t correct = 0, total = 0;
    for (std::size_t idx : val_idx) {
      for (std::size_t k = 0; k < c.distortions.size(); ++k) {
        const DistortionKind kind = c.distortions[k];
        DistortionParams params = sample_params(kind, eval_rng);
        const img::Image distorted =
            apply_distortion(prepped[idx], kind, params, eval_rng.next_u64());
        const nn::Mat feats = model.generic().forward({&prepped[idx], &distorted});
        nn::Mat pair(1, 2 * c.generic_dim);
        pair << feats.row(0), feats.row(1);
        model.distortion_head().loss(pair, {static_cast<int>(k)});
        if (model.distortion_head().predictions()[0] == static_cast<int>(k)) ++correct;
        ++total;
      }
    }
    if (total > 0) {
      result.distortion_val_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    }
  }
  return result;
}

std::vector<TrainLogRow> finetune_attributes(CanModel& model,
                                             const std::vector<TrainImage>& train_set, int steps,
                                             double learning_rate) {
  if (train_set.empty()) throw Error(ErrorCode::config, "finetune: empty train set");
  std::vector<TrainLogRow> log;
  RngStream rng(model.config().seed ^ 0xa77eu);
  std::vector<img::Image> prepped(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    prepped[i] = model.preprocess(train_set[i].image);
  }
  auto output_index = [](const std::string& name) {
    for (int i = 0; i < kOutputCount; ++i) {
      if (name == kOutputNames[i]) return i;
    }
    throw Error(ErrorCode::config, "unknown aesthetic output: " + name);
  };

  nn::Adam opt(learning_rate);
  const int bs = std::min<std::size_t>(model.config().batch_size, train_set.size());
  for (int step = 0; step < steps; ++step) {
    std::vector<const img::Image*> images;
    std::vector<std::size_t> chosen;
    for (int b = 0; b < bs; ++b) {
      const std::size_t idx = rng.index(train_set.size());
      chosen.push_back(idx);
      images.push_back(&prepped[idx]);
    }
    // Only the fully connected layers receive updates in this stage;
    // grads still flow through the registry but the optimizer only sees
    // the FC subset.
    model.params().zero_grad();
    const nn::Mat out = model.forward_batch(images);
    nn::Mat dout = nn::Mat::Zero(out.rows(), out.cols());
    double loss = 0;
    std::size_t terms = 0;
    for (int i = 0; i < static_cast<int>(chosen.size()); ++i) {
      for (const auto& [name, target] : train_set[chosen[i]].attributes) {
        const int k = output_index(name);
        const double diff = out(i, k) - target;
        loss += diff * diff;
        dout(i, k) = 2.0 * diff;
        ++terms;
      }
    }
    if (terms == 0) throw Error(ErrorCode::config, "finetune: no attribute targets in batch");
    loss /= terms;
    dout /= static_cast<double>(terms);
    model.fusion().backward(dout);
    opt.step(model.fc_params());
    log.push_back({step, loss, loss, 0.0});
  }
  return log;
}

ScoreSummary summarize_scores(const std::vector<double>& scores) {
  if (scores.size() < 2) {
    throw Error(ErrorCode::precondition, "aesthetic report requires >= 2 images");
  }
  ScoreSummary s;
  s.count = scores.size();
  double sum = 0;
  for (double v : scores) sum += v;
  s.mean = sum / scores.size();
  double var = 0;
  for (double v : scores) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / scores.size());
  return s;
}

}  // namespace evalkit::aes
