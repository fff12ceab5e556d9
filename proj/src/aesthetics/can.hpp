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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aesthetics/distortions.hpp"
#include "aesthetics/image.hpp"
#include "nn/nn.hpp"

namespace evalkit::aes {

// Score outputs: the general aesthetic feeling plus five attributes.
inline constexpr std::array<const char*, 6> kOutputNames = {
    "general", "object_emphasis", "composition", "use_of_color", "content", "use_of_light"};
inline constexpr int kOutputCount = 6;

struct CanConfig {
  int image_size = 32;     // square model input; images are center-cropped/resized
  int channels = 3;
  int style_dim = 32;
  int generic_dim = 32;
  int hidden_dim = 32;     // fusion width
  int attention_layers = 2;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int distortion_hidden = 32;
  std::vector<DistortionKind> distortions;  // defaults to all ten
  bool no_distortion_task = false;
  bool no_generic_module = false;
  bool no_style_module = false;
  std::uint64_t seed = 17;

  // training
  int steps = 200;
  int batch_size = 8;
  double learning_rate = 3e-3;
  double val_fraction = 0.25;

  void validate() const;
  nlohmann::json to_json() const;
  static CanConfig from_json(const nlohmann::json& j);
};

// Frozen stand-in for the pretrained image tower: a handcrafted descriptor
// (channel means/stds, 4x4 gray thumbnail, edge density) through a fixed
// seeded projection. Never registered with the optimizer.
class StyleEncoder {
 public:
  explicit StyleEncoder(int out_dim);

  nn::Vec encode(const img::Image& image) const;
  int dim() const { return out_dim_; }
  static constexpr const char* kId = "builtin-style-v1";

 private:
  int out_dim_;
  nn::Mat projection_;  // out_dim x 23
};

// F_gen: trainable convolutional encoder.
class GenericEncoder {
 public:
  void init(const CanConfig& cfg, RngStream& rng);
  nn::Mat forward(const std::vector<const img::Image*>& images);  // n x generic_dim
  void backward(const nn::Mat& dfeat);
  void register_params(nn::ParamRegistry& reg);

  nn::Conv3x3 conv1, conv2;
  nn::Dense project;

 private:
  struct SampleCache {
    nn::Mat col1, col2;
    nn::Mat mask1, mask2;
  };
  std::vector<SampleCache> cache_;
  nn::ReLU project_relu_;
  int size_ = 0, channels_ = 0;
};

// F_CAN tail: style/generic tokens -> self-attention stack -> FC layers ->
// 6 scores. Ablations drop one token.
class FusionHead {
 public:
  void init(const CanConfig& cfg, RngStream& rng);
  nn::Mat forward(const nn::Mat* style, const nn::Mat* generic);  // n x 6
  // Returns {d_style, d_generic}; absent inputs yield empty matrices.
  std::pair<nn::Mat, nn::Mat> backward(const nn::Mat& dout);
  void register_params(nn::ParamRegistry& reg);
  void register_fc_params(nn::ParamRegistry& reg);  // attribute fine-tune stage

  nn::Dense style_proj, generic_proj;
  std::vector<nn::SelfAttention> attention;
  nn::Dense fc1, fc2, fc3;

 private:
  nn::ReLU r1_, r2_;
  int tokens_ = 2;
  bool use_style_ = true, use_generic_ = true;
  int hidden_ = 0;
  int n_ = 0;
};

// F_cls: distortion classifier over concatenated pair features.
class DistortionHead {
 public:
  void init(const CanConfig& cfg, RngStream& rng);
  nn::Vec loss(const nn::Mat& feat_pairs, const std::vector<int>& labels);  // per-sample -log P_d
  nn::Mat backward(double scale);
  std::vector<int> predictions() const { return ce_.predictions(); }
  void register_params(nn::ParamRegistry& reg);
  std::size_t clamp_events() const { return ce_.clamp_events; }

  nn::Dense fc1, fc2;

 private:
  nn::ReLU relu_;
  nn::SoftmaxCrossEntropy ce_;
};

struct LossParts {
  double total = 0;
  double reg = 0;
  double cls = 0;
};

class CanModel {
 public:
  explicit CanModel(CanConfig cfg);

  const CanConfig& config() const { return cfg_; }

  // Inference on one image (deterministic).
  std::array<double, kOutputCount> forward(const img::Image& image);
  // Batch inference; rows ordered as the input.
  nn::Mat forward_batch(const std::vector<const img::Image*>& images);

  // Eq. 1 on one sample: L_reg = (F_CAN(x)_general - s)^2,
  // L_cls = -log P_d over F_cls(F_gen(x) (+) F_gen(x^d)), L = L_reg + L_cls.
  // Under no_distortion_task (or no_generic_module) L_cls == 0.
  LossParts training_loss(const img::Image& x, const img::Image& x_distorted, DistortionKind d,
                          double score);

  nlohmann::json to_checkpoint() const;
  static CanModel from_checkpoint(const nlohmann::json& j);
  void save(const std::string& path) const;
  static CanModel load(const std::string& path);

  StyleEncoder& style() { return style_; }
  GenericEncoder& generic() { return generic_; }
  FusionHead& fusion() { return fusion_; }
  DistortionHead& distortion_head() { return dist_head_; }
  nn::ParamRegistry& params() { return params_; }
  nn::ParamRegistry& fc_params() { return fc_params_; }

  nn::Mat style_features(const std::vector<const img::Image*>& images) const;
  img::Image preprocess(const img::Image& image) const;

 private:
  CanConfig cfg_;
  StyleEncoder style_;
  GenericEncoder generic_;
  FusionHead fusion_;
  DistortionHead dist_head_;
  nn::ParamRegistry params_;
  nn::ParamRegistry fc_params_;
};

struct TrainImage {
  std::string image_id;
  img::Image image;
  double score = 0.0;  // native dataset scale (AVA: mean of the 1-10 histogram)
  std::map<std::string, double> attributes;  // attribute fine-tune targets
};

struct TrainLogRow {
  int step = 0;
  double loss = 0, loss_reg = 0, loss_cls = 0;
};

struct TrainResult {
  std::unique_ptr<CanModel> model;
  std::vector<TrainLogRow> log;
  std::optional<double> val_srcc;                  // general score vs ground truth
  std::optional<double> distortion_val_accuracy;   // held-out distortion classification
  std::size_t prob_clamp_events = 0;
};

// Stage-1 training: regression on scores plus the distortion prediction
// task (one distortion per sample, kind sampled uniformly).
TrainResult train_can(const std::vector<TrainImage>& train_set, const CanConfig& cfg);

// Stage-2: freezes everything except the fully connected layers and fits
// the attribute outputs.
std::vector<TrainLogRow> finetune_attributes(CanModel& model,
                                             const std::vector<TrainImage>& train_set, int steps,
                                             double learning_rate);

struct ScoreSummary {
  double mean = 0;
  double stddev = 0;  // population
  std::size_t count = 0;
};

// Mean and population standard deviation; callers report to 2 decimals.
ScoreSummary summarize_scores(const std::vector<double>& scores);

}  // namespace evalkit::aes
