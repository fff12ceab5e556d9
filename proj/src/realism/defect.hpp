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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aesthetics/image.hpp"
#include "nn/nn.hpp"
#include "schema/annotation.hpp"

namespace evalkit::realism {

// Exact sub-image, no padding. A box reaching past the image is clipped
// (with clipped=true) unless strict, which raises a precondition error.
img::Image crop_region(const img::Image& image, const schema::Box& box, bool strict = false,
                       bool* clipped = nullptr);

// "face" or one of the ten component names.
bool is_valid_target(const std::string& target);

// Transformer-style crop classifier: patch embedding + positional embedding
// -> self-attention stack -> mean pool -> linear head. Face models are
// binary {good, bad} over the face-box crop; component models are 3-class
// {good, bad, invisible} over the body-box crop.
class DefectModel {
 public:
  struct Config {
    std::string target = "face";
    int input_size = 32;   // crops resize-padded to this square size
    int channels = 3;
    int patch = 8;
    int hidden = 32;
    int attention_layers = 2;
    std::uint64_t seed = 23;
    int steps = 300;
    int batch_size = 16;
    double learning_rate = 3e-3;
    double holdout_fraction = 0.2;

    nlohmann::json to_json() const;
    static Config from_json(const nlohmann::json& j);
  };

  explicit DefectModel(Config cfg);

  const Config& config() const { return cfg_; }
  const std::vector<schema::ComponentLabel>& classes() const { return classes_; }

  schema::ComponentLabel classify_crop(const img::Image& crop);
  img::Image preprocess(const img::Image& crop) const;

  nlohmann::json to_checkpoint() const;
  static DefectModel from_checkpoint(const nlohmann::json& j);

  // Training internals.
  nn::Mat forward_batch(const std::vector<const img::Image*>& crops);
  nn::ParamRegistry& params() { return params_; }
  nn::SoftmaxCrossEntropy& head_loss() { return ce_; }
  nn::Mat logits_backward(const nn::Mat& dlogits);

 private:
  Config cfg_;
  std::vector<schema::ComponentLabel> classes_;
  nn::Dense patch_embed_;
  nn::Param pos_embed_;
  std::vector<nn::SelfAttention> attention_;
  nn::Dense head_;
  nn::SoftmaxCrossEntropy ce_;
  nn::ParamRegistry params_;
  int tokens_ = 0;
  int n_ = 0;
};

struct LabeledImage {
  schema::AnnotationRecord record;
  img::Image image;
};

struct TrainReport {
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_class_accuracy;
  std::map<std::string, std::size_t> per_class_count;
  std::size_t train_size = 0, holdout_size = 0;
};

struct TrainedDefectModel {
  std::unique_ptr<DefectModel> model;
  TrainReport report;
};

// Face target: records with coarse face == invisible are excluded and the
// face-box crop is consumed; component targets consume the body-box crop.
// Any class absent from the training split raises a stratification error.
TrainedDefectModel train_defect_model(const std::vector<LabeledImage>& dataset,
                                      const std::string& target, const DefectModel::Config& cfg);

// Missing required box -> precondition error (callers may skip and count).
schema::ComponentLabel classify(DefectModel& model, const LabeledImage& input);

enum class RateDenominator { visible, all };

// (# bad) / (# bad + # good); invisible predictions are excluded from both
// sides unless RateDenominator::all. All-invisible input is undefined.
double defect_rate(const std::vector<schema::ComponentLabel>& predictions,
                   RateDenominator denom = RateDenominator::visible);

int defect_rate_percent(const std::vector<schema::ComponentLabel>& predictions,
                        RateDenominator denom = RateDenominator::visible);

}  // namespace evalkit::realism
