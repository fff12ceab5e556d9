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

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "util/rng.hpp"

namespace evalkit::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Double precision throughout: the gradient checks compare against central
// finite differences at 1e-4 relative tolerance, which float32 cannot hold.

struct Param {
  std::string name;
  Mat value;
  Mat grad;

  void init(const std::string& n, int rows, int cols, double scale, RngStream& rng);
  void zero_grad() { grad.setZero(); }
};

class ParamRegistry {
 public:
  void add(Param* p) { params_.push_back(p); }
  const std::vector<Param*>& all() const { return params_; }
  void zero_grad() {
    for (Param* p : params_) p->zero_grad();
  }

 private:
  std::vector<Param*> params_;
};

// y = x W^T + b^T, x is (n x in), W is (out x in).
struct Dense {
  Param w, b;

  void init(const std::string& name, int in, int out, RngStream& rng);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);  // accumulates grads, returns dx
  void register_params(ParamRegistry& reg) {
    reg.add(&w);
    reg.add(&b);
  }

  Mat x_cache_;
};

struct ReLU {
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy) const;

  Mat mask_;
};

// Single-head scaled dot-product self-attention over fixed-length token
// sequences. Input is (n*tokens x d) with each sample's tokens contiguous.
struct SelfAttention {
  Dense wq, wk, wv, wo;
  int tokens = 2;

  void init(const std::string& name, int d, int tokens_per_sample, RngStream& rng);
  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);
  void register_params(ParamRegistry& reg);

  Mat q_, k_, v_;                 // (n*tokens x d)
  std::vector<Mat> attn_;         // per sample (tokens x tokens)
  int d_ = 0;
};

// Softmax cross-entropy. Probabilities are floored at machine epsilon before
// the log; the floor events are counted.
struct SoftmaxCrossEntropy {
  // logits (n x k) -> per-sample -log p_label
  Vec forward(const Mat& logits, const std::vector<int>& labels);
  // d(total loss scaled by `scale`)/dlogits
  Mat backward(double scale = 1.0) const;
  std::vector<int> predictions() const;

  Mat probs_;
  std::vector<int> labels_;
  std::size_t clamp_events = 0;
};

// 3x3 stride-1 same-padding convolution via im2col. Feature maps are
// (channels x h*w), row-major spatial layout. The im2col cache is owned by
// the caller so batches can be processed sample by sample.
struct Conv3x3 {
  Param w;  // out_c x in_c*9
  Param b;  // out_c x 1
  int in_c = 0, out_c = 0;

  void init(const std::string& name, int in_channels, int out_channels, RngStream& rng);
  Mat forward(const Mat& x, int h, int wpix, Mat& col_cache) const;
  Mat backward(const Mat& dy, const Mat& col_cache, int h, int wpix);
  void register_params(ParamRegistry& reg) {
    reg.add(&w);
    reg.add(&b);
  }
};

Mat avg_pool2(const Mat& x, int h, int w);                  // (c x hw) -> (c x hw/4)
Mat avg_pool2_backward(const Mat& dy, int h, int w);

Vec global_avg_pool(const Mat& x);                          // (c x hw) -> c
Mat global_avg_pool_backward(const Vec& dy, int hw);

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParamRegistry& params);

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

}  // namespace evalkit::nn
