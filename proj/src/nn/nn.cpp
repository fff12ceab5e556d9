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

#include "nn/nn.hpp"

#include <cmath>
#include <limits>

#include "util/error.hpp"

namespace evalkit::nn {

void Param::init(const std::string& n, int rows, int cols, double scale, RngStream& rng) {
  name = n;
  value.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) value(i, j) = rng.normal(0.0, scale);
  }
  grad = Mat::Zero(rows, cols);
}

void Dense::init(const std::string& name, int in, int out, RngStream& rng) {
  w.init(name + ".w", out, in, std::sqrt(2.0 / in), rng);
  b.name = name + ".b";
  b.value = Mat::Zero(out, 1);
  b.grad = Mat::Zero(out, 1);
}

Mat Dense::forward(const Mat& x) {
  x_cache_ = x;
  return (x * w.value.transpose()).rowwise() + b.value.col(0).transpose();
}

Mat Dense::backward(const Mat& dy) {
  w.grad += dy.transpose() * x_cache_;
  b.grad += dy.colwise().sum().transpose();
  return dy * w.value;
}

Mat ReLU::forward(const Mat& x) {
  mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseProduct(mask_);
}

Mat ReLU::backward(const Mat& dy) const { return dy.cwiseProduct(mask_); }

void SelfAttention::init(const std::string& name, int d, int tokens_per_sample, RngStream& rng) {
  d_ = d;
  tokens = tokens_per_sample;
  wq.init(name + ".q", d, d, rng);
  wk.init(name + ".k", d, d, rng);
  wv.init(name + ".v", d, d, rng);
  wo.init(name + ".o", d, d, rng);
}

void SelfAttention::register_params(ParamRegistry& reg) {
  wq.register_params(reg);
  wk.register_params(reg);
  wv.register_params(reg);
  wo.register_params(reg);
}

Mat SelfAttention::forward(const Mat& x) {
  const int n = static_cast<int>(x.rows()) / tokens;
  q_ = wq.forward(x);
  k_ = wk.forward(x);
  v_ = wv.forward(x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_));
  attn_.assign(n, Mat());
  Mat heads(x.rows(), d_);
  for (int s = 0; s < n; ++s) {
    const auto qs = q_.middleRows(s * tokens, tokens);
    const auto ks = k_.middleRows(s * tokens, tokens);
    const auto vs = v_.middleRows(s * tokens, tokens);
    Mat scores = qs * ks.transpose() * scale;
    // row-wise softmax
    Mat a(tokens, tokens);
    for (int i = 0; i < tokens; ++i) {
      const double mx = scores.row(i).maxCoeff();
      Eigen::RowVectorXd e = (scores.row(i).array() - mx).exp();
      a.row(i) = e / e.sum();
    }
    attn_[s] = a;
    heads.middleRows(s * tokens, tokens) = a * vs;
  }
  return wo.forward(heads);
}

Mat SelfAttention::backward(const Mat& dy) {
  const int n = static_cast<int>(dy.rows()) / tokens;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_));
  const Mat dheads = wo.backward(dy);
  Mat dq(dy.rows(), d_), dk(dy.rows(), d_), dv(dy.rows(), d_);
  for (int s = 0; s < n; ++s) {
    const Mat& a = attn_[s];
    const auto qs = q_.middleRows(s * tokens, tokens);
    const auto ks = k_.middleRows(s * tokens, tokens);
    const auto vs = v_.middleRows(s * tokens, tokens);
    const auto dh = dheads.middleRows(s * tokens, tokens);
    const Mat da = dh * vs.transpose();
    dv.middleRows(s * tokens, tokens) = a.transpose() * dh;
    Mat ds(tokens, tokens);
    for (int i = 0; i < tokens; ++i) {
      const double dot = da.row(i).dot(a.row(i));
      ds.row(i) = a.row(i).cwiseProduct((da.row(i).array() - dot).matrix());
    }
    dq.middleRows(s * tokens, tokens) = ds * ks * scale;
    dk.middleRows(s * tokens, tokens) = ds.transpose() * qs * scale;
  }
  Mat dx = wq.backward(dq);
  dx += wk.backward(dk);
  dx += wv.backward(dv);
  return dx;
}

Vec SoftmaxCrossEntropy::forward(const Mat& logits, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw Error(ErrorCode::precondition, "softmax: logits/labels size mismatch");
  }
  labels_ = labels;
  probs_.resize(logits.rows(), logits.cols());
  Vec losses(logits.rows());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    probs_.row(i) = e / e.sum();
    double p = probs_(i, labels[i]);
    if (p <= 0.0) {
      p = std::numeric_limits<double>::epsilon();
      ++clamp_events;
    }
    losses(i) = -std::log(p);
  }
  return losses;
}

Mat SoftmaxCrossEntropy::backward(double scale) const {
  Mat d = probs_;
  for (int i = 0; i < d.rows(); ++i) d(i, labels_[i]) -= 1.0;
  return d * scale;
}

std::vector<int> SoftmaxCrossEntropy::predictions() const {
  std::vector<int> out(probs_.rows());
  for (int i = 0; i < probs_.rows(); ++i) {
    Eigen::Index idx;
    probs_.row(i).maxCoeff(&idx);
    out[i] = static_cast<int>(idx);
  }
  return out;
}

void Conv3x3::init(const std::string& name, int in_channels, int out_channels, RngStream& rng) {
  in_c = in_channels;
  out_c = out_channels;
  w.init(name + ".w", out_c, in_c * 9, std::sqrt(2.0 / (in_c * 9)), rng);
  b.name = name + ".b";
  b.value = Mat::Zero(out_c, 1);
  b.grad = Mat::Zero(out_c, 1);
}

Mat Conv3x3::forward(const Mat& x, int h, int wpix, Mat& col_cache) const {
  const int hw = h * wpix;
  col_cache.resize(in_c * 9, hw);
  for (int y = 0; y < h; ++y) {
    for (int xpix = 0; xpix < wpix; ++xpix) {
      const int col = y * wpix + xpix;
      int row = 0;
      for (int c = 0; c < in_c; ++c) {
        for (int ky = -1; ky <= 1; ++ky) {
          for (int kx = -1; kx <= 1; ++kx) {
            const int sy = y + ky, sx = xpix + kx;
            col_cache(row++, col) =
                (sy < 0 || sy >= h || sx < 0 || sx >= wpix) ? 0.0 : x(c, sy * wpix + sx);
          }
        }
      }
    }
  }
  return (w.value * col_cache).colwise() + b.value.col(0);
}

Mat Conv3x3::backward(const Mat& dy, const Mat& col_cache, int h, int wpix) {
  w.grad += dy * col_cache.transpose();
  b.grad += dy.rowwise().sum();
  const Mat dcol = w.value.transpose() * dy;  // (in_c*9 x hw)
  Mat dx = Mat::Zero(in_c, h * wpix);
  for (int y = 0; y < h; ++y) {
    for (int xpix = 0; xpix < wpix; ++xpix) {
      const int col = y * wpix + xpix;
      int row = 0;
      for (int c = 0; c < in_c; ++c) {
        for (int ky = -1; ky <= 1; ++ky) {
          for (int kx = -1; kx <= 1; ++kx) {
            const int sy = y + ky, sx = xpix + kx;
            if (sy >= 0 && sy < h && sx >= 0 && sx < wpix) {
              dx(c, sy * wpix + sx) += dcol(row, col);
            }
            ++row;
          }
        }
      }
    }
  }
  return dx;
}

Mat avg_pool2(const Mat& x, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  Mat out(x.rows(), oh * ow);
  for (int c = 0; c < x.rows(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        out(c, y * ow + xx) = 0.25 * (x(c, (2 * y) * w + 2 * xx) + x(c, (2 * y) * w + 2 * xx + 1) +
                                      x(c, (2 * y + 1) * w + 2 * xx) +
                                      x(c, (2 * y + 1) * w + 2 * xx + 1));
      }
    }
  }
  return out;
}

Mat avg_pool2_backward(const Mat& dy, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  Mat dx = Mat::Zero(dy.rows(), h * w);
  for (int c = 0; c < dy.rows(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        const double g = 0.25 * dy(c, y * ow + xx);
        dx(c, (2 * y) * w + 2 * xx) += g;
        dx(c, (2 * y) * w + 2 * xx + 1) += g;
        dx(c, (2 * y + 1) * w + 2 * xx) += g;
        dx(c, (2 * y + 1) * w + 2 * xx + 1) += g;
      }
    }
  }
  return dx;
}

Vec global_avg_pool(const Mat& x) { return x.rowwise().mean(); }

Mat global_avg_pool_backward(const Vec& dy, int hw) {
  Mat dx(dy.size(), hw);
  for (int c = 0; c < dy.size(); ++c) dx.row(c).setConstant(dy(c) / hw);
  return dx;
}

void Adam::step(const ParamRegistry& params) {
  const auto& all = params.all();
  if (m_.empty()) {
    for (Param* p : all) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < all.size(); ++i) {
    Param* p = all[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    p->value -= lr_ * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + eps_).matrix());
  }
}

}  // namespace evalkit::nn
