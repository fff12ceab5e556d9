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

#include "aesthetics/distortions.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "util/error.hpp"

namespace evalkit::aes {

namespace {

float clamp01(float v) { return std::max(0.0f, std::min(1.0f, v)); }

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::config, std::string("distortion parameter out of range: ") + what);
}

img::Image brightness(const img::Image& in, double factor) {
  require(factor >= 0.5 && factor <= 1.5, "brightness_factor");
  if (factor == 1.0) return in;
  img::Image out = in;
  for (float& v : out.data) v = clamp01(v * static_cast<float>(factor));
  return out;
}

img::Image saturation(const img::Image& in, double factor) {
  require(factor >= 0.5 && factor <= 1.5, "saturation_factor");
  if (in.c != 3 || factor == 1.0) return in;
  img::Image out = in;
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const float gray =
          0.299f * in.at(x, y, 0) + 0.587f * in.at(x, y, 1) + 0.114f * in.at(x, y, 2);
      for (int ch = 0; ch < 3; ++ch) {
        out.at(x, y, ch) = clamp01(gray + static_cast<float>(factor) * (in.at(x, y, ch) - gray));
      }
    }
  }
  return out;
}

img::Image contrast(const img::Image& in, double factor) {
  require(factor >= 0.5 && factor <= 1.5, "contrast_factor");
  if (factor == 1.0) return in;  // exact no-op
  img::Image out = in;
  for (float& v : out.data) {
    v = clamp01((v - 0.5f) * static_cast<float>(factor) + 0.5f);
  }
  return out;
}

img::Image piecewise_affine(const img::Image& in, double jitter, RngStream& rng) {
  require(jitter >= 0.0 && jitter <= 0.05, "affine_jitter");
  // 4x4 control grid of displacements, bilinearly interpolated per pixel.
  constexpr int kGrid = 4;
  const double amp = jitter * std::max(in.w, in.h);
  std::array<std::array<std::pair<double, double>, kGrid>, kGrid> disp;
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid; ++gx) {
      disp[gy][gx] = {rng.uniform(-amp, amp), rng.uniform(-amp, amp)};
    }
  }
  img::Image out(in.w, in.h, in.c);
  for (int y = 0; y < in.h; ++y) {
    const double gy = static_cast<double>(y) / std::max(1, in.h - 1) * (kGrid - 1);
    const int g0y = std::min(static_cast<int>(gy), kGrid - 2);
    const double wy = gy - g0y;
    for (int x = 0; x < in.w; ++x) {
      const double gx = static_cast<double>(x) / std::max(1, in.w - 1) * (kGrid - 1);
      const int g0x = std::min(static_cast<int>(gx), kGrid - 2);
      const double wx = gx - g0x;
      const double dx = (disp[g0y][g0x].first * (1 - wx) + disp[g0y][g0x + 1].first * wx) * (1 - wy) +
                        (disp[g0y + 1][g0x].first * (1 - wx) + disp[g0y + 1][g0x + 1].first * wx) * wy;
      const double dy = (disp[g0y][g0x].second * (1 - wx) + disp[g0y][g0x + 1].second * wx) * (1 - wy) +
                        (disp[g0y + 1][g0x].second * (1 - wx) + disp[g0y + 1][g0x + 1].second * wx) * wy;
      const double sxf = std::clamp(x + dx, 0.0, static_cast<double>(in.w - 1));
      const double syf = std::clamp(y + dy, 0.0, static_cast<double>(in.h - 1));
      const int x0 = static_cast<int>(sxf), y0 = static_cast<int>(syf);
      const int x1 = std::min(x0 + 1, in.w - 1), y1 = std::min(y0 + 1, in.h - 1);
      const float fx = static_cast<float>(sxf - x0), fy = static_cast<float>(syf - y0);
      for (int ch = 0; ch < in.c; ++ch) {
        const float top = in.at(x0, y0, ch) * (1 - fx) + in.at(x1, y0, ch) * fx;
        const float bot = in.at(x0, y1, ch) * (1 - fx) + in.at(x1, y1, ch) * fx;
        out.at(x, y, ch) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

img::Image cut_mix(const img::Image& in, double area, RngStream& rng) {
  require(area >= 0.2 && area <= 0.4, "cutmix_area");
  img::Image out = in;
  const double side_frac = std::sqrt(area);
  const int pw = std::max(1, static_cast<int>(std::lround(in.w * side_frac)));
  const int ph = std::max(1, static_cast<int>(std::lround(in.h * side_frac)));
  const int sx = static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, in.w - pw))));
  const int sy = static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, in.h - ph))));
  const int dx = static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, in.w - pw))));
  const int dy = static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, in.h - ph))));
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      for (int ch = 0; ch < in.c; ++ch) {
        out.at(dx + x, dy + y, ch) = in.at(sx + x, sy + y, ch);
      }
    }
  }
  return out;
}

img::Image down_sampling(const img::Image& in, int factor) {
  require(factor == 2 || factor == 4, "downsample_factor");
  const int dw = std::max(1, in.w / factor), dh = std::max(1, in.h / factor);
  img::Image small(dw, dh, in.c);
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      for (int ch = 0; ch < in.c; ++ch) small.at(x, y, ch) = in.at(x * factor, y * factor, ch);
    }
  }
  return img::resize_nearest(small, in.w, in.h);
}

img::Image gaussian_blur(const img::Image& in, double sigma) {
  require(sigma == 0.0 || (sigma >= 0.5 && sigma <= 3.0), "blur_sigma");
  if (sigma == 0.0) return in;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = static_cast<float>(std::exp(-(i * i) / (2.0 * sigma * sigma)));
    sum += kernel[i + radius];
  }
  for (float& k : kernel) k = static_cast<float>(k / sum);

  auto reflect = [](int v, int n) {
    if (v < 0) v = -v - 1;
    if (v >= n) v = 2 * n - v - 1;
    return std::clamp(v, 0, n - 1);
  };

  img::Image tmp(in.w, in.h, in.c);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      for (int ch = 0; ch < in.c; ++ch) {
        float acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * in.at(reflect(x + i, in.w), y, ch);
        }
        tmp.at(x, y, ch) = acc;
      }
    }
  }
  img::Image out(in.w, in.h, in.c);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      for (int ch = 0; ch < in.c; ++ch) {
        float acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(x, reflect(y + i, in.h), ch);
        }
        out.at(x, y, ch) = acc;
      }
    }
  }
  return out;
}

img::Image gaussian_noise(const img::Image& in, double sigma, RngStream& rng) {
  require(sigma == 0.0 || (sigma >= 0.01 && sigma <= 0.1), "noise_sigma");
  if (sigma == 0.0) return in;  // exact no-op
  img::Image out = in;
  for (float& v : out.data) v = clamp01(v + static_cast<float>(rng.normal(0.0, sigma)));
  return out;
}

img::Image edge_extraction(const img::Image& in, double low, double high) {
  require(low >= 0 && high > low && high <= 1.0, "edge thresholds");
  const img::Image gray = img::to_gray(in);
  img::Image mag(in.w, in.h, 1);
  float max_mag = 1e-6f;
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      auto px = [&](int xx, int yy) {
        return gray.at(std::clamp(xx, 0, in.w - 1), std::clamp(yy, 0, in.h - 1), 0);
      };
      const float gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                       (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const float gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                       (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      const float m = std::sqrt(gx * gx + gy * gy);
      mag.at(x, y, 0) = m;
      max_mag = std::max(max_mag, m);
    }
  }
  img::Image out(in.w, in.h, in.c);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const float m = mag.at(x, y, 0) / max_mag;
      float e;
      if (m <= low) {
        e = 0.0f;
      } else if (m >= high) {
        e = 1.0f;
      } else {
        e = static_cast<float>((m - low) / (high - low));
      }
      for (int ch = 0; ch < in.c; ++ch) out.at(x, y, ch) = e;
    }
  }
  return out;
}

img::Image quantization(const img::Image& in, int levels) {
  require(levels == 4 || levels == 8 || levels == 16, "quantization_levels");
  img::Image out = in;
  const float l = static_cast<float>(levels);
  for (float& v : out.data) {
    const float bucket = std::min(l - 1.0f, std::floor(v * l));
    v = bucket / (l - 1.0f);
  }
  return out;
}

}  // namespace

const char* distortion_name(DistortionKind k) {
  switch (k) {
    case DistortionKind::brightness_change: return "brightness_change";
    case DistortionKind::color_enhancement: return "color_enhancement";
    case DistortionKind::contrast_change: return "contrast_change";
    case DistortionKind::piecewise_affine: return "piecewise_affine";
    case DistortionKind::cut_mix: return "cut_mix";
    case DistortionKind::down_sampling: return "down_sampling";
    case DistortionKind::gaussian_blur: return "gaussian_blur";
    case DistortionKind::gaussian_noise: return "gaussian_noise";
    case DistortionKind::edge_extraction: return "edge_extraction";
    case DistortionKind::quantization: return "quantization";
  }
  return "?";
}

DistortionKind distortion_from_string(const std::string& s) {
  for (int i = 0; i < kDistortionCount; ++i) {
    if (s == distortion_name(static_cast<DistortionKind>(i))) return static_cast<DistortionKind>(i);
  }
  throw Error(ErrorCode::config, "unknown distortion: " + s);
}

DistortionParams sample_params(DistortionKind kind, RngStream& rng) {
  DistortionParams p;
  switch (kind) {
    case DistortionKind::brightness_change: p.brightness_factor = rng.uniform(0.5, 1.5); break;
    case DistortionKind::color_enhancement: p.saturation_factor = rng.uniform(0.5, 1.5); break;
    case DistortionKind::contrast_change: p.contrast_factor = rng.uniform(0.5, 1.5); break;
    case DistortionKind::piecewise_affine: p.affine_jitter = rng.uniform(0.01, 0.05); break;
    case DistortionKind::cut_mix: p.cutmix_area = rng.uniform(0.2, 0.4); break;
    case DistortionKind::down_sampling: p.downsample_factor = rng.uniform() < 0.5 ? 2 : 4; break;
    case DistortionKind::gaussian_blur: p.blur_sigma = rng.uniform(0.5, 3.0); break;
    case DistortionKind::gaussian_noise: p.noise_sigma = rng.uniform(0.01, 0.1); break;
    case DistortionKind::edge_extraction: break;  // fixed thresholds
    case DistortionKind::quantization: {
      static const int levels[3] = {4, 8, 16};
      p.quantization_levels = levels[rng.index(3)];
      break;
    }
  }
  return p;
}

img::Image apply_distortion(const img::Image& image, DistortionKind kind,
                            const DistortionParams& params, std::uint64_t seed) {
  if (image.empty()) throw Error(ErrorCode::precondition, "apply_distortion: empty image");
  RngStream rng(seed);
  switch (kind) {
    case DistortionKind::brightness_change: return brightness(image, params.brightness_factor);
    case DistortionKind::color_enhancement: return saturation(image, params.saturation_factor);
    case DistortionKind::contrast_change: return contrast(image, params.contrast_factor);
    case DistortionKind::piecewise_affine: return piecewise_affine(image, params.affine_jitter, rng);
    case DistortionKind::cut_mix: return cut_mix(image, params.cutmix_area, rng);
    case DistortionKind::down_sampling: return down_sampling(image, params.downsample_factor);
    case DistortionKind::gaussian_blur: return gaussian_blur(image, params.blur_sigma);
    case DistortionKind::gaussian_noise: return gaussian_noise(image, params.noise_sigma, rng);
    case DistortionKind::edge_extraction: return edge_extraction(image, params.edge_low, params.edge_high);
    case DistortionKind::quantization: return quantization(image, params.quantization_levels);
  }
  throw Error(ErrorCode::internal, "unhandled distortion kind");
}

}  // namespace evalkit::aes
