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
#include <cstdint>
#include <string>

#include "aesthetics/image.hpp"
#include "util/rng.hpp"

namespace evalkit::aes {

// The ten distortions of the auxiliary prediction task.
enum class DistortionKind : int {
  brightness_change = 0,
  color_enhancement = 1,
  contrast_change = 2,
  piecewise_affine = 3,
  cut_mix = 4,
  down_sampling = 5,
  gaussian_blur = 6,
  gaussian_noise = 7,
  edge_extraction = 8,
  quantization = 9,
};

inline constexpr int kDistortionCount = 10;

const char* distortion_name(DistortionKind k);
DistortionKind distortion_from_string(const std::string& s);

// Declared parameter ranges; sampling stays within them.
struct DistortionParams {
  double brightness_factor = 1.0;   // [0.5, 1.5]
  double saturation_factor = 1.0;   // [0.5, 1.5]
  double contrast_factor = 1.0;     // [0.5, 1.5]
  double affine_jitter = 0.03;      // fraction of image size, <= 0.05
  double cutmix_area = 0.3;         // patch area fraction, [0.2, 0.4]
  int downsample_factor = 2;        // {2, 4}
  double blur_sigma = 1.0;          // [0.5, 3]
  double noise_sigma = 0.05;        // [0.01, 0.1] of dynamic range
  double edge_low = 0.1;            // fixed default thresholds
  double edge_high = 0.3;
  int quantization_levels = 8;      // {4, 8, 16}
};

// Uniformly samples the parameter relevant to `kind` within its range.
DistortionParams sample_params(DistortionKind kind, RngStream& rng);

// Deterministic in (image, kind, params, seed). Output keeps the input pixel
// dimensions; down_sampling reduces then resizes back. Out-of-range params
// raise a config error.
img::Image apply_distortion(const img::Image& image, DistortionKind kind,
                            const DistortionParams& params, std::uint64_t seed);

}  // namespace evalkit::aes
