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

#include <cstdint>
#include <string>
#include <vector>

namespace evalkit::img {

// Row-major HWC float image, values in [0, 1]. 1 or 3 channels.
struct Image {
  int w = 0, h = 0, c = 0;
  std::vector<float> data;

  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f)
      : w(width), h(height), c(channels),
        data(static_cast<std::size_t>(width) * height * channels, fill) {}

  float& at(int x, int y, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float at(int x, int y, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  bool empty() const { return data.empty(); }

  bool operator==(const Image&) const = default;
};

// Binary PPM (P6) for 3 channels, PGM (P5) for 1 channel; 8-bit.
Image load_image(const std::string& path);
void save_image(const std::string& path, const Image& image);

std::string encode_ppm(const Image& image);
Image decode_ppm(const std::string& bytes);

Image to_gray(const Image& image);
Image resize_bilinear(const Image& image, int out_w, int out_h);
Image resize_nearest(const Image& image, int out_w, int out_h);
// Aspect-preserving resize onto a size x size canvas, zero padding.
Image resize_pad_square(const Image& image, int size);

float mean_luminance(const Image& image);

}  // namespace evalkit::img
