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

#include "aesthetics/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "util/error.hpp"
#include "util/jsonl.hpp"

namespace evalkit::img {

namespace {

float clamp01(float v) { return std::max(0.0f, std::min(1.0f, v)); }

int read_pnm_int(const std::string& s, std::size_t& pos) {
  while (pos < s.size() &&
         (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == '#')) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      ++pos;
    }
  }
  int v = 0;
  bool any = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    v = v * 10 + (s[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) throw Error(ErrorCode::io, "malformed PNM header");
  return v;
}

}  // namespace

std::string encode_ppm(const Image& image) {
  if (image.c != 1 && image.c != 3) {
    throw Error(ErrorCode::precondition, "PNM encoding supports 1 or 3 channels");
  }
  std::ostringstream out;
  out << (image.c == 3 ? "P6" : "P5") << '\n' << image.w << ' ' << image.h << '\n' << 255 << '\n';
  std::string pixels;
  pixels.reserve(image.data.size());
  for (float v : image.data) {
    pixels.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(clamp01(v) * 255.0f))));
  }
  return out.str() + pixels;
}

Image decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::io, "not a binary PGM/PPM image");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  const int w = read_pnm_int(bytes, pos);
  const int h = read_pnm_int(bytes, pos);
  const int maxval = read_pnm_int(bytes, pos);
  if (maxval != 255) throw Error(ErrorCode::io, "only 8-bit PNM images are supported");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos < need) throw Error(ErrorCode::io, "truncated PNM pixel data");
  Image image(w, h, channels);
  for (std::size_t i = 0; i < need; ++i) {
    image.data[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / 255.0f;
  }
  return image;
}

Image load_image(const std::string& path) {
  try {
    return decode_ppm(read_text_file(path));
  } catch (const Error& e) {
    throw Error(ErrorCode::io, "cannot decode image " + path + ": " + e.what());
  }
}

void save_image(const std::string& path, const Image& image) {
  write_text_file(path, encode_ppm(image));
}

Image to_gray(const Image& image) {
  if (image.c == 1) return image;
  Image out(image.w, image.h, 1);
  for (int y = 0; y < image.h; ++y) {
    for (int x = 0; x < image.w; ++x) {
      out.at(x, y, 0) = 0.299f * image.at(x, y, 0) + 0.587f * image.at(x, y, 1) +
                        0.114f * image.at(x, y, 2);
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int out_w, int out_h) {
  Image out(out_w, out_h, image.c);
  const float sx = static_cast<float>(image.w) / out_w;
  const float sy = static_cast<float>(image.h) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const float fy = std::max(0.0f, (y + 0.5f) * sy - 0.5f);
    const int y0 = std::min(static_cast<int>(fy), image.h - 1);
    const int y1 = std::min(y0 + 1, image.h - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const float fx = std::max(0.0f, (x + 0.5f) * sx - 0.5f);
      const int x0 = std::min(static_cast<int>(fx), image.w - 1);
      const int x1 = std::min(x0 + 1, image.w - 1);
      const float wx = fx - x0;
      for (int ch = 0; ch < image.c; ++ch) {
        const float top = image.at(x0, y0, ch) * (1 - wx) + image.at(x1, y0, ch) * wx;
        const float bot = image.at(x0, y1, ch) * (1 - wx) + image.at(x1, y1, ch) * wx;
        out.at(x, y, ch) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image resize_nearest(const Image& image, int out_w, int out_h) {
  Image out(out_w, out_h, image.c);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(image.h - 1, y * image.h / out_h);
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(image.w - 1, x * image.w / out_w);
      for (int ch = 0; ch < image.c; ++ch) out.at(x, y, ch) = image.at(sx, sy, ch);
    }
  }
  return out;
}

Image resize_pad_square(const Image& image, int size) {
  const float scale = static_cast<float>(size) / std::max(image.w, image.h);
  const int rw = std::max(1, static_cast<int>(std::lround(image.w * scale)));
  const int rh = std::max(1, static_cast<int>(std::lround(image.h * scale)));
  const Image resized = resize_bilinear(image, rw, rh);
  Image out(size, size, image.c, 0.0f);
  const int ox = (size - rw) / 2;
  const int oy = (size - rh) / 2;
  for (int y = 0; y < rh; ++y) {
    for (int x = 0; x < rw; ++x) {
      for (int ch = 0; ch < image.c; ++ch) out.at(x + ox, y + oy, ch) = resized.at(x, y, ch);
    }
  }
  return out;
}

float mean_luminance(const Image& image) {
  const Image gray = to_gray(image);
  double sum = 0;
  for (float v : gray.data) sum += v;
  return gray.data.empty() ? 0.0f : static_cast<float>(sum / gray.data.size());
}

}  // namespace evalkit::img
