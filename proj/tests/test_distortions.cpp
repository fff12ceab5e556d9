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

#include <doctest.h>

#include <set>

#include "aesthetics/distortions.hpp"
#include "support/fixtures.hpp"

using namespace evalkit;
using namespace evalkit::aes;

namespace {

img::Image ramp_gray(int size) {
  img::Image im(size, size, 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      im.at(x, y, 0) = static_cast<float>(x) / (size - 1);
    }
  }
  return im;
}

img::Image test_image() {
  RngStream rng(4);
  return test::noise_image(32, 32, rng);
}

}  // namespace

TEST_CASE("ten distortion kinds with stable names") {
  std::set<std::string> names;
  for (int i = 0; i < kDistortionCount; ++i) {
    names.insert(distortion_name(static_cast<DistortionKind>(i)));
  }
  CHECK(names.size() == 10);
  CHECK(distortion_from_string("gaussian_blur") == DistortionKind::gaussian_blur);
  CHECK_THROWS_AS(distortion_from_string("sepia"), Error);
}

TEST_CASE("identity parameters are pixel-exact no-ops") {
  const img::Image im = test_image();
  DistortionParams p;
  p.brightness_factor = 1.0;
  CHECK(apply_distortion(im, DistortionKind::brightness_change, p, 1) == im);
  p.contrast_factor = 1.0;
  CHECK(apply_distortion(im, DistortionKind::contrast_change, p, 1) == im);
  p.noise_sigma = 0.0;
  CHECK(apply_distortion(im, DistortionKind::gaussian_noise, p, 1) == im);
}

TEST_CASE("distortions are deterministic in (image, kind, params, seed)") {
  const img::Image im = test_image();
  RngStream rng(9);
  for (int i = 0; i < kDistortionCount; ++i) {
    const auto kind = static_cast<DistortionKind>(i);
    const DistortionParams p = sample_params(kind, rng);
    const img::Image a = apply_distortion(im, kind, p, 77);
    const img::Image b = apply_distortion(im, kind, p, 77);
    CHECK(a == b);
    CHECK(a.w == im.w);
    CHECK(a.h == im.h);
  }
}

TEST_CASE("quantization of a ramp yields exactly the level count") {
  const img::Image ramp = ramp_gray(256);
  DistortionParams p;
  p.quantization_levels = 4;
  const img::Image q = apply_distortion(ramp, DistortionKind::quantization, p, 0);
  std::set<float> values(q.data.begin(), q.data.end());
  CHECK(values.size() == 4);
}

TEST_CASE("parameter ranges are enforced") {
  const img::Image im = test_image();
  DistortionParams p;
  p.brightness_factor = 3.0;
  CHECK_THROWS_AS(apply_distortion(im, DistortionKind::brightness_change, p, 0), Error);
  p = {};
  p.quantization_levels = 7;
  CHECK_THROWS_AS(apply_distortion(im, DistortionKind::quantization, p, 0), Error);
  p = {};
  p.affine_jitter = 0.5;
  CHECK_THROWS_AS(apply_distortion(im, DistortionKind::piecewise_affine, p, 0), Error);
}

TEST_CASE("sampled params stay in range") {
  RngStream rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    for (int i = 0; i < kDistortionCount; ++i) {
      const auto kind = static_cast<DistortionKind>(i);
      const DistortionParams p = sample_params(kind, rng);
      CHECK_NOTHROW(apply_distortion(test_image(), kind, p, trial));
    }
  }
}

TEST_CASE("down_sampling keeps dimensions but loses detail") {
  const img::Image im = test_image();
  DistortionParams p;
  p.downsample_factor = 4;
  const img::Image d = apply_distortion(im, DistortionKind::down_sampling, p, 0);
  CHECK(d.w == im.w);
  CHECK(d.h == im.h);
  CHECK_FALSE(d == im);
}

TEST_CASE("blur reduces gradient energy, noise raises pixel variance") {
  const img::Image im = test_image();
  auto grad_energy = [](const img::Image& g) {
    double e = 0;
    for (int y = 0; y + 1 < g.h; ++y) {
      for (int x = 0; x + 1 < g.w; ++x) {
        e += std::abs(g.at(x + 1, y, 0) - g.at(x, y, 0));
      }
    }
    return e;
  };
  DistortionParams p;
  p.blur_sigma = 2.0;
  const img::Image blurred = apply_distortion(im, DistortionKind::gaussian_blur, p, 0);
  CHECK(grad_energy(blurred) < grad_energy(im));

  const img::Image flat = test::solid_image(32, 32, 0.5f, 0.5f, 0.5f);
  p = {};
  p.noise_sigma = 0.1;
  const img::Image noisy = apply_distortion(flat, DistortionKind::gaussian_noise, p, 3);
  double var = 0;
  for (float v : noisy.data) var += (v - 0.5) * (v - 0.5);
  CHECK(var / noisy.data.size() > 0.001);
}

TEST_CASE("edge extraction output is binary-ish and channel-replicated") {
  const img::Image im = test_image();
  DistortionParams p;
  const img::Image e = apply_distortion(im, DistortionKind::edge_extraction, p, 0);
  CHECK(e.c == im.c);
  for (int y = 0; y < e.h; ++y) {
    for (int x = 0; x < e.w; ++x) {
      CHECK(e.at(x, y, 0) == e.at(x, y, 1));
      CHECK(e.at(x, y, 1) == e.at(x, y, 2));
    }
  }
}

TEST_CASE("ppm round trip") {
  const img::Image im = test_image();
  const img::Image back = img::decode_ppm(img::encode_ppm(im));
  CHECK(back.w == im.w);
  CHECK(back.h == im.h);
  // 8-bit quantization: within 1/255 per pixel.
  for (std::size_t i = 0; i < im.data.size(); ++i) {
    CHECK(std::abs(back.data[i] - im.data[i]) <= 0.5f / 255.0f + 1e-6f);
  }
  test::TempDir tmp("ppm");
  img::save_image(tmp.file("x.ppm"), im);
  CHECK(img::load_image(tmp.file("x.ppm")) == back);
}
