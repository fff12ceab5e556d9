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

#include <cmath>

#include "metrics/rank.hpp"
#include "support/fixtures.hpp"

using namespace evalkit;
using namespace evalkit::metrics;

namespace {

// O(n^2) oracle: ranks by pairwise counting, then the Pearson formula.
double srcc_oracle(const std::vector<double>& pred, const std::vector<double>& gt) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2.0;
    }
    return r;
  };
  const auto rp = ranks(pred), rg = ranks(gt);
  double mp = 0, mg = 0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    mp += rp[i];
    mg += rg[i];
  }
  mp /= rp.size();
  mg /= rg.size();
  double cov = 0, vp = 0, vg = 0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    cov += (rp[i] - mp) * (rg[i] - mg);
    vp += (rp[i] - mp) * (rp[i] - mp);
    vg += (rg[i] - mg) * (rg[i] - mg);
  }
  return cov / std::sqrt(vp * vg);
}

double rank_accuracy_oracle(const std::vector<double>& pred, const std::vector<double>& gt) {
  std::size_t valid = 0, correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      if (j <= i || gt[i] == gt[j]) continue;
      ++valid;
      if (pred[i] != pred[j] && (pred[i] < pred[j]) == (gt[i] < gt[j])) ++correct;
    }
  }
  return static_cast<double>(correct) / valid;
}

}  // namespace

TEST_CASE("srcc basics") {
  CHECK(srcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(1.0));
  CHECK(srcc(std::vector<double>{4, 3, 2, 1}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(-1.0));
  // 1 - 6*sum(d^2)/(n(n^2-1)) with d^2 = (0,1,1,0) -> 0.8
  CHECK(srcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.8));
  CHECK_THROWS_AS(srcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(srcc(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("rank_accuracy basics") {
  CHECK(rank_accuracy(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}) ==
        doctest::Approx(1.0));
  CHECK(rank_accuracy(std::vector<double>{3, 2, 1}, std::vector<double>{4, 5, 6}) ==
        doctest::Approx(0.0));
  // pairs (1,2) and (1,3) agree, (2,3) disagrees -> 2/3
  CHECK(rank_accuracy(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
        doctest::Approx(2.0 / 3.0));
  // gt-tied pairs leave the denominator; pred ties on distinct gt are wrong
  CHECK(rank_accuracy(std::vector<double>{1, 1}, std::vector<double>{1, 2}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(rank_accuracy(std::vector<double>{1, 2}, std::vector<double>{5, 5}), Error);
}

TEST_CASE("srcc and rank_accuracy agree with brute-force oracles on random data") {
  RngStream rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(19);
    std::vector<double> pred(n), gt(n);
    bool pred_const = true, gt_const = true;
    for (std::size_t i = 0; i < n; ++i) {
      // Small integer grids force plenty of ties.
      pred[i] = static_cast<double>(rng.index(6));
      gt[i] = static_cast<double>(rng.index(6));
      if (pred[i] != pred[0]) pred_const = false;
      if (gt[i] != gt[0]) gt_const = false;
    }
    if (!pred_const && !gt_const) {
      CHECK(srcc(pred, gt) == doctest::Approx(srcc_oracle(pred, gt)).epsilon(1e-12));
    }
    if (!gt_const) {
      CHECK(rank_accuracy(pred, gt) == doctest::Approx(rank_accuracy_oracle(pred, gt)));
    }
  }
}

TEST_CASE("rank metrics invariant under strictly monotone transforms") {
  RngStream rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.index(10);
    std::vector<double> pred(n), gt(n), warped(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.uniform(-3, 3);
      gt[i] = static_cast<double>(rng.index(5));
      warped[i] = std::exp(2.0 * pred[i]) + 1.0;  // strictly monotone
    }
    bool gt_const = std::adjacent_find(gt.begin(), gt.end(), std::not_equal_to<>()) == gt.end();
    if (gt_const) continue;
    CHECK(srcc(pred, gt) == doctest::Approx(srcc(warped, gt)).epsilon(1e-12));
    CHECK(rank_accuracy(pred, gt) == doctest::Approx(rank_accuracy(warped, gt)));
  }
}
