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

#include "metrics/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "util/error.hpp"

namespace evalkit::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::precondition, "srcc: length mismatch");
  }
  const std::size_t n = pred.size();
  if (n < 2) throw Error(ErrorCode::precondition, "srcc: need at least 2 values");
  const std::vector<double> rp = average_ranks(pred);
  const std::vector<double> rg = average_ranks(gt);
  double mp = 0, mg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mp += rp[i];
    mg += rg[i];
  }
  mp /= static_cast<double>(n);
  mg /= static_cast<double>(n);
  double cov = 0, vp = 0, vg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = rp[i] - mp, dg = rg[i] - mg;
    cov += dp * dg;
    vp += dp * dp;
    vg += dg * dg;
  }
  if (vp == 0.0 || vg == 0.0) {
    throw Error(ErrorCode::metric, "srcc undefined: constant sequence (zero rank variance)");
  }
  return cov / std::sqrt(vp * vg);
}

double rank_accuracy(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::precondition, "rank_accuracy: length mismatch");
  }
  const std::size_t n = pred.size();
  if (n < 2) throw Error(ErrorCode::precondition, "rank_accuracy: need at least 2 values");
  std::size_t valid = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (gt[i] == gt[j]) continue;
      ++valid;
      const double dp = pred[i] - pred[j];
      const double dg = gt[i] - gt[j];
      if (dp != 0.0 && ((dp > 0) == (dg > 0))) ++correct;
    }
  }
  if (valid == 0) {
    throw Error(ErrorCode::metric, "rank_accuracy undefined: no pairs with distinct ground truth");
  }
  return static_cast<double>(correct) / static_cast<double>(valid);
}

}  // namespace evalkit::metrics
