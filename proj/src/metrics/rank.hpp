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

#include <span>
#include <vector>

namespace evalkit::metrics {

// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman's rank correlation with average ranks for ties. Throws a metric
// error on length mismatch, n < 2, or zero rank variance in either input.
double srcc(std::span<const double> pred, std::span<const double> gt);

// Fraction of unordered pairs with distinct ground-truth values whose
// predicted ordering matches. Pairs tied in gt are excluded from the
// denominator; pairs tied in pred but not in gt count as incorrect.
double rank_accuracy(std::span<const double> pred, std::span<const double> gt);

}  // namespace evalkit::metrics
