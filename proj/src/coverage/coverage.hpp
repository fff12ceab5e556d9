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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backends/oracle.hpp"
#include "promptforge/prompts.hpp"

namespace evalkit::coverage {

// Predicate used for answer clustering. Must be symmetric and reflexive;
// transitivity is NOT assumed.
using EquivalenceOracle = std::function<bool(const std::string&, const std::string&)>;

struct AnswerSet {
  std::string image_id;
  std::vector<std::string> answers;  // sample_index order
};

struct ClusterResult {
  std::vector<int> semantic_set_ids;       // answer index -> cluster id
  std::map<int, int> semantic_set_counts;  // cluster id -> count
  double semantic_entropy = 0.0;           // bits
  std::string final_answer;
};

// Literal semantic clustering pass: initialize each answer's id to its own
// index, then for each ordered pair (m, n), m < n, overwrite a_n's id with
// a_m's CURRENT id when the oracle affirms equivalence. Counts come from the
// final id map; entropy is Shannon entropy (base 2) of the count
// distribution; the final answer is the lowest-index representative of the
// largest cluster, ties broken by lowest cluster id.
ClusterResult semantic_cluster(const AnswerSet& answers, const EquivalenceOracle& oracle);

// Shannon entropy in bits of a cluster-size histogram.
double entropy_bits(const std::vector<int>& counts);

struct CoverageRow {
  std::string concept_label;
  std::string model;
  std::optional<double> cov_closed;   // fractions in [0,1]
  std::optional<double> cov_open;
  std::optional<double> cov_clip;
  std::optional<double> human_loose;
  std::optional<double> human_strict;
};

struct CoverageParams {
  std::size_t open_samples = 5;  // T
  double delta = 0.8;
  double gamma = 0.2;
  bool any_closed_template = false;  // non-paper mode: any template answering yes counts
};

// Eq. 2: fraction of images whose normalized closed answer is "yes". By
// default only the first closed template is asked.
double cov_closed(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                  const prompts::Concept& c, const CoverageParams& params);

// Eq. 3: fraction of images whose T open-ended answers cluster with entropy
// <= delta and whose voted answer is semantically equivalent to the concept.
double cov_open(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                const prompts::Concept& c, const CoverageParams& params);

// Baseline: fraction of images with cosine similarity >= gamma against the
// concept prompt (a score below gamma indicates misalignment).
double cov_clip(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                const std::string& concept_prompt, const CoverageParams& params);

struct HumanEval {
  double loose = 0.0;
  double strict = 0.0;
  std::size_t rows = 0;
};

// human_eval.jsonl rows: {image_id, captures_concept, defect_free}.
HumanEval ingest_human_eval(const std::string& jsonl_path);

enum class Metric { cov_closed, cov_open, cov_clip, human_loose, human_strict };

Metric metric_from_string(const std::string& s);

// Spearman coefficient between two per-concept metric columns.
double spearman_validate(const std::vector<CoverageRow>& rows, Metric a, Metric b);

// coverage_report.csv layout: concept, model, cov_closed, cov_open,
// cov_clip, human_loose, human_strict as percentages with 1 decimal.
std::string rows_to_csv(const std::vector<CoverageRow>& rows);
std::vector<CoverageRow> rows_from_csv(const std::string& csv_text);

}  // namespace evalkit::coverage
