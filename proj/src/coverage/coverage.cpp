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

#include "coverage/coverage.hpp"

#include <cmath>
#include <sstream>

#include "metrics/rank.hpp"
#include "util/error.hpp"
#include "util/jsonl.hpp"

namespace evalkit::coverage {

double entropy_bits(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c <= 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

ClusterResult semantic_cluster(const AnswerSet& answers, const EquivalenceOracle& oracle) {
  const std::size_t t = answers.answers.size();
  if (t == 0) {
    throw Error(ErrorCode::precondition, "semantic_cluster requires a non-empty answer set",
                {{"image_id", answers.image_id}});
  }
  ClusterResult out;
  out.semantic_set_ids.resize(t);
  for (std::size_t j = 0; j < t; ++j) out.semantic_set_ids[j] = static_cast<int>(j);

  for (std::size_t m = 0; m < t; ++m) {
    for (std::size_t n = m + 1; n < t; ++n) {
      if (answers.answers[m] == answers.answers[n] ||
          oracle(answers.answers[m], answers.answers[n])) {
        out.semantic_set_ids[n] = out.semantic_set_ids[m];
      }
    }
  }

  for (int id : out.semantic_set_ids) out.semantic_set_counts[id]++;

  std::vector<int> counts;
  counts.reserve(out.semantic_set_counts.size());
  for (const auto& [_, c] : out.semantic_set_counts) counts.push_back(c);
  out.semantic_entropy = entropy_bits(counts);

  // Largest cluster, ties broken by lowest cluster id (map iteration is
  // id-ascending); representative is the lowest-index member.
  int best_id = -1, best_count = -1;
  for (const auto& [id, c] : out.semantic_set_counts) {
    if (c > best_count) {
      best_count = c;
      best_id = id;
    }
  }
  for (std::size_t j = 0; j < t; ++j) {
    if (out.semantic_set_ids[j] == best_id) {
      out.final_answer = answers.answers[j];
      break;
    }
  }
  return out;
}

namespace {

std::string first_or_throw(const std::vector<std::string>& v, const char* what) {
  if (v.empty()) throw Error(ErrorCode::config, std::string("no ") + what + " template configured");
  return v.front();
}

}  // namespace

double cov_closed(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                  const prompts::Concept& c, const CoverageParams& params) {
  if (image_refs.empty()) throw Error(ErrorCode::precondition, "cov_closed requires >= 1 image");
  const prompts::CoverageQuestions q = prompts::coverage_questions(c);
  std::size_t yes = 0;
  for (const auto& ref : image_refs) {
    bool hit = false;
    if (params.any_closed_template) {
      for (const auto& question : q.closed) {
        const auto ans = hub.vqa_ask(ref, question, 1, backends::QuestionKind::closed);
        if (ans.front() == "yes") {
          hit = true;
          break;
        }
      }
    } else {
      const auto ans =
          hub.vqa_ask(ref, first_or_throw(q.closed, "closed"), 1, backends::QuestionKind::closed);
      hit = ans.front() == "yes";
    }
    if (hit) ++yes;
  }
  return static_cast<double>(yes) / static_cast<double>(image_refs.size());
}

double cov_open(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                const prompts::Concept& c, const CoverageParams& params) {
  if (image_refs.empty()) throw Error(ErrorCode::precondition, "cov_open requires >= 1 image");
  if (params.open_samples < 2) {
    throw Error(ErrorCode::precondition, "cov_open requires T >= 2");
  }
  if (params.delta <= 0) throw Error(ErrorCode::precondition, "cov_open requires delta > 0");
  const prompts::CoverageQuestions q = prompts::coverage_questions(c);
  const std::string question = first_or_throw(q.open, "open");
  const std::string target = c.gerund ? *c.gerund : c.name;
  std::size_t covered = 0;
  for (const auto& ref : image_refs) {
    AnswerSet set;
    set.image_id = ref;
    set.answers = hub.vqa_ask(ref, question, params.open_samples, backends::QuestionKind::open);
    const ClusterResult cluster = semantic_cluster(
        set, [&hub](const std::string& a, const std::string& b) { return hub.sem_equivalent(a, b); });
    if (cluster.semantic_entropy <= params.delta &&
        hub.sem_equivalent(cluster.final_answer, target)) {
      ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(image_refs.size());
}

double cov_clip(backends::OracleHub& hub, const std::vector<std::string>& image_refs,
                const std::string& concept_prompt, const CoverageParams& params) {
  if (image_refs.empty()) throw Error(ErrorCode::precondition, "cov_clip requires >= 1 image");
  std::size_t aligned = 0;
  for (const auto& ref : image_refs) {
    if (hub.clip_score(ref, concept_prompt) >= params.gamma) ++aligned;
  }
  return static_cast<double>(aligned) / static_cast<double>(image_refs.size());
}

HumanEval ingest_human_eval(const std::string& jsonl_path) {
  HumanEval out;
  std::size_t captures = 0, strict = 0, lineno = 0;
  for (const auto& j : read_jsonl(jsonl_path)) {
    ++lineno;
    if (!j.is_object() || !j.contains("captures_concept") || !j.contains("defect_free") ||
        !j.at("captures_concept").is_boolean() || !j.at("defect_free").is_boolean()) {
      throw Error(ErrorCode::io, "malformed human_eval row at line " + std::to_string(lineno),
                  {{"path", jsonl_path}, {"line", lineno}});
    }
    const bool c = j.at("captures_concept").get<bool>();
    const bool d = j.at("defect_free").get<bool>();
    captures += c ? 1 : 0;
    strict += (c && d) ? 1 : 0;
    out.rows++;
  }
  if (out.rows == 0) throw Error(ErrorCode::precondition, "human_eval file has no rows");
  out.loose = static_cast<double>(captures) / static_cast<double>(out.rows);
  out.strict = static_cast<double>(strict) / static_cast<double>(out.rows);
  return out;
}

Metric metric_from_string(const std::string& s) {
  if (s == "cov_closed") return Metric::cov_closed;
  if (s == "cov_open") return Metric::cov_open;
  if (s == "cov_clip") return Metric::cov_clip;
  if (s == "human_loose") return Metric::human_loose;
  if (s == "human_strict") return Metric::human_strict;
  throw Error(ErrorCode::config, "unknown coverage metric: " + s);
}

namespace {

std::optional<double> metric_value(const CoverageRow& row, Metric m) {
  switch (m) {
    case Metric::cov_closed: return row.cov_closed;
    case Metric::cov_open: return row.cov_open;
    case Metric::cov_clip: return row.cov_clip;
    case Metric::human_loose: return row.human_loose;
    case Metric::human_strict: return row.human_strict;
  }
  return std::nullopt;
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v * 100.0);
  return buf;
}

}  // namespace

double spearman_validate(const std::vector<CoverageRow>& rows, Metric a, Metric b) {
  std::vector<double> xs, ys;
  for (const auto& row : rows) {
    const auto va = metric_value(row, a);
    const auto vb = metric_value(row, b);
    if (va && vb) {
      xs.push_back(*va);
      ys.push_back(*vb);
    }
  }
  if (xs.size() < 3) {
    throw Error(ErrorCode::precondition, "spearman_validate requires >= 3 rows with both metrics");
  }
  return metrics::srcc(xs, ys);
}

std::string rows_to_csv(const std::vector<CoverageRow>& rows) {
  std::ostringstream out;
  out << "concept,model,cov_closed,cov_open,cov_clip,human_loose,human_strict\n";
  for (const auto& r : rows) {
    out << r.concept_label << ',' << r.model << ',' << pct(r.cov_closed) << ',' << pct(r.cov_open)
        << ',' << pct(r.cov_clip) << ',' << pct(r.human_loose) << ',' << pct(r.human_strict)
        << '\n';
  }
  return out.str();
}

std::vector<CoverageRow> rows_from_csv(const std::string& csv_text) {
  std::vector<CoverageRow> rows;
  std::istringstream in(csv_text);
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    while (cells.size() < 7) cells.push_back("");
    if (cells.size() != 7) {
      throw Error(ErrorCode::io, "malformed coverage csv row at line " + std::to_string(lineno));
    }
    CoverageRow r;
    r.concept_label = cells[0];
    r.model = cells[1];
    auto parse = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s) / 100.0;
    };
    r.cov_closed = parse(cells[2]);
    r.cov_open = parse(cells[3]);
    r.cov_clip = parse(cells[4]);
    r.human_loose = parse(cells[5]);
    r.human_strict = parse(cells[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace evalkit::coverage
