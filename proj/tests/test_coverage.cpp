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
#include <numeric>
#include <set>

#include "coverage/coverage.hpp"
#include "support/fixtures.hpp"
#include "util/jsonl.hpp"

using namespace evalkit;
using namespace evalkit::coverage;

namespace {

// Union-find connected components over the equivalence graph; the reference
// partition for transitive oracles.
std::vector<std::set<int>> components_oracle(const std::vector<std::string>& answers,
                                             const EquivalenceOracle& eq) {
  const int n = static_cast<int>(answers.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (answers[i] == answers[j] || eq(answers[i], answers[j])) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::map<int, std::set<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].insert(i);
  std::vector<std::set<int>> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

std::vector<std::set<int>> partition_of(const ClusterResult& r) {
  std::map<int, std::set<int>> groups;
  for (std::size_t i = 0; i < r.semantic_set_ids.size(); ++i) {
    groups[r.semantic_set_ids[i]].insert(static_cast<int>(i));
  }
  std::vector<std::set<int>> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

bool same_partition(std::vector<std::set<int>> a, std::vector<std::set<int>> b) {
  auto key = [](const std::set<int>& s) { return *s.begin(); };
  std::sort(a.begin(), a.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
  std::sort(b.begin(), b.end(), [&](auto& x, auto& y) { return key(x) < key(y); });
  return a == b;
}

}  // namespace

TEST_CASE("semantic_cluster on the jogging example") {
  const auto oracle = test::synonym_oracle({{"jogging", "run"}, {"running", "run"}});
  const ClusterResult r = semantic_cluster({"img", {"running", "jogging", "sleeping"}}, oracle);
  REQUIRE(r.semantic_set_counts.size() == 2);
  std::vector<int> counts;
  for (const auto& [_, c] : r.semantic_set_counts) counts.push_back(c);
  std::sort(counts.rbegin(), counts.rend());
  CHECK(counts == std::vector<int>{2, 1});
  CHECK(r.semantic_entropy ==
        doctest::Approx(-(2.0 / 3 * std::log2(2.0 / 3) + 1.0 / 3 * std::log2(1.0 / 3)))
            .epsilon(1e-9));
  CHECK(r.semantic_entropy == doctest::Approx(0.918295834).epsilon(1e-6));
  CHECK(r.final_answer == "running");
}

TEST_CASE("semantic_cluster trivial cases") {
  const auto never = test::synonym_oracle({});
  const ClusterResult same = semantic_cluster({"i", {"walk", "walk", "walk", "walk"}}, never);
  CHECK(same.semantic_set_counts.size() == 1);
  CHECK(same.semantic_entropy == doctest::Approx(0.0));
  CHECK(same.final_answer == "walk");

  const ClusterResult all_diff = semantic_cluster({"i", {"a", "b", "c", "d"}}, never);
  CHECK(all_diff.semantic_set_counts.size() == 4);
  CHECK(all_diff.semantic_entropy == doctest::Approx(2.0));  // log2 4

  CHECK_THROWS_AS(semantic_cluster({"i", {}}, never), Error);
}

TEST_CASE("counts sum to T and entropy bounded") {
  RngStream rng(5);
  const std::vector<std::string> alphabet = {"x", "y", "z"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 1 + rng.index(6);
    AnswerSet set{"i", {}};
    for (std::size_t k = 0; k < t; ++k) set.answers.push_back(alphabet[rng.index(3)]);
    const ClusterResult r = semantic_cluster(set, test::synonym_oracle({}));
    int total = 0;
    for (const auto& [_, c] : r.semantic_set_counts) total += c;
    CHECK(total == static_cast<int>(t));
    CHECK(r.semantic_entropy >= 0.0);
    CHECK(r.semantic_entropy <= std::log2(static_cast<double>(t)) + 1e-12);
  }
}

TEST_CASE("transitive oracles: literal pass equals union-find on all short lists") {
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  // All partitions of a 3-symbol alphabet = all transitive oracles.
  const std::vector<std::map<std::string, std::string>> partitions = {
      {},                                            // a|b|c
      {{"b", "a"}},                                  // ab|c
      {{"c", "a"}},                                  // ac|b
      {{"c", "b"}},                                  // a|bc
      {{"b", "a"}, {"c", "a"}},                      // abc
  };
  RngStream rng(11);
  int checked = 0;
  for (int oracle_draw = 0; oracle_draw < 200; ++oracle_draw) {
    const auto& canon = partitions[rng.index(partitions.size())];
    const auto oracle = test::synonym_oracle(canon);
    for (std::size_t len = 1; len <= 5; ++len) {
      std::vector<std::size_t> idx(len, 0);
      while (true) {
        AnswerSet set{"i", {}};
        for (std::size_t k = 0; k < len; ++k) set.answers.push_back(alphabet[idx[k]]);
        const ClusterResult r = semantic_cluster(set, oracle);
        REQUIRE(same_partition(partition_of(r), components_oracle(set.answers, oracle)));
        ++checked;
        // next tuple
        std::size_t p = 0;
        while (p < len && ++idx[p] == 3) idx[p++] = 0;
        if (p == len) break;
      }
    }
  }
  CHECK(checked == 200 * (3 + 9 + 27 + 81 + 243));
}

TEST_CASE("non-transitive oracle follows the literal pass order") {
  // A ~ B, B ~ C, but A !~ C.
  const EquivalenceOracle oracle = [](const std::string& x, const std::string& y) {
    const std::set<std::set<std::string>> related = {{"A", "B"}, {"B", "C"}};
    return x == y || related.count({x, y}) > 0;
  };
  // Trace for [A, B, C]: ids start [0,1,2]; (0,1) A~B -> id[1]=0;
  // (0,2) A!~C -> no-op; (1,2) B~C -> id[2]=id[1]=0. One cluster.
  const ClusterResult abc = semantic_cluster({"i", {"A", "B", "C"}}, oracle);
  CHECK(abc.semantic_set_ids == std::vector<int>{0, 0, 0});
  CHECK(abc.final_answer == "A");

  // Trace for [C, A, B]: ids [0,1,2]; (0,1) C!~A; (0,2) C~B -> id[2]=0;
  // (1,2) A~B -> id[2]=id[1]=1. Partition {C}, {A,B} -- order-dependent.
  const ClusterResult cab = semantic_cluster({"i", {"C", "A", "B"}}, oracle);
  CHECK(cab.semantic_set_ids == std::vector<int>{0, 1, 1});
  CHECK(cab.semantic_set_counts.at(0) == 1);
  CHECK(cab.semantic_set_counts.at(1) == 2);
  CHECK(cab.final_answer == "A");
}

TEST_CASE("final answer tie-break prefers the lowest cluster id") {
  const auto never = test::synonym_oracle({});
  const ClusterResult r = semantic_cluster({"i", {"b", "a"}}, never);
  // Two singleton clusters tie; cluster id 0 wins, so "b" (index 0).
  CHECK(r.final_answer == "b");
}

TEST_CASE("entropy_bits checks") {
  CHECK(entropy_bits({5}) == doctest::Approx(0.0));
  for (int k = 1; k <= 32; ++k) {
    std::vector<int> counts(k, 3);
    CHECK(entropy_bits(counts) == doctest::Approx(std::log2(k)).epsilon(1e-12));
  }
  CHECK(entropy_bits({2, 1}) == doctest::Approx(0.918295834).epsilon(1e-5));
  CHECK(entropy_bits({3, 2}) == doctest::Approx(0.9709506).epsilon(1e-6));
}

namespace {

// Builds a hub whose scripted VQA/embedding backends yield exact per-image
// outcomes: `yes_count` closed yes answers, `open_count` images with
// coherent open answers equal to the concept, `clip_count` images at
// cosine 0.35 (rest at 0.1).
struct CoverageFixture {
  test::TempDir tmp{"coverage_fixture"};
  std::shared_ptr<test::ScriptedBackend> backend = std::make_shared<test::ScriptedBackend>();
  std::unique_ptr<backends::OracleHub> hub;
  std::vector<std::string> refs;

  CoverageFixture(int n, int yes_count, int open_count, int clip_count) {
    for (int i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "img/%04d", i);
      refs.push_back(buf);
    }
    auto index_of = [](const std::string& ref) {
      return std::stoi(ref.substr(ref.find('/') + 1));
    };
    backend->script(backends::BackendKind::vqa,
                    [=](const nlohmann::json& payload, std::uint32_t sample) {
                      const int idx = index_of(payload.at("image").get<std::string>());
                      if (payload.value("question_kind", "") == "closed") {
                        return test::text_response(idx < yes_count ? "Yes." : "No.");
                      }
                      if (idx < open_count) return test::text_response("running");
                      // Five mutually non-equivalent junk answers: entropy
                      // log2(5) > delta, so the image never counts.
                      return test::text_response("junk" + std::to_string(sample));
                    });
    backend->script(backends::BackendKind::equivalence,
                    test::equivalence_responder({{"jogging", "run"}, {"running", "run"}}));
    backend->script(backends::BackendKind::embed_image,
                    [=](const nlohmann::json& payload, std::uint32_t) {
                      const int idx = index_of(payload.at("image").get<std::string>());
                      return idx < clip_count ? test::vector_response({0.35, std::sqrt(1 - 0.35 * 0.35)})
                                              : test::vector_response({0.1, std::sqrt(1 - 0.01)});
                    });
    backend->script(backends::BackendKind::embed_text, [](const nlohmann::json&, std::uint32_t) {
      return test::vector_response({1.0, 0.0});
    });
    hub = std::make_unique<backends::OracleHub>(
        std::make_shared<backends::TranscriptCache>(tmp.path(), backends::CacheMode::record),
        backend);
  }
};

prompts::Concept run_concept() {
  return prompts::ConceptVocabulary::load(test::data_dir() + "/concepts.jsonl")
      .find(prompts::Category::action, "run");
}

}  // namespace

TEST_CASE("cov_closed fraction and trivial cases") {
  CoverageFixture f(50, 20, 0, 0);
  CoverageParams params;
  CHECK(cov_closed(*f.hub, f.refs, run_concept(), params) == doctest::Approx(0.4));

  CoverageFixture none(10, 0, 0, 0);
  CHECK(cov_closed(*none.hub, none.refs, run_concept(), params) == doctest::Approx(0.0));

  CoverageFixture one(1, 1, 0, 0);
  CHECK(cov_closed(*one.hub, one.refs, run_concept(), params) == doctest::Approx(1.0));
}

TEST_CASE("cov_open: coherent answers pass, split answers fail the entropy gate") {
  CoverageParams params;  // T=5, delta=0.8
  CoverageFixture f(10, 0, 7, 0);
  CHECK(cov_open(*f.hub, f.refs, run_concept(), params) == doctest::Approx(0.7));
  CHECK_THROWS_AS(cov_open(*f.hub, {}, run_concept(), params), Error);

  // 3/2 split into two non-equivalent clusters: entropy 0.971 > 0.8, even
  // though the majority matches the concept.
  test::TempDir tmp("split");
  auto backend = std::make_shared<test::ScriptedBackend>();
  backend->script(backends::BackendKind::vqa, [](const nlohmann::json&, std::uint32_t sample) {
    return test::text_response(sample < 3 ? "running" : "floating");
  });
  backend->script(backends::BackendKind::equivalence,
                  test::equivalence_responder({{"running", "run"}}));
  backends::OracleHub hub(
      std::make_shared<backends::TranscriptCache>(tmp.path(), backends::CacheMode::record),
      backend);
  CHECK(cov_open(hub, {"img/0000"}, run_concept(), params) == doctest::Approx(0.0));
}

TEST_CASE("cov_clip threshold semantics") {
  CoverageParams params;  // gamma = 0.2
  CoverageFixture f(10, 0, 0, 4);
  CHECK(cov_clip(*f.hub, f.refs, "a realistic photo of a person who is running.", params) ==
        doctest::Approx(0.4));

  // Boundary: a score exactly at gamma counts as aligned.
  test::TempDir tmp("boundary");
  auto backend = std::make_shared<test::ScriptedBackend>();
  backend->script(backends::BackendKind::embed_image, [](const nlohmann::json&, std::uint32_t) {
    return test::vector_response({0.2, std::sqrt(1.0 - 0.04)});
  });
  backend->script(backends::BackendKind::embed_text, [](const nlohmann::json&, std::uint32_t) {
    return test::vector_response({1.0, 0.0});
  });
  backends::OracleHub hub(
      std::make_shared<backends::TranscriptCache>(tmp.path(), backends::CacheMode::record),
      backend);
  CHECK(hub.clip_score("x", "t") == doctest::Approx(0.2));
  CHECK(cov_clip(hub, {"x"}, "t", params) == doctest::Approx(1.0));
}

TEST_CASE("human eval ingestion") {
  test::TempDir tmp("human");
  write_jsonl(tmp.file("all_true.jsonl"),
              {{{"image_id", "a"}, {"captures_concept", true}, {"defect_free", true}},
               {{"image_id", "b"}, {"captures_concept", true}, {"defect_free", true}}});
  const HumanEval all = ingest_human_eval(tmp.file("all_true.jsonl"));
  CHECK(all.loose == doctest::Approx(1.0));
  CHECK(all.strict == doctest::Approx(1.0));

  // 10 rows, 8 capture, 5 of those defect-free -> 0.8 / 0.5.
  std::vector<nlohmann::json> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({{"image_id", std::to_string(i)},
                    {"captures_concept", i < 8},
                    {"defect_free", i < 5}});
  }
  write_jsonl(tmp.file("mixed.jsonl"), rows);
  const HumanEval mixed = ingest_human_eval(tmp.file("mixed.jsonl"));
  CHECK(mixed.loose == doctest::Approx(0.8));
  CHECK(mixed.strict == doctest::Approx(0.5));
  CHECK(mixed.strict <= mixed.loose);

  write_text_file(tmp.file("bad.jsonl"), "{\"image_id\":\"x\",\"captures_concept\":\"yep\"}\n");
  try {
    ingest_human_eval(tmp.file("bad.jsonl"));
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.detail().at("line") == 1);
  }
}

TEST_CASE("human_strict <= human_loose on random files") {
  RngStream rng(77);
  test::TempDir tmp("human_prop");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<nlohmann::json> rows;
    const std::size_t n = 1 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back({{"image_id", std::to_string(i)},
                      {"captures_concept", rng.uniform() < 0.7},
                      {"defect_free", rng.uniform() < 0.5}});
    }
    const std::string path = tmp.file("t" + std::to_string(trial) + ".jsonl");
    write_jsonl(path, rows);
    const HumanEval he = ingest_human_eval(path);
    CHECK(he.strict <= he.loose + 1e-12);
  }
}

TEST_CASE("spearman_validate reproduces the published correlations") {
  struct Expected {
    const char* file;
    double closed_loose, open_strict;
  };
  const Expected cases[] = {{"coverage_sd15.csv", 0.61, 0.51},
                            {"coverage_sd21.csv", 0.71, 0.58},
                            {"coverage_sdxl.csv", 0.48, 0.69}};
  for (const auto& c : cases) {
    const auto rows = rows_from_csv(read_text_file(test::data_dir() + "/fixtures/" + c.file));
    REQUIRE(rows.size() == 30);
    CHECK(spearman_validate(rows, Metric::cov_closed, Metric::human_loose) ==
          doctest::Approx(c.closed_loose).epsilon(0.035));
    CHECK(std::abs(spearman_validate(rows, Metric::cov_closed, Metric::human_loose) -
                   c.closed_loose) <= 0.02);
    CHECK(std::abs(spearman_validate(rows, Metric::cov_open, Metric::human_strict) -
                   c.open_strict) <= 0.02);
  }
}

TEST_CASE("spearman_validate preconditions") {
  std::vector<CoverageRow> rows(2);
  rows[0].cov_closed = 0.5;
  rows[0].human_loose = 0.4;
  rows[1].cov_closed = 0.7;
  rows[1].human_loose = 0.6;
  CHECK_THROWS_AS(spearman_validate(rows, Metric::cov_closed, Metric::human_loose), Error);

  rows.push_back(rows[0]);
  rows[2].cov_closed = 0.5;  // constant column after dedupe? no: column {0.5,0.7,0.5} fine
  rows[2].human_loose = 0.4;
  CHECK_NOTHROW(spearman_validate(rows, Metric::cov_closed, Metric::human_loose));

  // identical columns -> 1.0
  std::vector<CoverageRow> same(3);
  for (int i = 0; i < 3; ++i) {
    same[i].cov_closed = 0.1 * (i + 1);
    same[i].cov_open = 0.1 * (i + 1);
  }
  CHECK(spearman_validate(same, Metric::cov_closed, Metric::cov_open) == doctest::Approx(1.0));
}

TEST_CASE("coverage csv round trip uses percent with one decimal") {
  std::vector<CoverageRow> rows(1);
  rows[0].concept_label = "run";
  rows[0].model = "SDXL";
  rows[0].cov_closed = 0.988;
  rows[0].cov_open = 0.986;
  rows[0].cov_clip = 0.99;
  const std::string csv = rows_to_csv(rows);
  CHECK(csv.find("run,SDXL,98.8,98.6,99.0,,") != std::string::npos);
  const auto parsed = rows_from_csv(csv);
  REQUIRE(parsed.size() == 1);
  CHECK(*parsed[0].cov_closed == doctest::Approx(0.988));
  CHECK_FALSE(parsed[0].human_loose.has_value());
}
