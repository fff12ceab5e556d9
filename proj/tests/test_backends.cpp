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

#include "backends/oracle.hpp"
#include "support/fixtures.hpp"

using namespace evalkit;
using namespace evalkit::backends;
using evalkit::test::ScriptedBackend;

namespace {

std::shared_ptr<ScriptedBackend> make_vqa_backend() {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script(BackendKind::vqa, [](const nlohmann::json& payload, std::uint32_t sample) {
    const std::string q = payload.at("question").get<std::string>();
    if (payload.value("question_kind", "") == "closed") {
      return test::text_response(sample % 2 == 0 ? "Yes, she is." : "no");
    }
    return test::text_response("  running sample " + std::to_string(sample) + "  ");
  });
  backend->script(BackendKind::generate, [](const nlohmann::json& payload, std::uint32_t sample) {
    return test::image_response("img/" + std::to_string(sample) + ".ppm");
  });
  return backend;
}

}  // namespace

TEST_CASE("request hash is stable and canonical") {
  BackendRequest a{BackendKind::vqa, {{"question", "Is it?"}, {"image", "x"}}, 0};
  BackendRequest b{BackendKind::vqa, {{"image", "x"}, {"question", "Is it?"}}, 3};
  CHECK(a.hash() == b.hash());  // key order and sample index do not matter
  BackendRequest c{BackendKind::equivalence, a.payload, 0};
  CHECK(a.hash() != c.hash());  // kind does
  CHECK(a.hash().size() == 64);
}

TEST_CASE("closed answer normalization") {
  CHECK(normalize_closed_answer("Yes, she is.").answer == "yes");
  CHECK(normalize_closed_answer("Yes, she is.").parsed);
  CHECK(normalize_closed_answer("NO").answer == "no");
  CHECK(normalize_closed_answer("  no, not at all ").answer == "no");
  const auto odd = normalize_closed_answer("maybe?");
  CHECK(odd.answer == "no");  // conservative
  CHECK_FALSE(odd.parsed);
  CHECK_FALSE(normalize_closed_answer("nope").parsed);  // word boundary
  CHECK_FALSE(normalize_closed_answer("yesterday").parsed);
}

TEST_CASE("cache put/get round trip and sample separation") {
  test::TempDir tmp("cache");
  TranscriptCache cache(tmp.path(), CacheMode::record);
  Transcript t;
  t.kind = BackendKind::vqa;
  t.payload = {{"question", "q"}, {"image", "i"}};
  t.sample_index = 0;
  t.request_hash = BackendRequest{t.kind, t.payload, 0}.hash();
  t.response = test::text_response("yes");
  t.backend_id = "test";
  cache.put(t);
  Transcript t1 = t;
  t1.sample_index = 1;
  t1.response = test::text_response("no");
  cache.put(t1);

  CHECK(cache.get(t.request_hash, 0)->response == t.response);
  CHECK(cache.get(t.request_hash, 1)->response == t1.response);
  CHECK_FALSE(cache.get(t.request_hash, 2).has_value());

  // A fresh replay-mode cache reads the same file.
  TranscriptCache replay(tmp.path(), CacheMode::replay);
  CHECK(replay.size() == 2);
  CHECK(replay.get_or_throw(t.request_hash, 1).response == t1.response);
  CHECK_THROWS_AS(replay.put(t), Error);
}

TEST_CASE("replay miss names the request hash") {
  test::TempDir tmp("cache_miss");
  TranscriptCache cache(tmp.path(), CacheMode::replay);
  const std::string hash = BackendRequest{BackendKind::vqa, {{"q", 1}}, 0}.hash();
  try {
    cache.get_or_throw(hash, 0);
    FAIL("expected a cache miss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::cache_miss);
    CHECK(std::string(e.what()).find(hash) != std::string::npos);
  }
}

TEST_CASE("record then strict replay: zero network calls") {
  test::TempDir tmp("record_replay");
  auto backend = make_vqa_backend();
  {
    OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);
    hub.clock = [] { return 1700000000000LL; };
    const auto refs = hub.generate_images("a prompt", 3, {{"model", "m"}});
    CHECK(refs == std::vector<std::string>{"img/0.ppm", "img/1.ppm", "img/2.ppm"});
    const auto answers = hub.vqa_ask("img/0.ppm", "What action?", 5, QuestionKind::open);
    CHECK(answers.size() == 5);
    CHECK(answers[2] == "running sample 2");  // trimmed
    CHECK(backend->calls() == 8);
  }
  {
    auto cache = std::make_shared<TranscriptCache>(tmp.path(), CacheMode::replay);
    OracleHub hub(cache, nullptr);
    const auto refs = hub.generate_images("a prompt", 3, {{"model", "m"}});
    CHECK(refs == std::vector<std::string>{"img/0.ppm", "img/1.ppm", "img/2.ppm"});
    const auto answers = hub.vqa_ask("img/0.ppm", "What action?", 5, QuestionKind::open);
    CHECK(answers[0] == "running sample 0");
    CHECK(hub.network_calls() == 0);
    // Unseen request in strict replay.
    CHECK_THROWS_AS(hub.vqa_ask("img/9.ppm", "What action?", 1, QuestionKind::open), Error);
  }
}

TEST_CASE("mixed mode reads cache first and records misses") {
  test::TempDir tmp("mixed");
  auto backend = make_vqa_backend();
  {
    OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);
    hub.vqa_ask("img/0.ppm", "Is the person running in the image?", 1, QuestionKind::closed);
  }
  const std::size_t calls_before = backend->calls();
  OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::mixed), backend);
  // Hit: no new network call.
  const auto hit =
      hub.vqa_ask("img/0.ppm", "Is the person running in the image?", 1, QuestionKind::closed);
  CHECK(hit[0] == "yes");
  CHECK(backend->calls() == calls_before);
  // Miss: recorded through.
  hub.vqa_ask("img/1.ppm", "Is the person running in the image?", 1, QuestionKind::closed);
  CHECK(backend->calls() == calls_before + 1);
  TranscriptCache verify(tmp.path(), CacheMode::replay);
  CHECK(verify.size() == 2);
}

TEST_CASE("vqa_ask closed normalization and precondition") {
  test::TempDir tmp("vqa");
  auto hub = OracleHub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record),
                       make_vqa_backend());
  const auto answers = hub.vqa_ask("img/0.ppm", "Is it?", 2, QuestionKind::closed);
  CHECK(answers == std::vector<std::string>{"yes", "no"});
  CHECK_THROWS_AS(hub.vqa_ask("img/0.ppm", "Is it?", 0, QuestionKind::closed), Error);
  CHECK_THROWS_AS(hub.generate_images("p", 0, {}), Error);
}

TEST_CASE("unparsed closed answers count against coverage with a warning") {
  test::TempDir tmp("warn");
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script(BackendKind::vqa, [](const nlohmann::json&, std::uint32_t) {
    return test::text_response("It is unclear.");
  });
  OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);
  const auto answers = hub.vqa_ask("img/0.ppm", "Is it?", 1, QuestionKind::closed);
  CHECK(answers[0] == "no");
  CHECK(hub.normalizer_warnings() == 1);
  // The warning flag is recorded in the transcript.
  TranscriptCache verify(tmp.path(), CacheMode::replay);
  const std::string hash =
      BackendRequest{BackendKind::vqa,
                     {{"image", "img/0.ppm"}, {"question", "Is it?"}, {"question_kind", "closed"}},
                     0}
          .hash();
  const auto t = verify.get_or_throw(hash, 0);
  REQUIRE(t.warnings.size() == 1);
  CHECK(t.warnings[0] == "unparsed_closed_answer");
}

TEST_CASE("sem_equivalent: reflexive, symmetric, fixture verdicts") {
  test::TempDir tmp("equiv");
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script(BackendKind::equivalence,
                  test::equivalence_responder({{"jogging", "run"}, {"running", "run"}}));
  OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);

  CHECK(hub.sem_equivalent("running", "running"));
  CHECK(backend->calls() == 0);  // identity short-circuits

  CHECK(hub.sem_equivalent("jogging", "running"));
  CHECK_FALSE(hub.sem_equivalent("running", "sleeping"));
  // Symmetric by construction: flipped arguments reuse the same transcripts.
  const std::size_t calls = backend->calls();
  OracleHub hub2(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::replay), nullptr);
  CHECK(hub2.sem_equivalent("running", "jogging"));
  CHECK(hub2.sem_equivalent("sleeping", "running") == false);
  CHECK(backend->calls() == calls);
  CHECK_THROWS_AS(hub.sem_equivalent("", "x"), Error);
}

TEST_CASE("sem_equivalent rejects non-parseable verdicts") {
  test::TempDir tmp("equiv_bad");
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script(BackendKind::equivalence, [](const nlohmann::json&, std::uint32_t) {
    return test::text_response("perhaps");
  });
  OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);
  CHECK_THROWS_AS(hub.sem_equivalent("a", "b"), Error);
}

TEST_CASE("clip_score cosine values") {
  test::TempDir tmp("clip");
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script(BackendKind::embed_image, [](const nlohmann::json& p, std::uint32_t) {
    if (p.at("image") == "identical") return test::vector_response({0.5, 0.5});
    if (p.at("image") == "orthogonal") return test::vector_response({1.0, 0.0});
    return test::vector_response({1.0, 0.0});
  });
  backend->script(BackendKind::embed_text, [](const nlohmann::json& p, std::uint32_t) {
    if (p.at("text") == "identical") return test::vector_response({0.5, 0.5});
    if (p.at("text") == "orthogonal") return test::vector_response({0.0, 1.0});
    if (p.at("text") == "mismatch") return test::vector_response({1.0, 0.0, 0.0});
    return test::vector_response({0.6, 0.8});
  });
  OracleHub hub(std::make_shared<TranscriptCache>(tmp.path(), CacheMode::record), backend);
  CHECK(hub.clip_score("identical", "identical") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hub.clip_score("orthogonal", "orthogonal") == doctest::Approx(0.0).epsilon(1e-12));
  // (1,0) . (0.6,0.8) = 0.6 by hand.
  CHECK(hub.clip_score("pair", "pair") == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(hub.clip_score("pair", "mismatch"), Error);
}
