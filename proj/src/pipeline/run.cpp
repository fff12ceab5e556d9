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

#include "pipeline/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "aesthetics/can.hpp"
#include "coverage/coverage.hpp"
#include "fairness/fairness.hpp"
#include "promptforge/prompts.hpp"
#include "realism/defect.hpp"
#include "util/error.hpp"
#include "util/hash.hpp"
#include "util/jsonl.hpp"

namespace fs = std::filesystem;

namespace evalkit::pipeline {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_json_report(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::shared_ptr<backends::LiveBackend> make_live_backend(const RunConfig& cfg) {
  backends::HttpBackend::Endpoints ep;
  ep.generator_url = cfg.get("backends.generator_url");
  ep.vqa_url = cfg.get("backends.vqa_url");
  ep.equivalence_url = cfg.get("backends.equivalence_url");
  ep.embed_url = cfg.get("backends.embed_url");
  ep.bearer_token = cfg.get("backends.bearer_token");
  if (ep.generator_url.empty() && ep.vqa_url.empty() && ep.equivalence_url.empty() &&
      ep.embed_url.empty()) {
    return nullptr;
  }
  return std::make_shared<backends::HttpBackend>(ep);
}

struct Session {
  std::shared_ptr<backends::TranscriptCache> cache;
  std::unique_ptr<backends::OracleHub> hub;
};

Session open_session(const RunConfig& cfg) {
  Session s;
  s.cache = std::make_shared<backends::TranscriptCache>(cfg.cache_dir(), cfg.mode());
  const std::string tpl =
      cfg.get("backends.equivalence_template", "Does '{a}' imply '{b}'? Answer yes or no.");
  s.hub = std::make_unique<backends::OracleHub>(s.cache, make_live_backend(cfg), tpl);
  return s;
}

prompts::ConceptVocabulary load_vocab(const RunConfig& cfg) {
  return prompts::ConceptVocabulary::load(cfg.data_dir() + "/concepts.jsonl");
}

std::string concept_slug(const std::string& label) {
  std::string s = label;
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

// Generation prompt for a concept; doubles as the cov_clip text.
std::string concept_prompt(const RunConfig& cfg, const prompts::Concept& c) {
  const std::string tpl =
      cfg.get("coverage.prompt_template", "a realistic photo of a person who is {c}.");
  std::string out = tpl;
  const std::size_t pos = out.find("{c}");
  if (pos != std::string::npos) out.replace(pos, 3, c.prompt_form);
  return out;
}

std::vector<prompts::Concept> coverage_scope(const RunConfig& cfg,
                                             const prompts::ConceptVocabulary& vocab) {
  const auto subset = cfg.raw().get_list("coverage.concepts");
  const auto all = vocab.coverage_concepts();
  if (subset.empty()) return all;
  std::vector<prompts::Concept> out;
  for (const auto& name : subset) {
    bool found = false;
    for (const auto& c : all) {
      if (c.name == name || c.label == name) {
        out.push_back(c);
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::config, "coverage concept not found: " + name);
  }
  return out;
}

std::vector<std::string> generation_refs(const RunConfig& cfg, backends::OracleHub& hub,
                                         const std::string& prompt) {
  std::size_t n = cfg.images_per_prompt();
  if (cfg.limit()) n = std::min(n, *cfg.limit());
  nlohmann::json params{{"model", cfg.model()}, {"seed", cfg.seed()}};
  std::vector<std::string> refs = hub.generate_images(prompt, n, params);
  // --limit subsampling is deterministic by sorted image id.
  std::sort(refs.begin(), refs.end());
  return refs;
}

std::string model_dir(const RunConfig& cfg) {
  const std::string dir = cfg.out_dir() + "/" + model_slug(cfg.model());
  ensure_dir(dir);
  return dir;
}

// generate: resolve image references for every prompt in scope and write
// the manifest.
RunResult run_generate(const RunConfig& cfg) {
  Session s = open_session(cfg);
  const auto vocab = load_vocab(cfg);
  const std::string scope = cfg.get("generate.scope", "coverage");
  std::vector<nlohmann::json> manifest;
  if (scope == "coverage" || scope == "both") {
    for (const auto& c : coverage_scope(cfg, vocab)) {
      const std::string prompt = concept_prompt(cfg, c);
      const auto refs = generation_refs(cfg, *s.hub, prompt);
      for (std::size_t i = 0; i < refs.size(); ++i) {
        manifest.push_back({{"scope", "coverage"},
                            {"concept", c.label},
                            {"prompt", prompt},
                            {"index", i},
                            {"ref", refs[i]}});
      }
    }
  }
  if (scope == "fairness" || scope == "both") {
    for (const auto& c : prompts::fairness_concepts(vocab)) {
      const std::string prompt = prompts::fairness_prompt_for(c);
      const auto refs = generation_refs(cfg, *s.hub, prompt);
      for (std::size_t i = 0; i < refs.size(); ++i) {
        manifest.push_back({{"scope", "fairness"},
                            {"concept", c.label},
                            {"prompt", prompt},
                            {"index", i},
                            {"ref", refs[i]}});
      }
    }
  }
  const std::string path = model_dir(cfg) + "/images_manifest.jsonl";
  write_jsonl(path, manifest);
  return {{path}};
}

RunResult run_aesthetics(const RunConfig& cfg) {
  std::vector<std::pair<std::string, double>> scores;  // (image_id, general score)
  nlohmann::json source;
  if (cfg.has("aesthetics.scores_file")) {
    const std::string file = cfg.get("aesthetics.scores_file");
    for (const auto& row : read_jsonl(file)) {
      scores.emplace_back(row.at("image_id").get<std::string>(), row.at("score").get<double>());
    }
    source = {{"kind", "score_fixture"}, {"file", file}};
  } else if (cfg.has("aesthetics.checkpoint") && cfg.has("aesthetics.manifest")) {
    aes::CanModel model = aes::CanModel::load(cfg.get("aesthetics.checkpoint"));
    const std::string manifest = cfg.get("aesthetics.manifest");
    const fs::path base = fs::path(manifest).parent_path();
    for (const auto& row : read_jsonl(manifest)) {
      const img::Image image = img::load_image((base / row.at("path").get<std::string>()).string());
      scores.emplace_back(row.at("image_id").get<std::string>(), model.forward(image)[0]);
    }
    source = {{"kind", "can_model"}, {"checkpoint", cfg.get("aesthetics.checkpoint")}};
  } else {
    throw Error(ErrorCode::config,
                "aesthetics needs aesthetics.scores_file or aesthetics.checkpoint + aesthetics.manifest");
  }
  std::sort(scores.begin(), scores.end());
  if (cfg.limit() && scores.size() > *cfg.limit()) scores.resize(*cfg.limit());

  std::vector<double> values;
  nlohmann::json per_image = nlohmann::json::array();
  for (const auto& [id, v] : scores) {
    values.push_back(v);
    per_image.push_back({{"image_id", id}, {"score", v}});
  }
  const aes::ScoreSummary summary = aes::summarize_scores(values);
  nlohmann::json report{{"model", cfg.model()},
                        {"source", source},
                        {"summary",
                         {{"mean", round2(summary.mean)},
                          {"std", round2(summary.stddev)},
                          {"count", summary.count}}},
                        {"per_image", per_image},
                        {"provenance", cfg.provenance("none")}};
  const std::string path = model_dir(cfg) + "/aesthetics.json";
  write_json_report(path, report);
  return {{path}};
}

RunResult run_realism(const RunConfig& cfg) {
  std::map<std::string, std::vector<schema::ComponentLabel>> predictions;
  std::size_t skipped = 0;
  nlohmann::json source;
  if (cfg.has("realism.predictions_file")) {
    const std::string file = cfg.get("realism.predictions_file");
    for (const auto& row : read_jsonl(file)) {
      predictions[row.at("target").get<std::string>()].push_back(
          schema::label_from_string(row.at("label").get<std::string>()));
    }
    source = {{"kind", "prediction_fixture"}, {"file", file}};
  } else if (cfg.has("realism.annotations") && cfg.has("realism.checkpoint_dir")) {
    const auto records = schema::load_annotations(cfg.get("realism.annotations"));
    const std::string images_dir = cfg.get("realism.images_dir", ".");
    const std::string ckpt_dir = cfg.get("realism.checkpoint_dir");
    std::vector<std::string> targets = cfg.raw().get_list("realism.targets");
    if (targets.empty()) targets = {"face"};
    std::vector<nlohmann::json> prediction_rows;
    for (const auto& target : targets) {
      realism::DefectModel model = realism::DefectModel::from_checkpoint(
          nlohmann::json::parse(read_text_file(ckpt_dir + "/" + target + ".json")));
      for (const auto& record : records) {
        try {
          realism::LabeledImage item{record,
                                     img::load_image(images_dir + "/" + record.image_id + ".ppm")};
          const schema::ComponentLabel label = realism::classify(model, item);
          predictions[target].push_back(label);
          prediction_rows.push_back({{"image_id", record.image_id},
                                     {"target", target},
                                     {"label", schema::label_name(label)}});
        } catch (const Error& e) {
          if (e.code() == ErrorCode::precondition) {
            ++skipped;  // record without the required box
          } else {
            throw;
          }
        }
      }
    }
    write_jsonl(model_dir(cfg) + "/defect_predictions.jsonl", prediction_rows);
    source = {{"kind", "defect_models"}, {"checkpoint_dir", ckpt_dir}};
  } else {
    throw Error(ErrorCode::config,
                "realism needs realism.predictions_file or realism.annotations + realism.checkpoint_dir");
  }

  const bool rate_all = cfg.get("realism.denominator", "visible") == "all";
  const auto denom = rate_all ? realism::RateDenominator::all : realism::RateDenominator::visible;
  nlohmann::json rates = nlohmann::json::object();
  for (const auto& [target, labels] : predictions) {
    std::size_t bad = 0, good = 0, invisible = 0;
    for (auto l : labels) {
      if (l == schema::ComponentLabel::bad) ++bad;
      if (l == schema::ComponentLabel::good) ++good;
      if (l == schema::ComponentLabel::invisible) ++invisible;
    }
    rates[target] = {{"defect_rate_percent", realism::defect_rate_percent(labels, denom)},
                     {"defect_rate", realism::defect_rate(labels, denom)},
                     {"counts", {{"bad", bad}, {"good", good}, {"invisible", invisible}}}};
  }
  nlohmann::json report{{"model", cfg.model()},
                        {"source", source},
                        {"denominator", rate_all ? "all" : "visible"},
                        {"rates", rates},
                        {"skipped_records", skipped},
                        {"provenance", cfg.provenance("none")}};
  const std::string path = model_dir(cfg) + "/realism_report.json";
  write_json_report(path, report);
  return {{path}};
}

RunResult run_coverage(const RunConfig& cfg) {
  std::vector<coverage::CoverageRow> rows;
  nlohmann::json source;
  std::string cache_identity = "none";
  std::size_t normalizer_warnings = 0;
  if (cfg.has("coverage.fixture_csv")) {
    const std::string file = cfg.get("coverage.fixture_csv");
    rows = coverage::rows_from_csv(read_text_file(file));
    source = {{"kind", "coverage_fixture"}, {"file", file}};
  } else {
    Session s = open_session(cfg);
    const auto vocab = load_vocab(cfg);
    coverage::CoverageParams params;
    params.open_samples = cfg.open_samples();
    params.delta = cfg.delta();
    params.gamma = cfg.gamma();
    params.any_closed_template = cfg.raw().get_bool("coverage.any_closed_template", false);
    const std::string human_dir = cfg.get("coverage.human_eval_dir");
    for (const auto& c : coverage_scope(cfg, vocab)) {
      const std::string prompt = concept_prompt(cfg, c);
      const auto refs = generation_refs(cfg, *s.hub, prompt);
      coverage::CoverageRow row;
      row.concept_label = c.label;
      row.model = cfg.model();
      row.cov_closed = coverage::cov_closed(*s.hub, refs, c, params);
      row.cov_open = coverage::cov_open(*s.hub, refs, c, params);
      row.cov_clip = coverage::cov_clip(*s.hub, refs, prompt, params);
      if (!human_dir.empty()) {
        const std::string human_file = human_dir + "/" + concept_slug(c.label) + ".jsonl";
        if (fs::exists(human_file)) {
          const coverage::HumanEval he = coverage::ingest_human_eval(human_file);
          row.human_loose = he.loose;
          row.human_strict = he.strict;
        }
      }
      rows.push_back(row);
    }
    source = {{"kind", "vqa_pipeline"},
              {"T", params.open_samples},
              {"delta", params.delta},
              {"gamma", params.gamma}};
    cache_identity = s.cache->identity();
    normalizer_warnings = s.hub->normalizer_warnings();
  }

  // Per-model averages (the model-comparison view).
  double sum_closed = 0, sum_open = 0;
  std::size_t n_closed = 0, n_open = 0;
  for (const auto& r : rows) {
    if (r.cov_closed) {
      sum_closed += *r.cov_closed;
      ++n_closed;
    }
    if (r.cov_open) {
      sum_open += *r.cov_open;
      ++n_open;
    }
  }
  nlohmann::json averages = nlohmann::json::object();
  if (n_closed) averages["avg_cov_closed_percent"] = round2(100.0 * sum_closed / n_closed);
  if (n_open) averages["avg_cov_open_percent"] = round2(100.0 * sum_open / n_open);

  // Spearman validation against the human columns when enough rows carry them.
  nlohmann::json validation = nlohmann::json::object();
  std::size_t with_human = 0;
  for (const auto& r : rows) {
    if (r.human_loose && r.human_strict) ++with_human;
  }
  if (with_human >= 3) {
    validation["spearman_cov_closed_human_loose"] = coverage::spearman_validate(
        rows, coverage::Metric::cov_closed, coverage::Metric::human_loose);
    validation["spearman_cov_open_human_strict"] = coverage::spearman_validate(
        rows, coverage::Metric::cov_open, coverage::Metric::human_strict);
    validation["spearman_cov_clip_human_loose"] = coverage::spearman_validate(
        rows, coverage::Metric::cov_clip, coverage::Metric::human_loose);
    validation["spearman_cov_clip_human_strict"] = coverage::spearman_validate(
        rows, coverage::Metric::cov_clip, coverage::Metric::human_strict);
  }

  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr{{"concept", r.concept_label}, {"model", r.model}};
    auto put = [&jr](const char* key, const std::optional<double>& v) {
      if (v) jr[key] = *v;
    };
    put("cov_closed", r.cov_closed);
    put("cov_open", r.cov_open);
    put("cov_clip", r.cov_clip);
    put("human_loose", r.human_loose);
    put("human_strict", r.human_strict);
    rows_json.push_back(jr);
  }

  nlohmann::json report{{"model", cfg.model()},
                        {"source", source},
                        {"rows", rows_json},
                        {"averages", averages},
                        {"validation", validation},
                        {"normalizer_warnings", normalizer_warnings},
                        {"provenance", cfg.provenance(cache_identity)}};
  const std::string dir = model_dir(cfg);
  const std::string json_path = dir + "/coverage_report.json";
  const std::string csv_path = dir + "/coverage_report.csv";
  write_json_report(json_path, report);
  write_text_file(csv_path, coverage::rows_to_csv(rows));
  return {{json_path, csv_path}};
}

RunResult run_fairness(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto concepts = prompts::fairness_concepts(vocab);
  std::vector<fairness::AttributeSpec> specs = fairness::default_attributes();
  for (auto& spec : specs) {
    spec.threshold = cfg.threshold(fairness::attribute_name(spec.name));
    const std::string q = cfg.get(std::string("fairness.question.") +
                                  fairness::attribute_name(spec.name));
    if (!q.empty()) spec.question = q;
  }

  fairness::FairnessReport report;
  nlohmann::json source;
  std::string cache_identity = "none";
  nlohmann::json other_flags = nlohmann::json::array();
  if (cfg.has("fairness.entropy_fixture")) {
    const std::string file = cfg.get("fairness.entropy_fixture");
    const std::string fixture_model = cfg.get("fairness.fixture_model", "sdxl");
    const fairness::Table8 table = fairness::load_table8(file);
    auto it = table.find(fixture_model);
    if (it == table.end()) {
      throw Error(ErrorCode::config, "fixture model not in entropy fixture: " + fixture_model);
    }
    const auto& per_attr = it->second;
    const std::size_t n = per_attr.begin()->second.size();
    if (n != concepts.size()) {
      throw Error(ErrorCode::config, "entropy fixture row count does not match the prompt list",
                  {{"fixture_rows", n}, {"prompts", concepts.size()}});
    }
    std::vector<std::map<fairness::Attribute, double>> entropies(n);
    for (const auto& [attr, entries] : per_attr) {
      for (std::size_t i = 0; i < n; ++i) {
        if (entries[i].concept_label != concepts[i].label) {
          throw Error(ErrorCode::config,
                      "entropy fixture order mismatch: " + entries[i].concept_label + " vs " +
                          concepts[i].label);
        }
        entropies[i][attr] = entries[i].entropy;
      }
    }
    report = fairness::report_from_entropies(cfg.model(), concepts, entropies, specs);
    source = {{"kind", "entropy_fixture"}, {"file", file}, {"fixture_model", fixture_model}};
  } else {
    Session s = open_session(cfg);
    std::vector<std::map<fairness::Attribute, double>> entropies(concepts.size());
    coverage::EquivalenceOracle oracle = [&](const std::string& a, const std::string& b) {
      return s.hub->sem_equivalent(a, b);
    };
    for (std::size_t i = 0; i < concepts.size(); ++i) {
      const std::string prompt = prompts::fairness_prompt_for(concepts[i]);
      const auto refs = generation_refs(cfg, *s.hub, prompt);
      for (const auto& spec : specs) {
        std::vector<std::string> answers;
        answers.reserve(refs.size());
        for (const auto& ref : refs) {
          answers.push_back(fairness::extract_attribute(*s.hub, ref, spec));
        }
        const fairness::EntropyResult er = fairness::attribute_entropy(answers, spec, oracle);
        entropies[i][spec.name] = er.entropy;
        if (er.other_fraction > 0.05) {
          other_flags.push_back({{"concept", concepts[i].label},
                                 {"attribute", fairness::attribute_name(spec.name)},
                                 {"other_fraction", er.other_fraction}});
        }
      }
    }
    report = fairness::report_from_entropies(cfg.model(), concepts, entropies, specs);
    source = {{"kind", "vqa_pipeline"}};
    cache_identity = s.cache->identity();
  }

  nlohmann::json j = fairness::report_to_json(report);
  j["source"] = source;
  if (!other_flags.empty()) j["other_cluster_flags"] = other_flags;

  if (cfg.has("fairness.vqa_audit_fixture")) {
    const auto groups = fairness::load_vqa_group_accuracy(cfg.get("fairness.vqa_audit_fixture"));
    const std::map<fairness::Attribute, double> means = {
        {fairness::Attribute::gender, cfg.raw().get_double("fairness.vqa_mean.gender", 93.80)},
        {fairness::Attribute::race, cfg.raw().get_double("fairness.vqa_mean.race", 92.30)},
        {fairness::Attribute::age, cfg.raw().get_double("fairness.vqa_mean.age", 84.50)}};
    nlohmann::json flags = nlohmann::json::array();
    for (const auto& f : fairness::audit_vqa_groups(groups, means)) {
      flags.push_back({{"group", f.group_value},
                       {"attribute", fairness::attribute_name(f.audited)},
                       {"accuracy_percent", f.accuracy_percent},
                       {"attribute_mean_percent", f.attribute_mean_percent},
                       {"deficit_points", f.deficit_points}});
    }
    j["vqa_audit_flags"] = flags;
  }

  j["provenance"] = cfg.provenance(cache_identity);
  const std::string path = model_dir(cfg) + "/fairness_report.json";
  write_json_report(path, j);
  return {{path}};
}

RunResult run_report(const RunConfig& cfg) {
  std::vector<std::string> models = cfg.raw().get_list("report.models");
  if (models.empty()) models = {cfg.model()};
  std::vector<std::string> sections = cfg.raw().get_list("report.sections");
  if (sections.empty()) sections = {"aesthetics", "realism", "coverage", "fairness"};

  auto want = [&sections](const char* s) {
    return std::find(sections.begin(), sections.end(), s) != sections.end();
  };

  nlohmann::json aesthetics = nlohmann::json::object();
  nlohmann::json realism = nlohmann::json::object();
  nlohmann::json fairness_summary = nlohmann::json::object();
  nlohmann::json coverage_rows = nlohmann::json::array();
  nlohmann::json coverage_avgs = nlohmann::json::object();
  std::vector<coverage::CoverageRow> merged_rows;

  for (const auto& model : models) {
    const std::string dir = cfg.out_dir() + "/" + model_slug(model);
    auto require_file = [&](const std::string& name) -> nlohmann::json {
      const std::string path = dir + "/" + name;
      if (!fs::exists(path)) {
        throw Error(ErrorCode::io, "missing partial report for model " + model + ": " + path,
                    {{"model", model}, {"file", path}});
      }
      return nlohmann::json::parse(read_text_file(path));
    };
    if (want("aesthetics")) {
      const nlohmann::json a = require_file("aesthetics.json");
      aesthetics[model] = a.at("summary");
    }
    if (want("realism")) {
      const nlohmann::json r = require_file("realism_report.json");
      nlohmann::json rates = nlohmann::json::object();
      for (const auto& [target, block] : r.at("rates").items()) {
        rates[target] = block.at("defect_rate_percent");
      }
      realism[model] = rates;
    }
    if (want("coverage")) {
      const nlohmann::json c = require_file("coverage_report.json");
      for (const auto& row : c.at("rows")) coverage_rows.push_back(row);
      coverage_avgs[model] = c.at("averages");
      for (const auto& row : c.at("rows")) {
        coverage::CoverageRow r;
        r.concept_label = row.at("concept").get<std::string>();
        r.model = row.at("model").get<std::string>();
        if (row.contains("cov_closed")) r.cov_closed = row.at("cov_closed").get<double>();
        if (row.contains("cov_open")) r.cov_open = row.at("cov_open").get<double>();
        if (row.contains("cov_clip")) r.cov_clip = row.at("cov_clip").get<double>();
        if (row.contains("human_loose")) r.human_loose = row.at("human_loose").get<double>();
        if (row.contains("human_strict")) r.human_strict = row.at("human_strict").get<double>();
        merged_rows.push_back(r);
      }
    }
    if (want("fairness")) {
      const nlohmann::json f = require_file("fairness_report.json");
      fairness_summary[model] = f.at("summary");
    }
  }

  nlohmann::json report{{"models", models}, {"provenance", cfg.provenance("none")}};
  if (want("aesthetics")) report["aesthetics"] = aesthetics;
  if (want("realism")) report["realism"] = realism;
  if (want("coverage")) {
    report["coverage"] = {{"rows", coverage_rows}, {"averages", coverage_avgs}};
  }
  if (want("fairness")) report["fairness"] = fairness_summary;

  ensure_dir(cfg.out_dir());
  const std::string json_path = cfg.out_dir() + "/eval_report.json";
  write_json_report(json_path, report);
  RunResult result{{json_path}};
  if (want("coverage")) {
    const std::string csv_path = cfg.out_dir() + "/coverage_report.csv";
    write_text_file(csv_path, coverage::rows_to_csv(merged_rows));
    result.files.push_back(csv_path);
  }
  return result;
}

}  // namespace

RunConfig RunConfig::load(const std::optional<std::string>& config_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig rc;
  if (config_path) rc.cfg_ = KeyValueConfig::parse_file(*config_path);
  rc.cfg_.override_from_env("backends.generator_url", "EVALKIT_GENERATOR_URL");
  rc.cfg_.override_from_env("backends.vqa_url", "EVALKIT_VQA_URL");
  rc.cfg_.override_from_env("backends.equivalence_url", "EVALKIT_EQUIV_URL");
  rc.cfg_.override_from_env("backends.embed_url", "EVALKIT_EMBED_URL");
  rc.cfg_.override_from_env("run.cache_dir", "EVALKIT_CACHE_DIR");
  rc.cfg_.override_from_env("run.mode", "EVALKIT_MODE");
  for (const auto& [k, v] : overrides) rc.cfg_.set(k, v);
  return rc;
}

backends::CacheMode RunConfig::mode() const {
  return backends::mode_from_string(cfg_.get_string("run.mode", "replay"));
}

std::string RunConfig::data_dir() const {
#ifdef EVALKIT_DATA_DIR
  const char* fallback = EVALKIT_DATA_DIR;
#else
  const char* fallback = "data";
#endif
  return cfg_.get_string("run.data_dir", fallback);
}

std::optional<std::size_t> RunConfig::limit() const {
  if (!cfg_.has("run.limit")) return std::nullopt;
  const std::int64_t v = cfg_.get_int("run.limit", 0);
  if (v <= 0) throw Error(ErrorCode::config, "run.limit must be positive");
  return static_cast<std::size_t>(v);
}

double RunConfig::threshold(const std::string& attribute) const {
  const double def = attribute == "gender" ? 0.8 : 1.0;
  return cfg_.get_double("fairness.threshold." + attribute, def);
}

nlohmann::json RunConfig::effective_json() const {
  nlohmann::json j = cfg_.to_json();
  // Defaults made explicit so the hash covers them.
  j["run.model"] = model();
  j["run.mode"] = backends::mode_name(mode());
  j["run.images_per_prompt"] = images_per_prompt();
  j["coverage.T"] = open_samples();
  j["coverage.delta"] = delta();
  j["coverage.gamma"] = gamma();
  j["fairness.threshold.gender"] = threshold("gender");
  j["fairness.threshold.race"] = threshold("race");
  j["fairness.threshold.age"] = threshold("age");
  j["run.seed"] = seed();
  return j;
}

std::string RunConfig::config_hash() const { return sha256_hex(canonical_json(effective_json())); }

nlohmann::json RunConfig::provenance(const std::string& cache_identity) const {
  return {{"tool_version", kToolVersion},
          {"rng", RngStream::kAlgorithmId},
          {"config", effective_json()},
          {"config_hash", config_hash()},
          {"cache", {{"dir", cache_dir()}, {"identity", cache_identity}}}};
}

std::string model_slug(const std::string& model) {
  std::string s;
  for (char c : model) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!s.empty() && s.back() != '_') {
      s.push_back('_');
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s.empty() ? "model" : s;
}

RunResult run_subcommand(const std::string& name, const RunConfig& cfg) {
  ensure_dir(cfg.out_dir());
  if (name == "generate") return run_generate(cfg);
  if (name == "aesthetics") return run_aesthetics(cfg);
  if (name == "realism") return run_realism(cfg);
  if (name == "coverage") return run_coverage(cfg);
  if (name == "fairness") return run_fairness(cfg);
  if (name == "report") return run_report(cfg);
  throw Error(ErrorCode::config, "unknown subcommand: " + name);
}

}  // namespace evalkit::pipeline
