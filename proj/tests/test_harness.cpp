#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "probeopt/experiment.hpp"
#include "probeopt/report.hpp"

using namespace probeopt;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kMinimalConfig = R"({
  "schema_version": 1,
  "seed": 3,
  "dimension": 8,
  "embedding_dim": 4,
  "scenario": {"family": "halfspace", "count": 1},
  "pipeline": "spl-only",
  "output": "OUT"
})";

ExperimentConfig minimal_config(const std::string& out) {
  std::string text = kMinimalConfig;
  text.replace(text.find("OUT"), 3, out);
  return parse_config_text(text, "<test>");
}

}  // namespace

TEST_CASE("config parsing applies defaults and validates") {
  ExperimentConfig cfg = minimal_config(temp_path("h1.jsonl"));
  CHECK(cfg.seed == 3);
  CHECK(cfg.spl.probes == 10);
  CHECK(cfg.spl.step_divisor == doctest::Approx(4.0));
  CHECK(cfg.spl.r_min == doctest::Approx(0.2));
  CHECK(cfg.sel.beta == doctest::Approx(0.3));
  CHECK(cfg.tal.epsilon == doctest::Approx(0.1));
  CHECK(cfg.tal.few_shot_budget == 10);
}

TEST_CASE("config errors are specific") {
  CHECK_THROWS_AS(parse_config_text("{", "<t>"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"seed": 1})", "<t>"), ConfigError);  // no schema_version
  CHECK_THROWS_AS(parse_config_text(R"({"schema_version": 2})", "<t>"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"schema_version": 1, "pipelines": "x"})", "<t>"),
                  ConfigError);  // unknown field
  CHECK_THROWS_AS(parse_config_text(R"({"schema_version": 1, "pipeline": "warp"})", "<t>"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"schema_version": 1, "scenario": {"family": "torus"}})", "<t>"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"schema_version": 1, "spl": {"growth": 0.9}})", "<t>"), ConfigError);
  // tal pipeline needs the transfer family
  CHECK_THROWS_AS(parse_config_text(
                      R"({"schema_version": 1, "pipeline": "tal",
                          "scenario": {"family": "halfspace", "count": 1}})",
                      "<t>"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config serialization round-trips") {
  ExperimentConfig cfg = minimal_config(temp_path("h2.jsonl"));
  cfg.sel.c = 0.05;
  cfg.ablations.skip_harmonization = true;
  std::string json = config_to_json(cfg);
  ExperimentConfig back = parse_config_text(json, "<round-trip>");
  CHECK(config_to_json(back) == json);
  CHECK(back.sel.c == doctest::Approx(0.05));
  CHECK(back.ablations.skip_harmonization);
}

TEST_CASE("metrics round-trip through the file format") {
  RunMetrics metrics;
  metrics.config_json = R"({"schema_version":1})";
  metrics.records.push_back({0, "spl-stage1", 0.1, Verdict::Deny, std::nullopt, 11});
  metrics.records.push_back({1, "sel", 0.2, Verdict::Pass, 0.25, 30});
  metrics.summary.status = "ok";
  metrics.summary.pipeline = "spl+sel";
  metrics.summary.seed = 9;
  metrics.summary.final_loss = 0.25;
  metrics.summary.final_boundary_distance = 0.5;
  metrics.summary.final_verdict = Verdict::Pass;
  metrics.summary.success = false;
  metrics.summary.total_queries = 30;
  metrics.summary.queries_by_phase = {{"spl-stage1", 11}, {"sel", 19}};

  std::string path = temp_path("h3.jsonl");
  write_metrics(metrics, path);
  RunMetrics back = read_metrics(path);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].phase == "spl-stage1");
  CHECK(!back.records[0].loss.has_value());  // null marker, not omitted
  CHECK(back.records[1].loss.has_value());
  CHECK(back.summary.total_queries == 30);
  CHECK(back.summary.queries_by_phase.at("sel") == 19);

  // the serialized null must be literal
  std::string raw = slurp(path);
  CHECK(raw.find("\"loss\":null") != std::string::npos);
}

TEST_CASE("malformed metrics name the file and line") {
  std::string path = temp_path("h4.jsonl");
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"type":"meta","schema":"probeopt-metrics","schema_version":1,"config":null})"
        << "\n";
    out << "this is not json\n";
  }
  try {
    read_metrics(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find(path) != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);
  }
}

TEST_CASE("records cannot follow the summary line") {
  std::string path = temp_path("h4b.jsonl");
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"type":"meta","schema":"probeopt-metrics","schema_version":1,"config":null})" << "\n";
    out << R"({"type":"summary","status":"ok","pipeline":"spl-only","seed":0,"final_loss":null,)"
        << R"("final_boundary_distance":null,"final_verdict":"Deny","success":false,)"
        << R"("total_queries":0,"queries_by_phase":{},"oscillation_warning":false})" << "\n";
    out << R"({"type":"record","iteration":0,"phase":"sel","radius":0.1,"verdict":"Pass",)"
        << R"("loss":null,"queries":1})" << "\n";
  }
  CHECK_THROWS_AS(read_metrics(path), ParseError);
}

TEST_CASE("spl-only runs end their record stream in stage 2 on a Pass") {
  ExperimentConfig cfg = minimal_config(temp_path("h5.jsonl"));
  RunMetrics metrics = run_experiment(cfg);
  REQUIRE(!metrics.records.empty());
  const IterationRecord& last = metrics.records.back();
  CHECK(last.phase == "spl-stage2");
  CHECK(last.verdict == Verdict::Pass);
  CHECK(metrics.summary.status == "ok");
  CHECK(metrics.summary.final_verdict == Verdict::Pass);
  // cumulative queries never decrease
  std::uint64_t prev = 0;
  for (const auto& r : metrics.records) {
    CHECK(r.cumulative_queries >= prev);
    prev = r.cumulative_queries;
  }
  CHECK(metrics.summary.total_queries >= prev);
}

TEST_CASE("identical configs produce byte-identical metrics files") {
  ExperimentConfig cfg = minimal_config(temp_path("h6a.jsonl"));
  cfg.pipeline = Pipeline::SplSel;
  cfg.sel_iters = 40;
  run_experiment(cfg);
  std::string first = slurp(cfg.output);
  cfg.output = temp_path("h6b.jsonl");
  run_experiment(cfg);
  CHECK(first == slurp(cfg.output));
  CHECK(!first.empty());
}

TEST_CASE("region-unreachable is reported in the summary, not thrown") {
  ExperimentConfig cfg = minimal_config(temp_path("h7.jsonl"));
  cfg.spl.r_max = 0.2;  // growth cap too small to ever see a Pass probe
  RunMetrics metrics = run_experiment(cfg);
  CHECK(metrics.summary.status == "region-unreachable");
  CHECK(exit_code_for_status(metrics.summary.status) == kExitRegionUnreachable);
  CHECK(!metrics.summary.success);
  RunMetrics reread = read_metrics(cfg.output);  // the file is still complete
  CHECK(reread.summary.status == "region-unreachable");
}

TEST_CASE("exit codes map statuses to the documented values") {
  CHECK(exit_code_for_status("ok") == 0);
  CHECK(exit_code_for_status("region-unreachable") == 3);
  CHECK(exit_code_for_status("budget-exhausted") == 4);
}

TEST_CASE("tal pipeline reports a few-shot online budget") {
  ExperimentConfig cfg = minimal_config(temp_path("h8.jsonl"));
  cfg.pipeline = Pipeline::Tal;
  cfg.scenario.family = std::string(kFamilyShifted);
  cfg.dimension = 8;
  cfg.embedding_dim = 4;
  cfg.tal.max_offline_iters = 60;
  cfg.tal.val_window = 10;
  RunMetrics metrics = run_experiment(cfg);
  CHECK(metrics.summary.status == "ok");
  std::uint64_t online = metrics.summary.queries_by_phase.count("online-estimate")
                             ? metrics.summary.queries_by_phase.at("online-estimate")
                             : 0;
  // W = 10 iterations, two evaluations per estimate plus bounded resamples
  CHECK(online >= 20);
  CHECK(online <= 10 * 2 * (1 + static_cast<std::uint64_t>(cfg.sel.max_resample)));
  int online_records = 0;
  for (const auto& r : metrics.records) {
    if (r.phase == "online") ++online_records;
  }
  CHECK(online_records == 10);
}

TEST_CASE("protocol-b optimizes each scenario independently") {
  ExperimentConfig cfg = minimal_config(temp_path("h9.jsonl"));
  cfg.pipeline = Pipeline::ProtocolB;
  cfg.scenario.count = 2;
  cfg.sel_iters = 30;
  RunMetrics metrics = run_experiment(cfg);
  CHECK(metrics.summary.status == "ok");
  // two independent passes, so the stage-1 phase restarts once
  int stage1_blocks = 0;
  std::string prev_phase;
  for (const auto& r : metrics.records) {
    if (r.phase == "spl-stage1" && prev_phase != "spl-stage1") ++stage1_blocks;
    prev_phase = r.phase;
  }
  CHECK(stage1_blocks == 2);
}

TEST_CASE("summarize aggregates runs and success rates") {
  std::vector<std::string> files;
  for (int i = 0; i < 4; ++i) {
    RunMetrics metrics;
    metrics.config_json = "null";
    metrics.summary.status = "ok";
    metrics.summary.pipeline = "spl+sel";
    metrics.summary.seed = static_cast<std::uint64_t>(i);
    metrics.summary.final_loss = 0.1 * (i + 1);
    metrics.summary.final_boundary_distance = 0.5;
    metrics.summary.final_verdict = Verdict::Pass;
    metrics.summary.success = i != 3;  // three successes, one failure
    metrics.summary.total_queries = 100;
    std::string path = temp_path("h10_" + std::to_string(i) + ".jsonl");
    write_metrics(metrics, path);
    files.push_back(path);
  }
  SummaryTable table = summarize(files);
  CHECK(table.rows.size() == 4);
  CHECK(table.success_rate == doctest::Approx(0.75));
  CHECK(*table.mean_final_loss == doctest::Approx(0.25));
  CHECK(table.mean_total_queries == doctest::Approx(100.0));

  SummaryTable one = summarize({files[0]});
  CHECK(one.success_rate == doctest::Approx(1.0));

  std::string rendered = format_table(table);
  CHECK(rendered.find("success_rate: 0.75") != std::string::npos);
}

TEST_CASE("rank orders candidates by ascending loss with stable ties") {
  ScenarioSpec scenario = generate_scenario(1, 4, 4, kFamilyHalfspace);
  // candidates built from the scenario's own embeddings so losses are known
  Candidate best{"b", scenario.text_embedding};
  Candidate mid{"c", scaled(add(scenario.text_embedding,
                                scaled(scenario.target_image_embedding, -0.4)),
                            1.0)};
  Candidate worst{"a", scaled(scenario.text_embedding, -1.0)};
  auto ranked = rank_candidates({worst, best, mid}, scenario);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].id == "b");
  CHECK(ranked[1].id == "c");
  CHECK(ranked[2].id == "a");

  // equal losses preserve input order
  auto tied = rank_candidates({{"x", scenario.text_embedding},
                               {"y", scenario.text_embedding},
                               {"z", scenario.text_embedding}},
                              scenario);
  CHECK(tied[0].id == "x");
  CHECK(tied[1].id == "y");
  CHECK(tied[2].id == "z");

  auto single = rank_candidates({{"solo", scenario.text_embedding}}, scenario);
  CHECK(single[0].id == "solo");
}

TEST_CASE("candidate files reject malformed lines with file and line info") {
  std::string path = temp_path("h11.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id": "ok", "embedding": [1.0, 0.0]})" << "\n";
    out << R"({"id": "broken"})" << "\n";
  }
  try {
    load_candidates(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
  }
}
