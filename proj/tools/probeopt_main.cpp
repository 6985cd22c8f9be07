#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "probeopt/experiment.hpp"
#include "probeopt/report.hpp"

namespace {

using namespace probeopt;

struct ScenarioAddress {
  std::string family = "halfspace";
  std::uint64_t seed = 0;
  std::size_t dimension = 16;
  std::size_t embedding_dim = 8;
};

/// A scenario is addressable by its (family, seed, dimension, embedding_dim)
/// quadruple; a full experiment config is also accepted and contributes the
/// same four fields.
ScenarioAddress load_scenario_address(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError(path + ": scenario config must be an object");

  ScenarioAddress addr;
  if (j.contains("schema_version")) {
    ExperimentConfig cfg = parse_config_text(buf.str(), path);
    addr.family = cfg.scenario.family;
    addr.seed = cfg.seed;
    addr.dimension = cfg.dimension;
    addr.embedding_dim = cfg.embedding_dim;
    return addr;
  }
  try {
    if (j.contains("family")) addr.family = j.at("family").get<std::string>();
    if (j.contains("seed")) addr.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dimension")) addr.dimension = j.at("dimension").get<std::size_t>();
    if (j.contains("embedding_dim")) addr.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": malformed scenario address fields");
  }
  return addr;
}

int cmd_run(const std::string& config_path, bool has_seed, std::uint64_t seed_override,
            const std::string& out_override, bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (has_seed) cfg.seed = seed_override;
  if (!out_override.empty()) cfg.output = out_override;
  cfg.validate();

  RunMetrics metrics = run_experiment(cfg);
  const RunSummary& s = metrics.summary;
  if (!quiet) {
    std::cout << "status: " << s.status << "\n"
              << "final_loss: ";
    if (s.final_loss) {
      std::cout << *s.final_loss;
    } else {
      std::cout << "none";
    }
    std::cout << "\nfinal_boundary_distance: ";
    if (s.final_boundary_distance) {
      std::cout << *s.final_boundary_distance;
    } else {
      std::cout << "none";
    }
    std::cout << "\nfinal_verdict: " << to_string(s.final_verdict)
              << "\nsuccess: " << (s.success ? "true" : "false")
              << "\ntotal_queries: " << s.total_queries
              << "\nwall_time_seconds: " << s.wall_time_seconds
              << "\nmetrics: " << cfg.output << "\n";
  }
  return exit_code_for_status(s.status);
}

int cmd_validate(const std::string& config_path, bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  cfg.validate();
  if (!quiet) std::cout << "ok: " << config_path << "\n";
  return kExitOk;
}

int cmd_summarize(const std::vector<std::string>& files, bool quiet) {
  SummaryTable table = summarize(files);
  if (!quiet) std::cout << format_table(table);
  return kExitOk;
}

int cmd_rank(const std::string& candidates_path, const std::string& scenario_path, bool quiet) {
  ScenarioAddress addr = load_scenario_address(scenario_path);
  ScenarioSpec scenario =
      generate_scenario(addr.seed, addr.dimension, addr.embedding_dim, addr.family);
  auto candidates = load_candidates(candidates_path);
  if (candidates.empty()) throw ParseError(candidates_path + ": no candidates found");
  auto ranked = rank_candidates(std::move(candidates), scenario);
  if (!quiet) {
    for (const auto& c : ranked) {
      std::cout << c.id << "\t" << candidate_loss(c, scenario) << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box verdict-feedback optimization experiments"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress console output");
  // accept --quiet before or after the subcommand name
  auto add_quiet = [&quiet](CLI::App* sub) {
    sub->add_flag("--quiet", quiet, "Suppress console output");
  };

  std::string run_config;
  std::uint64_t seed_override = 0;
  std::string out_override;
  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed_override, "Override the config seed");
  run->add_option("--out", out_override, "Override the metrics output path");
  add_quiet(run);

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Schema-check a config, no execution");
  validate->add_option("config", validate_config, "Experiment config (JSON)")->required();
  add_quiet(validate);

  std::vector<std::string> summarize_files;
  auto* summ = app.add_subcommand("summarize", "Aggregate one or more metrics files");
  summ->add_option("metrics", summarize_files, "Metrics files (JSONL)")->required();
  add_quiet(summ);

  std::string rank_candidates_path;
  std::string rank_scenario_path;
  auto* rank = app.add_subcommand("rank", "Rank candidates by alignment loss, ascending");
  rank->add_option("candidates", rank_candidates_path, "Candidates file (JSONL)")->required();
  rank->add_option("scenario", rank_scenario_path, "Scenario config (JSON)")->required();
  add_quiet(rank);

  try {
    app.parse(argc, argv);
    if (run->parsed()) {
      return cmd_run(run_config, seed_opt->count() > 0, seed_override, out_override, quiet);
    }
    if (validate->parsed()) return cmd_validate(validate_config, quiet);
    if (summ->parsed()) return cmd_summarize(summarize_files, quiet);
    if (rank->parsed()) return cmd_rank(rank_candidates_path, rank_scenario_path, quiet);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return probeopt::kExitConfigInvalid;
  } catch (const probeopt::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return probeopt::kExitParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
