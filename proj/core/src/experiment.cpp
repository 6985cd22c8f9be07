#include "probeopt/experiment.hpp"

#include <chrono>

#include "probeopt/oracles.hpp"
#include "probeopt/tal.hpp"

namespace probeopt {

namespace {

struct RunContext {
  const ExperimentConfig& cfg;
  QueryLedger ledger;
  std::vector<IterationRecord> records;
  std::int64_t next_iteration = 0;

  void emit(std::string_view phase, double radius, Verdict verdict,
            std::optional<double> loss) {
    records.push_back({next_iteration++, std::string(phase), radius, verdict, loss,
                       ledger.total()});
  }
};

struct ScenarioOutcome {
  Vec psi;
  std::optional<double> final_loss;
  Verdict final_verdict = Verdict::Deny;
  double boundary_distance = 0.0;
  bool oscillation_warning = false;
};

/// SPL pre-training followed by SEL fine-tuning against one scenario.
/// Used by the spl-only, spl+sel and protocol-b pipelines.
ScenarioOutcome run_single_scenario(RunContext& ctx, const ScenarioSpec& scenario,
                                    RngStream& rng, bool with_sel) {
  const ExperimentConfig& cfg = ctx.cfg;
  ScenarioOutcome outcome;
  Vec psi(cfg.dimension, 0.0);

  if (!cfg.ablations.skip_spl) {
    RngStream rng_spl = rng.substream("spl");
    SplState state;
    state.psi = std::move(psi);

    VerdictFn stage1_verdict = [&](const Vec& p) {
      return defense_verdict(*scenario.defense, p, ctx.ledger, "spl-stage1");
    };
    SplObserver stage1_obs = [&](const SplEvent& ev) {
      ctx.emit("spl-stage1", ev.radius, ev.verdict, std::nullopt);
    };
    state = stage1_run(std::move(state), stage1_verdict, cfg.spl, rng_spl, stage1_obs);

    VerdictFn stage2_verdict = [&](const Vec& p) {
      return defense_verdict(*scenario.defense, p, ctx.ledger, "spl-stage2");
    };
    SplObserver stage2_obs = [&](const SplEvent& ev) {
      ctx.emit("spl-stage2", ev.radius, ev.verdict, std::nullopt);
    };
    state = stage2_run(std::move(state), stage2_verdict, cfg.spl, rng_spl, stage2_obs);
    outcome.oscillation_warning = state.oscillation_warning;
    psi = std::move(state.psi);
  }

  if (with_sel) {
    RngStream rng_sel = rng.substream("sel");
    VerdictFn probe_verdict = [&](const Vec& p) {
      return defense_verdict(*scenario.defense, p, ctx.ledger, "sel-probe");
    };
    LossFn loss = [&](const Vec& p) { return scenario_loss(scenario, p, ctx.ledger, "sel"); };
    SelObserver sel_obs = [&](const SelEvent& ev) {
      ctx.emit("sel", ev.probe_radius, ev.skipped ? Verdict::Deny : ev.candidate_verdict,
               ev.loss);
    };
    SelRunOptions options;
    options.use_harmonization = !cfg.ablations.skip_harmonization;
    options.plateau_window = cfg.sel_plateau_window;
    options.plateau_tolerance = cfg.sel_plateau_tolerance;
    auto result = sel_run(SelState(std::move(psi)), probe_verdict, loss, cfg.spl, cfg.sel,
                          cfg.sel_iters, rng_sel, options, sel_obs);
    psi = std::move(result.state.psi);
  }

  auto final_loss = scenario_loss(scenario, psi, ctx.ledger, "eval");
  outcome.final_loss = final_loss;
  outcome.final_verdict = final_loss ? Verdict::Pass : Verdict::Deny;
  outcome.boundary_distance = scenario.defense->boundary_distance(psi);
  outcome.psi = std::move(psi);
  return outcome;
}

void fill_summary_single(RunSummary& summary, const ScenarioOutcome& outcome, double threshold) {
  summary.final_loss = outcome.final_loss;
  summary.final_boundary_distance = outcome.boundary_distance;
  summary.final_verdict = outcome.final_verdict;
  summary.oscillation_warning = outcome.oscillation_warning;
  summary.success = outcome.final_verdict == Verdict::Pass && outcome.final_loss &&
                    *outcome.final_loss <= threshold;
}

void run_tal_pipeline(RunContext& ctx, RngStream& rng, RunSummary& summary) {
  const ExperimentConfig& cfg = ctx.cfg;

  std::vector<ScenarioSpec> scenarios;
  scenarios.reserve(static_cast<std::size_t>(cfg.scenario.count));
  for (int i = 0; i < cfg.scenario.count; ++i) {
    scenarios.push_back(generate_scenario(cfg.seed + static_cast<std::uint64_t>(i),
                                          cfg.dimension, cfg.embedding_dim,
                                          cfg.scenario.family));
  }
  auto member_at = [&](std::uint64_t offset) {
    ScenarioSpec s = generate_scenario(cfg.seed + offset, cfg.dimension, cfg.embedding_dim,
                                       cfg.scenario.family);
    return OracleMember{s.defense, s.embedder};
  };
  OracleEnsemble train;
  for (int j = 0; j < cfg.tal_train_members; ++j) {
    train.members.push_back(member_at(kTalTrainSeedOffset + static_cast<std::uint64_t>(j)));
  }
  OracleEnsemble val;
  for (int j = 0; j < cfg.tal_val_members; ++j) {
    val.members.push_back(member_at(kTalValSeedOffset + static_cast<std::uint64_t>(j)));
  }
  OracleMember api = member_at(kTalApiSeedOffset);

  RngStream rng_tal = rng.substream("tal");
  TalObserver offline_obs = [&](const TalEvent& ev) {
    ctx.emit("offline", ev.radius, ev.spl_branch ? Verdict::Deny : Verdict::Pass, ev.val_loss);
  };
  Vec psi0(cfg.dimension, 0.0);
  auto offline = offline_learn(psi0, scenarios, train, val, cfg.spl, cfg.sel, cfg.tal, rng_tal,
                               ctx.ledger, offline_obs);

  RngStream rng_online = rng.substream("tal-online");
  TalObserver online_obs = [&](const TalEvent& ev) {
    // Pass marks an applied update, Deny a sample the API denied
    ctx.emit("online", 0.0, ev.skipped ? Verdict::Deny : Verdict::Pass, ev.val_loss);
  };
  auto online = online_adapt(offline.psi, scenarios, api, cfg.tal.few_shot_budget, cfg.sel,
                             rng_online, ctx.ledger, online_obs);

  // final evaluation against the live API, one query per scenario
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& scenario : scenarios) {
    auto l = member_loss(api, scenario, online.psi, ctx.ledger, "eval");
    if (l) {
      sum += *l;
      ++present;
    }
  }
  summary.final_loss =
      present > 0 ? std::optional<double>(sum / static_cast<double>(present)) : std::nullopt;
  summary.final_verdict = present == scenarios.size() ? Verdict::Pass : Verdict::Deny;
  summary.final_boundary_distance = api.defense->boundary_distance(online.psi);
  summary.success = summary.final_verdict == Verdict::Pass && summary.final_loss &&
                    *summary.final_loss <= cfg.success_loss_threshold;
}

void run_protocol_b(RunContext& ctx, RngStream& rng, RunSummary& summary) {
  const ExperimentConfig& cfg = ctx.cfg;
  double loss_sum = 0.0;
  double dist_sum = 0.0;
  std::size_t present = 0;
  bool all_pass = true;
  bool warning = false;
  for (int i = 0; i < cfg.scenario.count; ++i) {
    ScenarioSpec scenario = generate_scenario(cfg.seed + static_cast<std::uint64_t>(i),
                                              cfg.dimension, cfg.embedding_dim,
                                              cfg.scenario.family);
    RngStream rng_i = rng.substream("protocol-b-" + std::to_string(i));
    ScenarioOutcome outcome = run_single_scenario(ctx, scenario, rng_i, /*with_sel=*/true);
    all_pass = all_pass && outcome.final_verdict == Verdict::Pass;
    warning = warning || outcome.oscillation_warning;
    dist_sum += outcome.boundary_distance;
    if (outcome.final_loss) {
      loss_sum += *outcome.final_loss;
      ++present;
    }
  }
  summary.final_loss =
      present > 0 ? std::optional<double>(loss_sum / static_cast<double>(present)) : std::nullopt;
  summary.final_boundary_distance = dist_sum / static_cast<double>(cfg.scenario.count);
  summary.final_verdict = all_pass ? Verdict::Pass : Verdict::Deny;
  summary.oscillation_warning = warning;
  summary.success = all_pass && summary.final_loss &&
                    *summary.final_loss <= cfg.success_loss_threshold;
}

}  // namespace

RunMetrics run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto start = std::chrono::steady_clock::now();

  RunContext ctx{cfg, {}, {}, 0};
  RunMetrics metrics;
  metrics.config_json = config_to_json(cfg);
  RunSummary& summary = metrics.summary;
  summary.pipeline = std::string(to_string(cfg.pipeline));
  summary.seed = cfg.seed;

  RngStream rng(cfg.seed);
  try {
    switch (cfg.pipeline) {
      case Pipeline::SplOnly:
      case Pipeline::SplSel: {
        ScenarioSpec scenario =
            generate_scenario(cfg.seed, cfg.dimension, cfg.embedding_dim, cfg.scenario.family);
        ScenarioOutcome outcome = run_single_scenario(
            ctx, scenario, rng, /*with_sel=*/cfg.pipeline == Pipeline::SplSel);
        fill_summary_single(summary, outcome, cfg.success_loss_threshold);
        break;
      }
      case Pipeline::Tal:
        run_tal_pipeline(ctx, rng, summary);
        break;
      case Pipeline::ProtocolB:
        run_protocol_b(ctx, rng, summary);
        break;
    }
    summary.status = "ok";
  } catch (const RegionUnreachable&) {
    summary.status = "region-unreachable";
  } catch (const BudgetExhausted&) {
    summary.status = "budget-exhausted";
  }

  summary.total_queries = ctx.ledger.total();
  summary.queries_by_phase = ctx.ledger.by_phase();
  metrics.records = std::move(ctx.records);
  summary.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_metrics(metrics, cfg.output);
  return metrics;
}

int exit_code_for_status(std::string_view status) {
  if (status == "ok") return kExitOk;
  if (status == "region-unreachable") return kExitRegionUnreachable;
  if (status == "budget-exhausted") return kExitBudgetExhausted;
  return 1;
}

}  // namespace probeopt
