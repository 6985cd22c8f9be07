#include "probeopt/tal.hpp"

#include <algorithm>
#include <numeric>

namespace probeopt {

namespace {

constexpr double kMaxLoss = 4.0;  // upper bound of the alignment loss

const char* kPhaseOfflineProbe = "offline-probe";
const char* kPhaseOfflineCheck = "offline-check";
const char* kPhaseOfflineEstimate = "offline-estimate";
const char* kPhaseOfflineVal = "offline-val";
const char* kPhaseOnlineEstimate = "online-estimate";

}  // namespace

void TalConfig::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("TalConfig: epsilon must be > 0");
  if (few_shot_budget < 1) throw InvalidArgument("TalConfig: few_shot_budget must be >= 1");
  if (val_window < 1) throw InvalidArgument("TalConfig: val_window must be >= 1");
  if (max_offline_iters < 1) throw InvalidArgument("TalConfig: max_offline_iters must be >= 1");
}

EarlyStopper::EarlyStopper(double epsilon, int window)
    : epsilon_(epsilon), window_(static_cast<std::size_t>(window)) {
  if (!(epsilon > 0.0)) throw InvalidArgument("EarlyStopper: epsilon must be > 0");
  if (window < 1) throw InvalidArgument("EarlyStopper: window must be >= 1");
}

EarlyStopper::Decision EarlyStopper::observe(double raw_val_loss) {
  ++observations_;
  recent_.push_back(raw_val_loss);
  if (recent_.size() > window_) recent_.pop_front();
  if (recent_.size() < window_) return Decision::Continue;  // warm-up
  double sm = *smoothed();
  if (!min_ || sm < *min_) {
    min_ = sm;
    return Decision::Continue;
  }
  if (sm > *min_ + epsilon_) return Decision::Stop;
  return Decision::Continue;
}

std::optional<double> EarlyStopper::smoothed() const {
  if (recent_.size() < window_) return std::nullopt;
  double s = std::accumulate(recent_.begin(), recent_.end(), 0.0);
  return s / static_cast<double>(recent_.size());
}

std::optional<double> EarlyStopper::min_loss() const { return min_; }

ValidationLoss validation_loss(const Vec& psi, const OracleEnsemble& val_ensemble,
                               std::span<const ScenarioSpec> scenarios, QueryLedger& ledger,
                               std::string_view phase) {
  if (scenarios.empty()) throw InvalidArgument("validation_loss: empty scenario set");
  if (val_ensemble.members.empty()) throw InvalidArgument("validation_loss: empty ensemble");
  double sum = 0.0;
  bool saturated = false;
  for (const auto& scenario : scenarios) {
    auto l = ensemble_loss(val_ensemble, scenario, psi, ledger, phase);
    if (l) {
      sum += *l;
    } else {
      sum += kMaxLoss;
      saturated = true;
    }
  }
  return {sum / static_cast<double>(scenarios.size()), saturated};
}

namespace {

/// One probing-gradient iteration against the ensemble verdict (the Deny
/// branch of the offline loop). The radius grows, clamped at r_max, while no
/// probe passes; offline training never aborts on the cap.
void offline_spl_step(Vec& psi, double& radius, const OracleEnsemble& train,
                      const SplConfig& cfg, RngStream& rng, QueryLedger& ledger) {
  VerdictFn verdict = [&](const Vec& p) {
    return ensemble_verdict(train, p, ledger, kPhaseOfflineProbe);
  };
  ProbeSet probes = probe_sphere(psi, radius, cfg.probes, verdict, rng);
  if (probes.pass_count() == 0) {
    radius = std::min(radius * cfg.growth, cfg.r_max);
    return;
  }
  Vec g = spl_gradient(probes, cfg.weighting);
  add_scaled(psi, radius / cfg.step_divisor, g);
}

/// One projected semantic step against the ensemble (the Pass branch).
bool offline_sel_step(SelState& state, const ScenarioSpec& scenario, const OracleEnsemble& train,
                      const SplConfig& spl_cfg, const SelConfig& sel_cfg, RngStream& rng,
                      QueryLedger& ledger) {
  LossFn loss = [&](const Vec& p) {
    return ensemble_loss(train, scenario, p, ledger, kPhaseOfflineEstimate);
  };
  auto g_im = accelerated_gradient(state, loss, sel_cfg, rng);
  if (!g_im) return false;

  VerdictFn verdict = [&](const Vec& p) {
    return ensemble_verdict(train, p, ledger, kPhaseOfflineProbe);
  };
  ProbeSet probes = probe_sphere(state.psi, spl_cfg.r_min, spl_cfg.probes, verdict, rng);
  Vec g_sel = harmonize(*g_im, spl_gradient(probes, spl_cfg.weighting));

  double step = sel_cfg.beta;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Vec candidate = state.psi;
    add_scaled(candidate, -step, g_sel);
    if (ensemble_loss(train, scenario, candidate, ledger, kPhaseOfflineCheck)) {
      state.psi = std::move(candidate);
      return true;
    }
    step *= 0.5;
  }
  return true;  // both candidates denied; iterate kept
}

}  // namespace

OfflineResult offline_learn(const Vec& psi0, std::span<const ScenarioSpec> scenarios,
                            const OracleEnsemble& train_ensemble,
                            const OracleEnsemble& val_ensemble, const SplConfig& spl_cfg,
                            const SelConfig& sel_cfg, const TalConfig& tal_cfg, RngStream& rng,
                            QueryLedger& ledger, const TalObserver& observer,
                            const ValidationOverride& val_override) {
  spl_cfg.validate();
  sel_cfg.validate();
  tal_cfg.validate();
  if (scenarios.empty()) throw InvalidArgument("offline_learn: empty scenario set");
  if (train_ensemble.members.empty() || val_ensemble.members.empty()) {
    throw InvalidArgument("offline_learn: empty ensemble");
  }

  SelState state(psi0);
  double radius = spl_cfg.r_init;
  EarlyStopper stopper(tal_cfg.epsilon, tal_cfg.val_window);
  TalReport report;
  Vec best_psi;  // iterate at the smoothed-validation minimum (checkpoint restore)

  std::vector<std::size_t> order(scenarios.size());
  std::iota(order.begin(), order.end(), 0);

  bool stop = false;
  while (!stop && report.offline_iters < tal_cfg.max_offline_iters) {
    // fresh seeded shuffle each pass over the scenario list
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      if (report.offline_iters >= tal_cfg.max_offline_iters) break;
      ++report.offline_iters;
      const ScenarioSpec& scenario = scenarios[idx];

      bool deny_region =
          ensemble_verdict(train_ensemble, state.psi, ledger, kPhaseOfflineCheck) == Verdict::Deny;
      bool skipped = false;
      if (deny_region) {
        offline_spl_step(state.psi, radius, train_ensemble, spl_cfg, rng, ledger);
      } else {
        skipped = !offline_sel_step(state, scenario, train_ensemble, spl_cfg, sel_cfg, rng, ledger);
      }

      ValidationLoss val =
          val_override ? val_override(report.offline_iters)
                       : validation_loss(state.psi, val_ensemble, scenarios, ledger,
                                         kPhaseOfflineVal);
      if (observer) {
        observer({report.offline_iters, deny_region, skipped, val.value,
                  deny_region ? radius : spl_cfg.r_min});
      }
      // an all-denied validation has no observable loss; it must not anchor
      // or trip the patience rule
      if (!val.saturated) {
        auto min_before = stopper.min_loss();
        EarlyStopper::Decision decision = stopper.observe(val.value);
        if (stopper.min_loss() != min_before) best_psi = state.psi;
        if (decision == EarlyStopper::Decision::Stop) {
          report.stopped_early = true;
          stop = true;
          break;
        }
      }
    }
  }
  report.best_val_loss = stopper.min_loss();
  if (!best_psi.empty()) state.psi = std::move(best_psi);
  return {std::move(state.psi), report};
}

OnlineResult online_adapt(const Vec& psi_offline, std::span<const ScenarioSpec> scenarios,
                          const OracleMember& api, int few_shot_budget, const SelConfig& sel_cfg,
                          RngStream& rng, QueryLedger& ledger, const TalObserver& observer) {
  sel_cfg.validate();
  if (few_shot_budget < 1) throw InvalidArgument("online_adapt: few_shot_budget must be >= 1");
  if (scenarios.empty()) throw InvalidArgument("online_adapt: empty scenario set");

  SelState state(psi_offline);
  TalReport report;
  std::uint64_t before = ledger.count(kPhaseOnlineEstimate);

  for (int w = 0; w < few_shot_budget; ++w) {
    const ScenarioSpec& scenario = scenarios[static_cast<std::size_t>(w) % scenarios.size()];
    LossFn loss = [&](const Vec& p) {
      return member_loss(api, scenario, p, ledger, kPhaseOnlineEstimate);
    };
    auto g_im = accelerated_gradient(state, loss, sel_cfg, rng);
    if (!g_im) {
      ++report.online_skipped;
      if (observer) observer({w + 1, false, true, std::nullopt, 0.0});
      continue;
    }
    add_scaled(state.psi, -sel_cfg.beta, *g_im);
    if (observer) observer({w + 1, false, false, std::nullopt, 0.0});
  }
  report.online_queries = ledger.count(kPhaseOnlineEstimate) - before;
  return {std::move(state.psi), report};
}

}  // namespace probeopt
