#ifndef PROBEOPT_TAL_HPP
#define PROBEOPT_TAL_HPP

#include <deque>
#include <functional>
#include <optional>
#include <span>

#include "probeopt/oracles.hpp"
#include "probeopt/sel.hpp"
#include "probeopt/spl.hpp"

namespace probeopt {

// ---------------------------------------------------------------------------
// Transfer across related oracles: train offline against an ensemble of
// training oracles with validation-based early stopping, then adapt online
// to a held-out oracle with a fixed few-shot query budget.

struct TalConfig {
  double epsilon = 0.1;       ///< patience threshold on the validation loss
  int few_shot_budget = 10;   ///< W, online update iterations
  int val_window = 5;         ///< smoothing window over raw validation losses
  int max_offline_iters = 400;

  void validate() const;
};

struct TalReport {
  bool stopped_early = false;
  int offline_iters = 0;
  std::optional<double> best_val_loss;
  std::uint64_t online_queries = 0;
  int online_skipped = 0;  ///< online samples skipped because the API denied
};

/// Patience rule over a smoothed validation-loss series. Raw values are
/// averaged over the last `window` observations; decisions start once the
/// window is full (immediately for window = 1). Tracks the minimum smoothed
/// value and stops when the current smoothed value exceeds it by more than
/// epsilon.
class EarlyStopper {
 public:
  enum class Decision { Continue, Stop };

  EarlyStopper(double epsilon, int window);

  Decision observe(double raw_val_loss);

  std::optional<double> smoothed() const;
  std::optional<double> min_loss() const;
  int observations() const { return observations_; }

 private:
  double epsilon_;
  std::size_t window_;
  std::deque<double> recent_;
  std::optional<double> min_;
  int observations_ = 0;
};

/// Raw validation loss: mean ensemble loss over the scenario set, with a
/// majority-denied scenario contributing the maximal loss 4.0 and raising the
/// saturated flag.
struct ValidationLoss {
  double value = 0.0;
  bool saturated = false;
};

ValidationLoss validation_loss(const Vec& psi, const OracleEnsemble& val_ensemble,
                               std::span<const ScenarioSpec> scenarios, QueryLedger& ledger,
                               std::string_view phase);

/// Injection seam for tests: replaces the real validation evaluation;
/// receives the 1-based offline iteration index.
using ValidationOverride = std::function<ValidationLoss(int iteration)>;

struct TalEvent {
  int iteration;
  bool spl_branch;  ///< true when the iterate was in the training-ensemble Deny region
  bool skipped;     ///< no estimate was available this iteration
  std::optional<double> val_loss;
  double radius;
};
using TalObserver = std::function<void(const TalEvent&)>;

struct OfflineResult {
  Vec psi;
  TalReport report;
};

/// Offline phase: per iteration over the (seeded, shuffled) scenario list,
/// update with the probing gradient while the training ensemble denies the
/// iterate and with the projected semantic gradient once it passes; evaluate
/// the validation ensemble after every update and early-stop on the patience
/// rule. Saturated validation evaluations are recorded but do not feed the
/// patience tracker. Returns the iterate at the smoothed-validation minimum
/// (the later iterates wander inside the flat loss region and can leave the
/// held-out oracles' Pass regions), with stopped_early = false when
/// max_offline_iters is reached.
OfflineResult offline_learn(const Vec& psi0, std::span<const ScenarioSpec> scenarios,
                            const OracleEnsemble& train_ensemble,
                            const OracleEnsemble& val_ensemble, const SplConfig& spl_cfg,
                            const SelConfig& sel_cfg, const TalConfig& tal_cfg, RngStream& rng,
                            QueryLedger& ledger, const TalObserver& observer = {},
                            const ValidationOverride& val_override = {});

struct OnlineResult {
  Vec psi;
  TalReport report;
};

/// Online phase: exactly W iterations cycling over the scenario list, each
/// computing the momentum-improved gradient against the live API and applying
/// psi <- psi - beta * g. No sphere probes and no projection are used online;
/// a denied sample is skipped but keeps its place in the budget.
OnlineResult online_adapt(const Vec& psi_offline, std::span<const ScenarioSpec> scenarios,
                          const OracleMember& api, int few_shot_budget, const SelConfig& sel_cfg,
                          RngStream& rng, QueryLedger& ledger, const TalObserver& observer = {});

}  // namespace probeopt

#endif  // PROBEOPT_TAL_HPP
