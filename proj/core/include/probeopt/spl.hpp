#ifndef PROBEOPT_SPL_HPP
#define PROBEOPT_SPL_HPP

#include <functional>
#include <vector>

#include "probeopt/core.hpp"

namespace probeopt {

// ---------------------------------------------------------------------------
// Sphere probing: drive a parameter vector across a binary Pass/Deny
// boundary using nothing but verdicts of points sampled on spheres around the
// current iterate. Stage 1 escapes the Deny region; stage 2 walks back toward
// the boundary from the Pass side on a decaying radius schedule.

/// Verdict capability of a defended black box; implementations are expected
/// to record one ledger query per call.
using VerdictFn = std::function<Verdict(const Vec&)>;

/// Weighting of probe verdicts in the probing gradient. PassOnly is the
/// default rule (Pass = 1, Deny = 0); the alternatives exist for ablations
/// and behave near-identically.
enum class ProbeWeighting { PassOnly, DenyOnly, PassAndDeny };

std::string_view to_string(ProbeWeighting w);

struct SplConfig {
  int probes = 10;             ///< N, verdicts per sphere
  double step_divisor = 4.0;   ///< k; the step size is radius / k
  double r_init = 0.1;         ///< stage-1 starting radius
  double growth = 1.3;         ///< stage-1 radius growth factor
  double decay = 0.6;          ///< lambda in the stage-2 schedule r * exp(-lambda i)
  double r_min = 0.2;          ///< stage-2 stop threshold
  double r_max = 10.0;         ///< stage-1 growth cap
  int max_stage1_iters = 200;
  int max_stage2_adjusts = 30; ///< consecutive condition failures tolerated in stage 2
  ProbeWeighting weighting = ProbeWeighting::PassOnly;

  void validate() const;  ///< throws InvalidArgument on broken invariants
};

enum class SplStage { Seeking, Approaching, Done };

struct ProbeSet {
  Vec center;
  double radius = 0.0;
  std::vector<Vec> directions;
  std::vector<Verdict> verdicts;

  int pass_count() const;
  /// True when the probe set saw both verdicts.
  bool mixed() const;
};

struct SplState {
  Vec psi;
  double radius = 0.0;
  SplStage stage = SplStage::Seeking;
  int stage2_index = 0;             ///< i in the stage-2 radius schedule
  bool oscillation_warning = false; ///< stage 2 gave up adjusting before r_min
};

/// One per-iteration callback for metrics; verdict is the center (or
/// candidate) verdict the iteration ended on.
struct SplEvent {
  SplStage stage;
  int iteration;
  double radius;
  Verdict verdict;
};
using SplObserver = std::function<void(const SplEvent&)>;

/// Probe `probes` points center + radius * z with fresh uniform directions.
/// All directions are drawn before the first verdict query, so results do not
/// depend on query completion order.
ProbeSet probe_sphere(const Vec& center, double radius, int probes,
                      const VerdictFn& verdict, RngStream& rng);

/// (1/N) sum Phi(verdict_n) z_n. Norm is at most 1 for every weighting.
Vec spl_gradient(const ProbeSet& probes, ProbeWeighting weighting = ProbeWeighting::PassOnly);

/// Stage-2 radius for iteration i >= 1: r * exp(-lambda * i).
double radius_schedule(double r, double lambda, int i);

/// Stage 1: grow the probe radius until the sphere sees Pass points, then
/// step along the probing gradient until the center itself is Pass.
/// Throws RegionUnreachable when the radius exceeds r_max with no Pass probe
/// and BudgetExhausted past max_stage1_iters.
SplState stage1_run(SplState state, const VerdictFn& verdict, const SplConfig& cfg,
                    RngStream& rng, const SplObserver& observer = {});

/// Stage 2: walk toward the boundary on the decaying radius schedule, keeping
/// the center on the Pass side. Candidate steps that land in Deny are
/// reverted. Terminates when the radius falls below r_min, or with
/// oscillation_warning set after max_stage2_adjusts consecutive condition
/// failures.
SplState stage2_run(SplState state, const VerdictFn& verdict, const SplConfig& cfg,
                    RngStream& rng, const SplObserver& observer = {});

}  // namespace probeopt

#endif  // PROBEOPT_SPL_HPP
