#ifndef PROBEOPT_SEL_HPP
#define PROBEOPT_SEL_HPP

#include <functional>
#include <optional>

#include "probeopt/core.hpp"
#include "probeopt/spl.hpp"

namespace probeopt {

// ---------------------------------------------------------------------------
// Semantic refinement: zeroth-order descent on an alignment loss that is
// only defined on the Pass side, projected so updates cannot drag the
// iterate back across the boundary.

/// Loss capability of the black box: nullopt means the defense denied and no
/// loss is observable. Implementations record one ledger query per call.
using LossFn = std::function<std::optional<double>(const Vec&)>;

struct SelConfig {
  double c = 0.01;             ///< SPSA perturbation scale, in (0, 1]
  double beta = 0.3;           ///< learning rate
  int pairs_per_estimate = 1;  ///< SPSA sample pairs averaged per estimate
  int max_resample = 5;        ///< perturbation redraws when an evaluation is denied
  double tol_orth = 1e-9;      ///< orthogonality tolerance used by tests
  /// Factor applied to the stored previous gradient before each estimate.
  /// 1.0 reproduces the plain accumulation rule, which is kept available but
  /// is unstable in practice; see accelerated_gradient().
  double momentum_decay = 0.7;

  void validate() const;
};

struct SelState {
  Vec psi;
  Vec momentum;  ///< previous improved gradient, zero until the first estimate

  explicit SelState(Vec start) : psi(std::move(start)), momentum(psi.size(), 0.0) {}
};

/// Multi-modal alignment loss: (1 - cos(returned, text)) + (1 - cos(returned,
/// target)). Each term lies in [0, 2]. Inputs are expected unit-norm;
/// zero-norm inputs throw DegenerateInput.
double mma_loss(const Vec& returned, const Vec& text_embedding, const Vec& target_image_embedding);

/// Two-sided SPSA estimate with Rademacher perturbations: elementwise
/// (L(psi + c delta) - L(psi - c delta)) / (2 c delta), averaged over
/// `pairs` perturbation pairs. When an evaluation lands in Deny the
/// perturbation is redrawn up to `max_resample` times; nullopt signals that
/// no estimate was available and the caller must skip its step.
std::optional<Vec> spsa_gradient(const Vec& psi, const LossFn& loss, double c, RngStream& rng,
                                 int max_resample = 5, int pairs = 1);

/// Momentum-improved estimate: decays the stored previous gradient, estimates
/// at the lookahead point psi + momentum, and returns
/// momentum + beta * estimate, which also becomes the new stored momentum.
/// With momentum_decay = 1.0 this is the plain accumulation rule; left
/// undamped it oscillates and can park the lookahead in the Deny region,
/// where every estimate is unavailable. Skipped estimates leave the decayed
/// momentum in place, so the lookahead drifts back toward psi over time.
std::optional<Vec> accelerated_gradient(SelState& state, const LossFn& loss,
                                        const SelConfig& cfg, RngStream& rng);

/// Remove from g_im its component along g_spl:
/// g_im - (g_spl.g_im / ||g_spl||^2) g_spl. Returns g_im unchanged when
/// ||g_spl|| < 1e-12. The result is orthogonal to g_spl and never longer
/// than g_im.
Vec harmonize(const Vec& g_im, const Vec& g_spl);

struct SelRunOptions {
  /// Disable to run the unprojected ablation (updates use g_im directly).
  bool use_harmonization = true;
  /// Stop when the best observed loss has not improved by at least
  /// plateau_tolerance for plateau_window consecutive iterations.
  double plateau_tolerance = 1e-6;
  int plateau_window = 10;
};

struct SelEvent {
  int iteration;
  bool skipped;               ///< no SPSA estimate was available
  bool accepted;              ///< an update was applied
  Verdict candidate_verdict;  ///< verdict of the full-step candidate
  std::optional<double> loss; ///< loss at the accepted iterate, if any
  double probe_radius;
  Vec psi;                    ///< iterate after this iteration
};
using SelObserver = std::function<void(const SelEvent&)>;

struct SelRunResult {
  SelState state;
  int iterations = 0;
  int skipped = 0;
  int deny_candidates = 0;  ///< candidates the revert rule rejected at least once
  std::optional<double> last_loss;
};

/// Alternating loop: estimate g_im, re-probe a fresh g_spl at r_min, project,
/// step psi <- psi - beta * g_sel. A candidate that lands in Deny is retried
/// once at half step and otherwise reverted, so every accepted iterate is
/// Pass. Runs `iters` iterations or stops at the plateau rule.
SelRunResult sel_run(SelState state, const VerdictFn& verdict, const LossFn& loss,
                     const SplConfig& spl_cfg, const SelConfig& sel_cfg, int iters,
                     RngStream& rng, const SelRunOptions& options = {},
                     const SelObserver& observer = {});

}  // namespace probeopt

#endif  // PROBEOPT_SEL_HPP
