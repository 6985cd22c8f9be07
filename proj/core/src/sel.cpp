#include "probeopt/sel.hpp"

#include <cmath>
#include <limits>

namespace probeopt {

void SelConfig::validate() const {
  if (!(c > 0.0 && c <= 1.0)) throw InvalidArgument("SelConfig: c must be in (0, 1]");
  if (!(beta > 0.0)) throw InvalidArgument("SelConfig: beta must be > 0");
  if (pairs_per_estimate < 1) throw InvalidArgument("SelConfig: pairs_per_estimate must be >= 1");
  if (max_resample < 0) throw InvalidArgument("SelConfig: max_resample must be >= 0");
  if (!(tol_orth > 0.0)) throw InvalidArgument("SelConfig: tol_orth must be > 0");
  if (!(momentum_decay > 0.0 && momentum_decay <= 1.0)) {
    throw InvalidArgument("SelConfig: momentum_decay must be in (0, 1]");
  }
}

double mma_loss(const Vec& returned, const Vec& text_embedding,
                const Vec& target_image_embedding) {
  double tia = 1.0 - cosine_similarity(returned, text_embedding);
  double iia = 1.0 - cosine_similarity(returned, target_image_embedding);
  return tia + iia;
}

namespace {

/// One SPSA pair with resampling; nullopt when every redraw hit Deny.
std::optional<Vec> spsa_pair(const Vec& psi, const LossFn& loss, double c, RngStream& rng,
                             int max_resample) {
  const std::size_t d = psi.size();
  for (int attempt = 0; attempt <= max_resample; ++attempt) {
    Vec delta(d);
    for (auto& x : delta) x = rng.next_rademacher();
    Vec plus = psi;
    add_scaled(plus, c, delta);
    auto lp = loss(plus);
    if (!lp) continue;
    Vec minus = psi;
    add_scaled(minus, -c, delta);
    auto lm = loss(minus);
    if (!lm) continue;
    // 1/delta_j == delta_j for Rademacher entries
    return scaled(delta, (*lp - *lm) / (2.0 * c));
  }
  return std::nullopt;
}

}  // namespace

std::optional<Vec> spsa_gradient(const Vec& psi, const LossFn& loss, double c, RngStream& rng,
                                 int max_resample, int pairs) {
  if (!(c > 0.0)) throw InvalidArgument("spsa_gradient: c must be > 0");
  if (pairs < 1) throw InvalidArgument("spsa_gradient: pairs must be >= 1");
  Vec acc(psi.size(), 0.0);
  for (int p = 0; p < pairs; ++p) {
    auto est = spsa_pair(psi, loss, c, rng, max_resample);
    if (!est) return std::nullopt;
    add_scaled(acc, 1.0, *est);
  }
  return scaled(acc, 1.0 / static_cast<double>(pairs));
}

std::optional<Vec> accelerated_gradient(SelState& state, const LossFn& loss,
                                        const SelConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (state.momentum.size() != state.psi.size()) {
    throw InvalidArgument("accelerated_gradient: momentum/psi size mismatch");
  }
  if (cfg.momentum_decay != 1.0) {
    for (auto& x : state.momentum) x *= cfg.momentum_decay;
  }
  Vec lookahead = add(state.psi, state.momentum);
  auto est = spsa_gradient(lookahead, loss, cfg.c, rng, cfg.max_resample, cfg.pairs_per_estimate);
  if (!est) return std::nullopt;
  Vec g_im = state.momentum;
  add_scaled(g_im, cfg.beta, *est);
  state.momentum = g_im;
  return g_im;
}

Vec harmonize(const Vec& g_im, const Vec& g_spl) {
  if (g_im.size() != g_spl.size()) throw InvalidArgument("harmonize: length mismatch");
  double nspl = norm(g_spl);
  if (nspl < 1e-12) return g_im;
  Vec out = g_im;
  add_scaled(out, -dot(g_spl, g_im) / (nspl * nspl), g_spl);
  return out;
}

SelRunResult sel_run(SelState state, const VerdictFn& verdict, const LossFn& loss,
                     const SplConfig& spl_cfg, const SelConfig& sel_cfg, int iters,
                     RngStream& rng, const SelRunOptions& options, const SelObserver& observer) {
  spl_cfg.validate();
  sel_cfg.validate();
  if (iters < 0) throw InvalidArgument("sel_run: iters must be >= 0");

  SelRunResult result{std::move(state), 0, 0, 0, std::nullopt};
  double best = std::numeric_limits<double>::infinity();
  Vec best_psi;  // best accepted iterate; the loop's last iterate sits at the noise floor
  double plateau_anchor = std::numeric_limits<double>::infinity();
  int stall = 0;  // loss observations since the anchor last improved materially

  for (int it = 0; it < iters; ++it) {
    ++result.iterations;
    auto g_im = accelerated_gradient(result.state, loss, sel_cfg, rng);
    if (!g_im) {
      ++result.skipped;
      if (observer) {
        observer({it, true, false, Verdict::Deny, std::nullopt, spl_cfg.r_min,
                  result.state.psi});
      }
      continue;
    }

    ProbeSet probes =
        probe_sphere(result.state.psi, spl_cfg.r_min, spl_cfg.probes, verdict, rng);
    Vec g_spl = spl_gradient(probes, spl_cfg.weighting);
    Vec g_sel = options.use_harmonization ? harmonize(*g_im, g_spl) : *g_im;

    bool accepted = false;
    Verdict first_verdict = Verdict::Deny;
    std::optional<double> accepted_loss;
    double step = sel_cfg.beta;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Vec candidate = result.state.psi;
      add_scaled(candidate, -step, g_sel);
      auto l = loss(candidate);
      if (attempt == 0) {
        first_verdict = l ? Verdict::Pass : Verdict::Deny;
        if (!l) ++result.deny_candidates;
      }
      if (l) {
        result.state.psi = std::move(candidate);
        accepted_loss = l;
        accepted = true;
        break;
      }
      step *= 0.5;  // revert and retry once with a halved step
    }

    if (observer) {
      observer({it, false, accepted, first_verdict, accepted_loss, spl_cfg.r_min,
                result.state.psi});
    }

    if (accepted_loss) {
      result.last_loss = accepted_loss;
      if (*accepted_loss < best) {
        best = *accepted_loss;
        best_psi = result.state.psi;
      }
      if (*accepted_loss < plateau_anchor - options.plateau_tolerance) {
        plateau_anchor = *accepted_loss;
        stall = 0;
      } else if (++stall >= options.plateau_window) {
        break;
      }
    }
  }
  if (!best_psi.empty()) {
    result.state.psi = std::move(best_psi);
    result.last_loss = best;
  }
  return result;
}

}  // namespace probeopt
