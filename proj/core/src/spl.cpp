#include "probeopt/spl.hpp"

#include <algorithm>
#include <cmath>

namespace probeopt {

std::string_view to_string(ProbeWeighting w) {
  switch (w) {
    case ProbeWeighting::PassOnly: return "pass-only";
    case ProbeWeighting::DenyOnly: return "deny-only";
    case ProbeWeighting::PassAndDeny: return "pass-and-deny";
  }
  return "pass-only";
}

void SplConfig::validate() const {
  if (probes < 1) throw InvalidArgument("SplConfig: probes must be >= 1");
  if (!(step_divisor > 0.0)) throw InvalidArgument("SplConfig: step_divisor must be > 0");
  if (!(r_init > 0.0)) throw InvalidArgument("SplConfig: r_init must be > 0");
  if (!(growth > 1.0)) throw InvalidArgument("SplConfig: growth must be > 1");
  if (!(decay > 0.0)) throw InvalidArgument("SplConfig: decay must be > 0");
  if (!(r_min > 0.0)) throw InvalidArgument("SplConfig: r_min must be > 0");
  if (!(r_init <= r_max)) throw InvalidArgument("SplConfig: r_init must be <= r_max");
  if (max_stage1_iters < 1) throw InvalidArgument("SplConfig: max_stage1_iters must be >= 1");
  if (max_stage2_adjusts < 1) throw InvalidArgument("SplConfig: max_stage2_adjusts must be >= 1");
}

int ProbeSet::pass_count() const {
  return static_cast<int>(std::count(verdicts.begin(), verdicts.end(), Verdict::Pass));
}

bool ProbeSet::mixed() const {
  int pass = pass_count();
  return pass > 0 && pass < static_cast<int>(verdicts.size());
}

ProbeSet probe_sphere(const Vec& center, double radius, int probes,
                      const VerdictFn& verdict, RngStream& rng) {
  if (!(radius > 0.0)) throw InvalidArgument("probe_sphere: radius must be > 0");
  if (probes < 1) throw InvalidArgument("probe_sphere: probes must be >= 1");
  ProbeSet set;
  set.center = center;
  set.radius = radius;
  set.directions = sample_unit_sphere(center.size(), static_cast<std::size_t>(probes), rng);
  set.verdicts.reserve(set.directions.size());
  for (const auto& z : set.directions) {
    Vec point = center;
    add_scaled(point, radius, z);
    set.verdicts.push_back(verdict(point));
  }
  return set;
}

Vec spl_gradient(const ProbeSet& probes, ProbeWeighting weighting) {
  if (probes.directions.size() != probes.verdicts.size()) {
    throw InvalidArgument("spl_gradient: directions/verdicts size mismatch");
  }
  if (probes.directions.empty()) throw InvalidArgument("spl_gradient: empty probe set");
  Vec g(probes.center.size(), 0.0);
  for (std::size_t n = 0; n < probes.directions.size(); ++n) {
    double phi = 0.0;
    bool pass = probes.verdicts[n] == Verdict::Pass;
    switch (weighting) {
      case ProbeWeighting::PassOnly:
        phi = pass ? 1.0 : 0.0;
        break;
      case ProbeWeighting::DenyOnly:
        phi = pass ? 0.0 : -1.0;
        break;
      case ProbeWeighting::PassAndDeny:
        phi = pass ? 1.0 : -1.0;
        break;
    }
    if (phi != 0.0) add_scaled(g, phi, probes.directions[n]);
  }
  return scaled(g, 1.0 / static_cast<double>(probes.verdicts.size()));
}

double radius_schedule(double r, double lambda, int i) {
  if (!(r > 0.0)) throw InvalidArgument("radius_schedule: r must be > 0");
  if (!(lambda > 0.0)) throw InvalidArgument("radius_schedule: lambda must be > 0");
  if (i < 1) throw InvalidArgument("radius_schedule: i must be >= 1");
  return r * std::exp(-lambda * static_cast<double>(i));
}

SplState stage1_run(SplState state, const VerdictFn& verdict, const SplConfig& cfg,
                    RngStream& rng, const SplObserver& observer) {
  cfg.validate();
  if (state.stage != SplStage::Seeking) {
    throw InvalidArgument("stage1_run: state.stage must be Seeking");
  }
  if (state.radius <= 0.0) state.radius = cfg.r_init;

  if (verdict(state.psi) == Verdict::Pass) {
    state.stage = SplStage::Approaching;
    if (observer) observer({SplStage::Seeking, 0, state.radius, Verdict::Pass});
    return state;
  }

  for (int iter = 1; iter <= cfg.max_stage1_iters; ++iter) {
    ProbeSet probes = probe_sphere(state.psi, state.radius, cfg.probes, verdict, rng);
    if (probes.pass_count() == 0) {
      // no Pass point in reach: widen the sphere around the unchanged center
      state.radius *= cfg.growth;
      if (state.radius > cfg.r_max) {
        throw RegionUnreachable("stage1_run: radius exceeded r_max without a Pass probe");
      }
      if (observer) observer({SplStage::Seeking, iter, state.radius, Verdict::Deny});
      continue;
    }
    Vec g = spl_gradient(probes, cfg.weighting);
    add_scaled(state.psi, state.radius / cfg.step_divisor, g);
    Verdict center = verdict(state.psi);
    if (observer) observer({SplStage::Seeking, iter, state.radius, center});
    if (center == Verdict::Pass) {
      state.stage = SplStage::Approaching;
      return state;
    }
  }
  throw BudgetExhausted("stage1_run: max_stage1_iters reached before the center passed");
}

SplState stage2_run(SplState state, const VerdictFn& verdict, const SplConfig& cfg,
                    RngStream& rng, const SplObserver& observer) {
  cfg.validate();
  if (state.stage != SplStage::Approaching) {
    throw InvalidArgument("stage2_run: state.stage must be Approaching");
  }

  int i = std::max(1, state.stage2_index);
  int failures = 0;
  int iter = 0;
  for (;;) {
    double ri = radius_schedule(state.radius, cfg.decay, i);
    if (ri < cfg.r_min) {
      state.stage = SplStage::Done;
      state.stage2_index = i;
      if (observer) observer({SplStage::Approaching, iter, ri, Verdict::Pass});
      return state;
    }
    ++iter;
    ProbeSet probes = probe_sphere(state.psi, ri, cfg.probes, verdict, rng);
    if (!probes.mixed()) {
      // radius failed to straddle the boundary; retry with the previous,
      // larger radius (condition 1)
      i = std::max(1, i - 1);
      if (++failures > cfg.max_stage2_adjusts) {
        state.stage = SplStage::Done;
        state.stage2_index = i;
        state.oscillation_warning = true;
        if (observer) observer({SplStage::Approaching, iter, ri, Verdict::Pass});
        return state;
      }
      if (observer) observer({SplStage::Approaching, iter, ri, Verdict::Pass});
      continue;
    }
    Vec g = spl_gradient(probes, cfg.weighting);
    Vec candidate = state.psi;
    add_scaled(candidate, -(ri / cfg.step_divisor), g);
    Verdict cand = verdict(candidate);
    if (cand == Verdict::Pass) {
      state.psi = std::move(candidate);
      failures = 0;
    } else {
      // step overshot into Deny; keep the current iterate and shrink (condition 2)
      if (++failures > cfg.max_stage2_adjusts) {
        state.stage = SplStage::Done;
        state.stage2_index = i + 1;
        state.oscillation_warning = true;
        if (observer) observer({SplStage::Approaching, iter, ri, cand});
        return state;
      }
    }
    ++i;
    if (observer) observer({SplStage::Approaching, iter, ri, cand});
  }
}

}  // namespace probeopt
