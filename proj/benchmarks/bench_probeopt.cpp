#include <benchmark/benchmark.h>

#include "probeopt/oracles.hpp"
#include "probeopt/sel.hpp"
#include "probeopt/spl.hpp"

using namespace probeopt;

namespace {

Vec random_vec(std::size_t d, RngStream& rng) {
  Vec v(d);
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

}  // namespace

static void BM_SampleUnitSphere(benchmark::State& state) {
  RngStream rng(1);
  const auto dim = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_unit_sphere(dim, 10, rng));
  }
}
BENCHMARK(BM_SampleUnitSphere)->Arg(16)->Arg(256)->Arg(4096);

static void BM_CosineSimilarity(benchmark::State& state) {
  RngStream rng(2);
  const auto dim = static_cast<std::size_t>(state.range(0));
  Vec a = random_vec(dim, rng);
  Vec b = random_vec(dim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cosine_similarity(a, b));
  }
}
BENCHMARK(BM_CosineSimilarity)->Arg(16)->Arg(4096);

static void BM_ProbeSphere(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(3);
  Vec w = sample_unit_sphere(dim, 1, rng)[0];
  HalfspaceDefense defense(w, -1.0);
  Vec center(dim, 0.0);
  auto verdict = [&defense](const Vec& p) { return defense.verdict(p); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(probe_sphere(center, 2.0, 10, verdict, rng));
  }
}
BENCHMARK(BM_ProbeSphere)->Arg(16)->Arg(256);

static void BM_SplGradient(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(4);
  ProbeSet probes;
  probes.center = Vec(dim, 0.0);
  probes.radius = 1.0;
  probes.directions = sample_unit_sphere(dim, 10, rng);
  for (std::size_t i = 0; i < 10; ++i) {
    probes.verdicts.push_back(i % 2 == 0 ? Verdict::Pass : Verdict::Deny);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spl_gradient(probes));
  }
}
BENCHMARK(BM_SplGradient)->Arg(16)->Arg(256)->Arg(4096);

static void BM_SpsaGradient(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(5);
  Vec psi = random_vec(dim, rng);
  LossFn quad = [](const Vec& p) { return std::optional<double>(dot(p, p)); };
  for (auto _ : state) {
    benchmark::DoNotOptimize(spsa_gradient(psi, quad, 0.01, rng));
  }
}
BENCHMARK(BM_SpsaGradient)->Arg(16)->Arg(256)->Arg(4096);

static void BM_Harmonize(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(6);
  Vec g_im = random_vec(dim, rng);
  Vec g_spl = random_vec(dim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(harmonize(g_im, g_spl));
  }
}
BENCHMARK(BM_Harmonize)->Arg(16)->Arg(4096);

static void BM_Stage1Halfspace(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  SplConfig cfg;
  cfg.r_max = 40.0;  // high dimensions need wide spheres before a Pass probe shows
  std::uint64_t seed = 0;
  for (auto _ : state) {
    state.PauseTiming();
    ScenarioSpec s = generate_scenario(seed++, dim, 8, kFamilyHalfspace);
    QueryLedger ledger;
    RngStream rng(seed);
    auto verdict = [&](const Vec& p) { return defense_verdict(*s.defense, p, ledger, "b"); };
    SplState st;
    st.psi = Vec(dim, 0.0);
    state.ResumeTiming();
    benchmark::DoNotOptimize(stage1_run(std::move(st), verdict, cfg, rng));
  }
}
BENCHMARK(BM_Stage1Halfspace)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_LinearEmbed(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(7);
  Vec weights = random_vec(8 * dim, rng);
  LinearEmbedder embedder(8, dim, weights, Vec(8, 0.0));
  Vec psi = random_vec(dim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embedder.embed(psi));
  }
}
BENCHMARK(BM_LinearEmbed)->Arg(16)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
