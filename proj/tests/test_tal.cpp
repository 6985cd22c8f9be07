#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "probeopt/experiment.hpp"
#include "probeopt/tal.hpp"

using namespace probeopt;

TEST_CASE("early stopper follows the comparison rules exactly") {
  SUBCASE("rise beyond epsilon stops at the third check") {
    EarlyStopper stopper(0.1, 1);
    CHECK(stopper.observe(1.0) == EarlyStopper::Decision::Continue);
    CHECK(stopper.observe(0.8) == EarlyStopper::Decision::Continue);
    CHECK(stopper.observe(0.95) == EarlyStopper::Decision::Stop);  // 0.95 > 0.8 + 0.1
    CHECK(*stopper.min_loss() == doctest::Approx(0.8));
  }
  SUBCASE("rise within epsilon keeps going and keeps the minimum") {
    EarlyStopper stopper(0.1, 1);
    CHECK(stopper.observe(1.0) == EarlyStopper::Decision::Continue);
    CHECK(stopper.observe(0.8) == EarlyStopper::Decision::Continue);
    CHECK(stopper.observe(0.85) == EarlyStopper::Decision::Continue);  // 0.85 <= 0.9
    CHECK(*stopper.min_loss() == doctest::Approx(0.8));
  }
  SUBCASE("smoothing averages the last window observations") {
    EarlyStopper stopper(0.1, 3);
    stopper.observe(1.0);
    stopper.observe(0.5);
    stopper.observe(0.3);
    CHECK(*stopper.smoothed() == doctest::Approx(0.6));
  }
  SUBCASE("no decision before the window is full") {
    EarlyStopper stopper(0.01, 3);
    CHECK(stopper.observe(0.1) == EarlyStopper::Decision::Continue);
    CHECK(stopper.observe(5.0) == EarlyStopper::Decision::Continue);  // would stop if raw
    CHECK(!stopper.min_loss().has_value());
  }
}

namespace {

OracleMember identity_member(std::size_t d, double offset) {
  Vec w(d, 0.0);
  w[0] = 1.0;
  Vec weights(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) weights[i * d + i] = 1.0;
  return {std::make_shared<HalfspaceDefense>(w, offset),
          LinearEmbedder(d, d, weights, Vec(d, 0.0))};
}

ScenarioSpec scenario_for(const OracleMember& member, Vec text, Vec target) {
  return {std::move(text), std::move(target), member.defense, member.embedder};
}

}  // namespace

TEST_CASE("validation loss averages ensembles over the scenario set") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  QueryLedger ledger;

  SUBCASE("perfect alignment scores zero") {
    OracleEnsemble ens{{m}};
    auto val = validation_loss(unit, ens, scenarios, ledger, "val");
    CHECK(val.value == doctest::Approx(0.0));
    CHECK(!val.saturated);
  }
  SUBCASE("two members average their losses") {
    OracleMember rotated{m.defense, LinearEmbedder(2, 2, {0.0, -1.0, 1.0, 0.0}, {0.0, 0.0})};
    OracleEnsemble ens{{m, rotated}};
    Vec psi{1.0, 0.0};
    auto la = member_loss(m, scenarios[0], psi, ledger, "t");
    auto lr = member_loss(rotated, scenarios[0], psi, ledger, "t");
    auto val = validation_loss(psi, ens, scenarios, ledger, "val");
    CHECK(val.value == doctest::Approx((*la + *lr) / 2.0));
  }
  SUBCASE("an all-denied ensemble saturates at the maximal loss") {
    OracleEnsemble ens{{m}};
    Vec denied{-1.0, 0.0};
    auto val = validation_loss(denied, ens, scenarios, ledger, "val");
    CHECK(val.value == doctest::Approx(4.0));
    CHECK(val.saturated);
  }
}

TEST_CASE("offline learning stops exactly where an injected trace dictates") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  OracleEnsemble ens{{m}};
  QueryLedger ledger;
  RngStream rng(1);
  TalConfig tal;
  tal.epsilon = 0.1;
  tal.val_window = 1;
  tal.max_offline_iters = 10;

  std::vector<double> trace{1.0, 0.8, 0.95, 0.5, 0.4};
  ValidationOverride inject = [&trace](int iteration) {
    return ValidationLoss{trace[static_cast<std::size_t>(iteration - 1)], false};
  };
  Vec psi0{1.0, 0.0};  // starts in Pass, so only sel-branch iterations run
  auto result = offline_learn(psi0, scenarios, ens, ens, SplConfig{}, SelConfig{}, tal, rng,
                              ledger, {}, inject);
  CHECK(result.report.stopped_early);
  CHECK(result.report.offline_iters == 3);  // 0.95 > 0.8 + 0.1 at the third check
  CHECK(*result.report.best_val_loss == doctest::Approx(0.8));
}

TEST_CASE("offline learning without a stop returns at the iteration budget") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  OracleEnsemble ens{{m}};
  QueryLedger ledger;
  RngStream rng(1);
  TalConfig tal;
  tal.val_window = 1;
  tal.max_offline_iters = 7;
  ValidationOverride falling = [](int iteration) {
    return ValidationLoss{1.0 / iteration, false};
  };
  auto result = offline_learn(Vec{1.0, 0.0}, scenarios, ens, ens, SplConfig{}, SelConfig{}, tal,
                              rng, ledger, {}, falling);
  CHECK(!result.report.stopped_early);
  CHECK(result.report.offline_iters == 7);
}

TEST_CASE("saturated validation losses do not trip the patience rule") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  OracleEnsemble ens{{m}};
  QueryLedger ledger;
  RngStream rng(1);
  TalConfig tal;
  tal.val_window = 1;
  tal.max_offline_iters = 6;
  // a saturated spike between two good values must not stop training
  std::vector<ValidationLoss> trace{{1.0, false}, {0.5, false}, {4.0, true},
                                    {0.45, false}, {4.0, true}, {0.4, false}};
  ValidationOverride inject = [&trace](int iteration) {
    return trace[static_cast<std::size_t>(iteration - 1)];
  };
  auto result = offline_learn(Vec{1.0, 0.0}, scenarios, ens, ens, SplConfig{}, SelConfig{}, tal,
                              rng, ledger, {}, inject);
  CHECK(!result.report.stopped_early);
  CHECK(result.report.offline_iters == 6);
}

TEST_CASE("offline learning escapes a Deny start through the probing branch") {
  const std::size_t d = 4;
  OracleMember m = identity_member(d, -1.0);  // origin is in Deny at distance 1
  Vec text(d, 0.0);
  text[0] = 1.0;
  std::vector<ScenarioSpec> scenarios{scenario_for(m, text, text)};
  OracleEnsemble ens{{m}};
  QueryLedger ledger;
  RngStream rng(3);
  TalConfig tal;
  tal.val_window = 5;
  tal.max_offline_iters = 150;
  auto result = offline_learn(Vec(d, 0.0), scenarios, ens, ens, SplConfig{}, SelConfig{}, tal,
                              rng, ledger);
  CHECK(m.defense->verdict(result.psi) == Verdict::Pass);
}

TEST_CASE("online adaptation runs exactly the few-shot budget") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  QueryLedger ledger;
  RngStream rng(2);
  int iterations_seen = 0;
  TalObserver obs = [&](const TalEvent&) { ++iterations_seen; };
  auto result = online_adapt(Vec{1.0, 0.2}, scenarios, m, 10, SelConfig{}, rng, ledger, obs);
  CHECK(iterations_seen == 10);
  CHECK(result.report.online_queries == ledger.count("online-estimate"));
  CHECK(result.report.online_queries >= 20);  // two evaluations per estimate

  CHECK_THROWS_AS(online_adapt(Vec{1.0, 0.2}, scenarios, m, 0, SelConfig{}, rng, ledger),
                  InvalidArgument);
}

TEST_CASE("online adaptation issues no sphere probes") {
  const std::size_t d = 4;
  OracleMember m = identity_member(d, -0.1);
  Vec text(d, 0.0);
  text[0] = 1.0;
  std::vector<ScenarioSpec> scenarios{scenario_for(m, text, text)};
  QueryLedger ledger;
  RngStream rng(4);
  Vec start(d, 0.0);
  start[0] = 0.5;
  online_adapt(start, scenarios, m, 10, SelConfig{}, rng, ledger);
  for (const auto& [phase, n] : ledger.by_phase()) {
    CHECK(phase == "online-estimate");  // the only phase the online loop touches
  }
  CHECK(ledger.count("offline-probe") == 0);
  CHECK(ledger.count("sel-probe") == 0);
}

TEST_CASE("denied online samples are skipped but keep their budget slot") {
  const std::size_t d = 2;
  OracleMember m = identity_member(d, 0.0);
  Vec unit{1.0, 0.0};
  std::vector<ScenarioSpec> scenarios{scenario_for(m, unit, unit)};
  QueryLedger ledger;
  RngStream rng(2);
  Vec denied_start{-5.0, 0.0};  // deep in Deny: every estimate is unavailable
  int iterations_seen = 0;
  TalObserver obs = [&](const TalEvent& ev) {
    ++iterations_seen;
    CHECK(ev.skipped);
  };
  auto result = online_adapt(denied_start, scenarios, m, 10, SelConfig{}, rng, ledger, obs);
  CHECK(iterations_seen == 10);
  CHECK(result.report.online_skipped == 10);
  CHECK(result.psi == denied_start);
}
