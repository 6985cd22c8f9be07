#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "probeopt/core.hpp"

using namespace probeopt;

TEST_CASE("dot and norm") {
  CHECK(dot({1.0, 2.0}, {3.0, 4.0}) == doctest::Approx(11.0));
  CHECK(norm({3.0, 4.0}) == doctest::Approx(5.0));
  CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("cosine_similarity basics") {
  CHECK(cosine_similarity({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(cosine_similarity({1.0, 1.0}, {1.0, 0.0}) == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK_THROWS_AS(cosine_similarity({0.0, 0.0}, {1.0, 0.0}), DegenerateInput);
  CHECK_THROWS_AS(cosine_similarity({1.0}, {1.0, 0.0}), InvalidArgument);
}

TEST_CASE("cosine_similarity agrees with brute-force angle computation") {
  // independent oracle: angle from atan2 in the plane spanned by the pair
  RngStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Vec a(3), b(3);
    for (auto& x : a) x = rng.next_gaussian();
    for (auto& x : b) x = rng.next_gaussian();
    Vec an = normalized(a);
    Vec bn = normalized(b);
    Vec b_perp = sub(bn, scaled(an, dot(an, bn)));
    double angle = std::atan2(norm(b_perp), dot(an, bn));
    CHECK(cosine_similarity(a, b) == doctest::Approx(std::cos(angle)).epsilon(1e-10));
  }
}

TEST_CASE("cosine_similarity is symmetric and scale-invariant") {
  RngStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Vec a(4), b(4);
    for (auto& x : a) x = rng.next_gaussian();
    for (auto& x : b) x = rng.next_gaussian();
    double alpha = rng.next_uniform() * 10.0 + 0.1;
    double beta = rng.next_uniform() * 10.0 + 0.1;
    double c1 = cosine_similarity(a, b);
    CHECK(cosine_similarity(b, a) == doctest::Approx(c1).epsilon(1e-12));
    CHECK(cosine_similarity(scaled(a, alpha), scaled(b, beta)) ==
          doctest::Approx(c1).epsilon(1e-12));
  }
}

TEST_CASE("rng streams are deterministic and label-separated") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream base(7);
  RngStream s1 = base.substream("spl");
  RngStream s2 = base.substream("sel");
  RngStream s1_again = base.substream("spl");
  CHECK(s1.next_u64() == s1_again.next_u64());
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(base.position() == 0);  // substream derivation does not consume draws
}

TEST_CASE("gaussian draws look standard normal") {
  RngStream rng(123);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = rng.next_gaussian();
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sample_unit_sphere contract") {
  RngStream rng(7);
  SUBCASE("1-D directions are +1 or -1") {
    auto dirs = sample_unit_sphere(1, 4, rng);
    for (const auto& z : dirs) CHECK(std::abs(z[0]) == doctest::Approx(1.0));
  }
  SUBCASE("unit norm within 1e-12") {
    auto dirs = sample_unit_sphere(3, 5, rng);
    REQUIRE(dirs.size() == 5);
    for (const auto& z : dirs) CHECK(std::abs(norm(z) - 1.0) < 1e-12);
  }
  SUBCASE("bit-identical outputs for identical seeds") {
    RngStream r1(42), r2(42);
    auto d1 = sample_unit_sphere(8, 10, r1);
    auto d2 = sample_unit_sphere(8, 10, r2);
    CHECK(d1 == d2);
  }
  SUBCASE("zero arguments rejected") {
    CHECK_THROWS_AS(sample_unit_sphere(0, 1, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_unit_sphere(1, 0, rng), InvalidArgument);
  }
}

TEST_CASE("sphere sampling is unbiased: empirical mean norm stays small") {
  for (std::size_t dim : {2u, 16u, 64u}) {
    RngStream rng(1000 + dim);
    Vec mean(dim, 0.0);
    const int n = 10000;
    auto dirs = sample_unit_sphere(dim, n, rng);
    for (const auto& z : dirs) add_scaled(mean, 1.0 / n, z);
    CHECK(norm(mean) < 0.05);
  }
}

TEST_CASE("query ledger counts per phase and in total") {
  QueryLedger ledger;
  ledger.record("spl-stage1");
  CHECK(ledger.total() == 1);
  CHECK(ledger.count("spl-stage1") == 1);

  for (int i = 0; i < 9; ++i) ledger.record("sel");
  CHECK(ledger.total() == 10);

  // one probing round at the default probe count adds exactly 10
  for (int i = 0; i < 10; ++i) ledger.record("spl-stage1");
  CHECK(ledger.total() == 20);
  CHECK(ledger.count("spl-stage1") == 11);

  std::uint64_t sum = 0;
  for (const auto& [phase, n] : ledger.by_phase()) sum += n;
  CHECK(sum == ledger.total());
}

TEST_CASE("verdict round-trips through strings") {
  CHECK(verdict_from_string(to_string(Verdict::Pass)) == Verdict::Pass);
  CHECK(verdict_from_string(to_string(Verdict::Deny)) == Verdict::Deny);
  CHECK_THROWS_AS(verdict_from_string("Maybe"), ParseError);
}
