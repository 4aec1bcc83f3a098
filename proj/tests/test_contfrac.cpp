#include "kfib/contfrac.hpp"

#include <filesystem>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "kfib/pipeline.hpp"
#include "kfib/reduction.hpp"

using kfib::CertifiedReal;
using kfib::ContinuedFraction;

namespace {

mpz_class pow10z(unsigned long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, e);
  return p;
}

}  // namespace

TEST_CASE("golden ratio expands to all ones", "[contfrac]") {
  ContinuedFraction cf(kfib::golden_ratio_expr());
  for (size_t i = 0; i < 60; ++i) CHECK(cf.quotient(i) == 1);
  // Convergents are ratios of consecutive Fibonacci numbers.
  auto [p, q] = cf.convergent(9);
  CHECK(p == 89);
  CHECK(q == 55);
}

TEST_CASE("log10/log2 quotients and the index-135 spike", "[contfrac]") {
  ContinuedFraction cf(kfib::theta_expr());
  CHECK(cf.quotient(0) == 3);
  CHECK(cf.quotient(1) == 3);
  CHECK(cf.quotient(2) == 9);
  CHECK(cf.quotient(3) == 2);
  CHECK(cf.quotient(135) == 5393);

  auto [p0, q0] = cf.convergent(0);
  CHECK(p0 == 3);
  CHECK(q0 == 1);
  auto [p1, q1] = cf.convergent(1);
  CHECK(p1 == 10);
  CHECK(q1 == 3);

  // Denominators strictly increase from index 1 on.
  mpz_class prev = 0;
  for (size_t i = 1; i <= 140; ++i) {
    auto [p, q] = cf.convergent(i);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("convergents straddle the wide digit cap as recorded", "[contfrac]") {
  ContinuedFraction cf(kfib::theta_expr());
  const mpz_class M = 15 * pow10z(281);  // 1.5e282
  const auto hit = kfib::first_convergent_beyond(cf, M);
  CHECK(hit.index == 571);
  auto [p570, q570] = cf.convergent(570);
  CHECK(q570 <= M);
  CHECK(hit.q > M);

  const auto leg = kfib::legendre_lower(cf, M);
  CHECK(leg.cutoff_index == 570);
  CHECK(leg.a_max == 5393);
  CHECK(leg.factor == 5395);
}

TEST_CASE("first convergent beyond small bounds", "[contfrac]") {
  ContinuedFraction cf(kfib::theta_expr());
  CHECK(kfib::first_convergent_beyond(cf, 0).index == 0);

  // Regression point for the narrow cap: self-consistent straddle.
  const mpz_class bound = 6 * (16 * pow10z(58));
  const auto hit = kfib::first_convergent_beyond(cf, bound);
  CHECK(hit.q > bound);
  auto [pp, qq] = cf.convergent(hit.index - 1);
  CHECK(qq <= bound);
}

TEST_CASE("legendre bound at a tiny cutoff", "[contfrac]") {
  ContinuedFraction cf(kfib::theta_expr());
  const auto leg = kfib::legendre_lower(cf, 2);
  CHECK(leg.cutoff_index == 0);  // q_0 = 1 <= 2 < q_1 = 3
  CHECK(leg.a_max == 3);
  CHECK(leg.factor == 5);
  CHECK_THROWS_AS(kfib::legendre_lower(cf, 0), std::invalid_argument);
}

TEST_CASE("legendre bound holds on random x below the cutoff", "[contfrac][property]") {
  ContinuedFraction cf(kfib::theta_expr());
  const mpz_class M = 1000000;
  const auto leg = kfib::legendre_lower(cf, M);
  const auto gamma = kfib::theta_expr().at(256);
  std::mt19937 rng(31337);
  std::uniform_int_distribution<long> xs(1, 999999);
  for (int i = 0; i < 10000; ++i) {
    const long x = xs(rng);
    // With y the nearest integer, |x gamma - y| = ||x gamma||.
    const auto dist = kfib::dist_to_nearest_int(gamma * mpz_class(x));
    const mpq_class bound(1, leg.factor * x);
    CHECK(kfib::decided(dist.greater_than(bound), "legendre soundness"));
  }
}

TEST_CASE("convergent quality |gamma - p/q| < 1/(q q')", "[contfrac][property]") {
  ContinuedFraction cf(kfib::theta_expr());
  const auto gamma = kfib::theta_expr().at(2048);
  for (size_t i = 0; i < 90; ++i) {
    auto [p, q] = cf.convergent(i);
    auto [p2, q2] = cf.convergent(i + 1);
    const auto err = (gamma - CertifiedReal::from_mpq(mpq_class(p, q), 2048)).abs();
    CHECK(kfib::decided(err.less_than(mpq_class(1, q * q2)), "quality"));
  }
}

TEST_CASE("quotients are reproducible and refinement-stable", "[contfrac]") {
  ContinuedFraction a(kfib::theta_expr());
  ContinuedFraction b(kfib::theta_expr());
  (void)a.quotient(200);  // force a deep expansion on one copy only
  for (size_t i = 0; i < 120; ++i) CHECK(a.quotient(i) == b.quotient(i));
}

TEST_CASE("recomputation at doubled precision fixes every quotient", "[contfrac]") {
  // The expansion certifies each floor from interval endpoints; doubling
  // the policy floor must reproduce the same prefix.
  kfib::PrecisionPolicy coarse{256, 65536}, fine{512, 65536};
  ContinuedFraction a(kfib::theta_expr(), coarse);
  ContinuedFraction b(kfib::theta_expr(), fine);
  for (size_t i = 0; i < 80; ++i) CHECK(a.quotient(i) == b.quotient(i));
}

TEST_CASE("disk cache round trip", "[contfrac]") {
  const auto dir = std::filesystem::temp_directory_path() / "kfib-cf-test";
  std::filesystem::remove_all(dir);
  const auto file = dir / "theta.json";

  ContinuedFraction a(kfib::theta_expr());
  (void)a.quotient(50);
  a.save_cache(file);

  ContinuedFraction b(kfib::theta_expr());
  CHECK(b.load_cache(file));
  CHECK(b.count() == a.count());
  for (size_t i = 0; i < 50; ++i) CHECK(b.quotient(i) == a.quotient(i));

  ContinuedFraction c(kfib::golden_ratio_expr());
  CHECK_FALSE(c.load_cache(file));  // description mismatch
  std::filesystem::remove_all(dir);
}
