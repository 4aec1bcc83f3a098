#include "kfib/reduction.hpp"

#include <random>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "kfib/pipeline.hpp"

using kfib::CertifiedReal;
using kfib::ContinuedFraction;
using kfib::RealExpr;
using kfib::ReducedBound;
using kfib::ReductionInstance;

namespace {

mpz_class pow10z(unsigned long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, e);
  return p;
}

}  // namespace

TEST_CASE("distance to nearest integer", "[reduction]") {
  auto at = [](const mpq_class& v) {
    return kfib::dist_to_nearest_int(CertifiedReal::from_mpq(v, 128));
  };
  CHECK(at(mpq_class(13, 4)).contains(mpq_class(1, 4)));   // 3.25
  CHECK(at(mpq_class(11, 4)).contains(mpq_class(1, 4)));   // 2.75
  CHECK(at(mpq_class(11, 2)).contains(mpq_class(1, 2)));   // 5.5
  CHECK(at(mpq_class(-7, 4)).contains(mpq_class(1, 4)));   // -1.75
  CHECK(at(mpq_class(6)).contains(mpq_class(0)));

  const auto wide = CertifiedReal::from_endpoints(mpq_class(29, 10), mpq_class(31, 10), 64);
  CHECK_THROWS_AS(kfib::dist_to_nearest_int(wide), kfib::precision_error);
}

TEST_CASE("mu equal to gamma defeats the lemma", "[reduction]") {
  ContinuedFraction cf(kfib::theta_expr());
  ReductionInstance inst;
  inst.label = "mu=gamma";
  inst.gamma = kfib::theta_expr();
  inst.mu = kfib::theta_expr();
  inst.A = 10;
  inst.B = RealExpr::constant(mpq_class(10), "10");
  inst.M = 1000;
  const auto out = kfib::dujella_petho(cf, inst, {}, 32);
  const auto* e = std::get_if<kfib::EpsilonNonpositive>(&out);
  REQUIRE(e != nullptr);
  CHECK(e->tried == 32);
  CHECK(e->q_first > 6000);
}

TEST_CASE("an evaluator stuck at fixed width is inconclusive", "[reduction]") {
  ContinuedFraction cf(kfib::theta_expr());
  ReductionInstance inst;
  inst.label = "stuck";
  inst.gamma = kfib::theta_expr();
  inst.mu = RealExpr("opaque", [](mpfr_prec_t p) {
    return CertifiedReal::from_endpoints(mpq_class(1, 3), mpq_class(2, 3), p);
  });
  inst.A = 10;
  inst.B = RealExpr::constant(mpq_class(10), "10");
  inst.M = 100;
  kfib::PrecisionPolicy small{64, 256};
  const auto out = kfib::dujella_petho(cf, inst, small);
  CHECK(std::holds_alternative<kfib::Inconclusive>(out));
}

TEST_CASE("near-degenerate cell needs a long convergent walk", "[reduction]") {
  // f_k(alpha) sits within ~k 2^-k of 1/alpha, so at d1 = 9 the shift
  // mu = log(f_k(alpha))/log10 is almost exactly -gamma: eps stays
  // negative until q grows past ~sqrt(M 2^k). A 32-convergent walk dies
  // here; the default cap has to get through it.
  const long k = 281;
  const auto caps = kfib::stage_bounds_small_k(k);
  kfib::ContinuedFraction cf(kfib::alpha_log_over_log10(k));
  const auto inst = kfib::leading_run_instance(k, 9, caps.n_bound.value);

  const auto short_walk = kfib::dujella_petho(cf, inst, {}, 32);
  CHECK(std::holds_alternative<kfib::EpsilonNonpositive>(short_walk));

  const auto out = kfib::dujella_petho(cf, inst);
  const auto* r = std::get_if<ReducedBound>(&out);
  REQUIRE(r != nullptr);
  CHECK(r->w_max < 151);
}

TEST_CASE("leading-run reduction lands under the recorded cap", "[reduction]") {
  for (long k : {4L, 5L, 12L}) {
    const auto caps = kfib::stage_bounds_small_k(k);
    ContinuedFraction cf(kfib::alpha_log_over_log10(k));
    for (int d1 = 1; d1 <= 9; ++d1) {
      const auto inst = kfib::leading_run_instance(k, d1, caps.n_bound.value);
      const auto out = kfib::dujella_petho(cf, inst);
      const auto* r = std::get_if<ReducedBound>(&out);
      REQUIRE(r != nullptr);
      CHECK(r->w_max < 151);
      CHECK(r->q_used > 6 * inst.M);
      CHECK(r->epsilon_approx > 0);
    }
  }
}

TEST_CASE("returned bound excludes sampled candidates", "[reduction][property]") {
  // Instance with a modest M so the certified check stays cheap: the
  // digit-exponent form with d1 = 3.
  ContinuedFraction cf(kfib::theta_expr());
  auto inst = kfib::digit_exponent_instance(3, pow10z(6));
  const auto out = kfib::dujella_petho(cf, inst);
  const auto* red = std::get_if<ReducedBound>(&out);
  REQUIRE(red != nullptr);

  std::mt19937 rng(99);
  std::uniform_int_distribution<long> rs(1, 1000000);
  std::uniform_int_distribution<long> ws(0, 50);
  const auto gamma = inst.gamma.at(512);
  const auto mu = inst.mu.at(512);
  const long w0 = static_cast<long>(red->w_max.get_si());
  for (int i = 0; i < 1000; ++i) {
    const long r = rs(rng);
    const long w = w0 + ws(rng);
    // For the nearest integer s, |r gamma - s + mu| = ||r gamma + mu||.
    const auto dist = kfib::dist_to_nearest_int(gamma * mpz_class(r) + mu);
    const mpq_class bound = inst.A / mpq_class(mpz_class(1) << w);
    CHECK(kfib::decided(dist.greater_than(bound), "sampled falsification"));
  }
}

TEST_CASE("reduction outcomes are deterministic", "[reduction]") {
  ContinuedFraction cf(kfib::theta_expr());
  const auto inst = kfib::digit_exponent_instance(7, pow10z(8));
  const auto a = kfib::dujella_petho(cf, inst);
  const auto b = kfib::dujella_petho(cf, inst);
  const auto* ra = std::get_if<ReducedBound>(&a);
  const auto* rb = std::get_if<ReducedBound>(&b);
  REQUIRE(ra != nullptr);
  REQUIRE(rb != nullptr);
  CHECK(ra->w_max == rb->w_max);
  CHECK(ra->q_used == rb->q_used);
  CHECK(ra->epsilon == rb->epsilon);
}

TEST_CASE("integer combinations of 1 and theta", "[reduction]") {
  using kfib::theta_integer_combination;
  // The special digit cells and their (c0, c1).
  auto block = [](int d1, int d2, long m) {
    return mpq_class(d1 * pow10z(static_cast<unsigned long>(m)) - (d1 - d2), 9);
  };
  auto expect = [&](int d1, int d2, long m, long c0, long c1) {
    const auto got = theta_integer_combination(block(d1, d2, m), 2);
    REQUIRE(got.has_value());
    CHECK(got->first == c0);
    CHECK(got->second == c1);
  };
  expect(1, 0, 1, 2, 0);
  expect(1, 9, 1, 3, 0);
  expect(2, 0, 1, 3, 0);
  expect(3, 9, 1, 4, 0);
  expect(4, 0, 1, 4, 0);
  expect(7, 9, 1, 5, 0);
  expect(8, 0, 1, 5, 0);
  expect(4, 9, 1, 1, 1);  // mu = 1 + theta
  expect(5, 0, 1, 1, 1);
  expect(9, 9, 1, 2, 1);  // mu = 2 + m theta
  expect(9, 9, 7, 2, 7);

  CHECK_FALSE(theta_integer_combination(block(1, 3, 1), 2).has_value());
  CHECK_FALSE(theta_integer_combination(mpq_class(3), 2).has_value());
  CHECK(theta_integer_combination(mpq_class(9, 9), 2).has_value());
  CHECK_THROWS_AS(theta_integer_combination(mpq_class(0), 2), std::invalid_argument);
}

TEST_CASE("the degenerate sweep cells are exactly the recorded list", "[reduction]") {
  std::set<std::array<long, 3>> got;
  for (long m = 1; m <= 290; ++m)
    for (int d1 = 1; d1 <= 9; ++d1)
      for (int d2 = 0; d2 <= 9; ++d2) {
        const mpq_class v(d1 * pow10z(static_cast<unsigned long>(m)) - (d1 - d2), 9);
        if (kfib::theta_integer_combination(v, 2)) got.insert({m, d1, d2});
      }
  std::set<std::array<long, 3>> want = {{1, 1, 0}, {1, 1, 9}, {1, 2, 0}, {1, 3, 9}, {1, 4, 0},
                                        {1, 7, 9}, {1, 8, 0}, {1, 4, 9}, {1, 5, 0}};
  for (long m = 1; m <= 290; ++m) want.insert({m, 9, 9});
  CHECK(got == want);
}

TEST_CASE("exponent and digit-count extraction", "[reduction]") {
  CHECK(kfib::largest_exponent_below(mpz_class(1024)) == 9);
  CHECK(kfib::largest_exponent_below(mpz_class(1025)) == 10);
  CHECK(kfib::largest_exponent_below(mpz_class(3)) == 1);
  CHECK(kfib::largest_exponent_below(mpz_class(2)) == 0);
  CHECK_THROWS_AS(kfib::largest_exponent_below(mpz_class(1)), std::invalid_argument);

  CHECK(kfib::digit_count(mpz_class(1)) == 1);
  CHECK(kfib::digit_count(mpz_class(9)) == 1);
  CHECK(kfib::digit_count(mpz_class(10)) == 2);
  CHECK(kfib::digit_count(mpz_class(999)) == 3);
  CHECK(kfib::digit_count(mpz_class(1000)) == 4);
  CHECK(kfib::digit_count(15 * pow10z(281)) == 283);
}

TEST_CASE("exact exponent cap chain for the d1=9 route", "[reduction]") {
  // 38 * 5395 * 1.5e282 < 3.1e287, so the exponent caps at 955.
  const mpz_class T = 38 * mpz_class(5395) * (15 * pow10z(281));
  CHECK(T < 31 * pow10z(286));
  CHECK(kfib::largest_exponent_below(T) == 955);
}
