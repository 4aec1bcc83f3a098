#include "kfib/realnum.hpp"

#include <random>

#include <catch2/catch_amalgamated.hpp>

using kfib::CertifiedReal;
using kfib::PrecisionPolicy;
using kfib::RealExpr;

namespace {

mpq_class random_rational(std::mt19937& rng) {
  std::uniform_int_distribution<long> num(-10000, 10000);
  std::uniform_int_distribution<long> den(1, 9999);
  return mpq_class(num(rng), den(rng));
}

}  // namespace

TEST_CASE("exact construction and containment", "[realnum]") {
  auto x = CertifiedReal::from_mpz(mpz_class("123456789123456789"), 128);
  CHECK(x.is_exact());
  CHECK(x.contains(mpq_class("123456789123456789")));

  auto q = CertifiedReal::from_mpq(mpq_class(1, 3), 128);
  CHECK_FALSE(q.is_exact());  // 1/3 is not a binary fraction
  CHECK(q.contains(mpq_class(1, 3)));

  CHECK(CertifiedReal::pow2(-10, 64).contains(mpq_class(1, 1024)));
}

TEST_CASE("field ops contain the exact rational result", "[realnum]") {
  std::mt19937 rng(20240811);
  for (int i = 0; i < 500; ++i) {
    const mpq_class a = random_rational(rng), b = random_rational(rng);
    const auto xa = CertifiedReal::from_mpq(a, 96);
    const auto xb = CertifiedReal::from_mpq(b, 96);
    CHECK((xa + xb).contains(a + b));
    CHECK((xa - xb).contains(a - b));
    CHECK((xa * xb).contains(mpq_class(a * b)));
    if (b != 0) {
      auto bs = xb.sign();
      if (bs && *bs != 0) CHECK((xa / xb).contains(mpq_class(a / b)));
    }
  }
}

TEST_CASE("log and exp are mutually consistent", "[realnum]") {
  const auto seven = CertifiedReal::from_long(7, 256);
  CHECK(seven.log().exp().contains(mpq_class(7)));

  // log 2 + log 5 and log 10 enclose the same number.
  const auto lhs = CertifiedReal::from_long(2, 256).log() + CertifiedReal::from_long(5, 256).log();
  const auto rhs = CertifiedReal::from_long(10, 256).log();
  const auto diff = (lhs - rhs).abs();
  CHECK(kfib::decided(diff.less_than(mpq_class(1, mpz_class(1) << 200)), "log identity"));
}

TEST_CASE("sqrt and integer powers", "[realnum]") {
  const auto r = CertifiedReal::from_long(2, 200).sqrt();
  CHECK(r.pow_ui(2).contains(mpq_class(2)));
  CHECK_THROWS_AS(CertifiedReal::from_long(-1, 64).sqrt(), kfib::domain_error);
  CHECK(CertifiedReal::from_long(3, 64).pow_ui(0).contains(mpq_class(1)));
}

TEST_CASE("three-valued comparisons", "[realnum]") {
  const auto a = CertifiedReal::from_endpoints(mpq_class(0), mpq_class(1), 64);
  const auto b = CertifiedReal::from_endpoints(mpq_class(2), mpq_class(3), 64);
  CHECK(a.less_than(b) == std::optional<bool>(true));
  CHECK(b.less_than(a) == std::optional<bool>(false));
  const auto c = CertifiedReal::from_endpoints(mpq_class(1, 2), mpq_class(5, 2), 64);
  CHECK_FALSE(a.less_than(c).has_value());
  CHECK_THROWS_AS(kfib::decided(a.less_than(c), "overlap"), kfib::precision_error);

  CHECK(b.greater_than(mpq_class(1)) == std::optional<bool>(true));
  CHECK(b.less_than(mpq_class(2)) == std::optional<bool>(false));
}

TEST_CASE("division by straddling interval escalates, by zero is fatal", "[realnum]") {
  const auto one = CertifiedReal::from_long(1, 64);
  const auto straddle = CertifiedReal::from_endpoints(mpq_class(-1), mpq_class(1), 64);
  CHECK_THROWS_AS(one / straddle, kfib::precision_error);
  const auto zero = CertifiedReal::from_long(0, 64);
  CHECK_THROWS_AS(one / zero, kfib::domain_error);
  CHECK_THROWS_AS(zero.log(), kfib::domain_error);
  CHECK_THROWS_AS(straddle.log(), kfib::precision_error);
}

TEST_CASE("floor and ceiling extraction", "[realnum]") {
  const auto x = CertifiedReal::from_mpq(mpq_class(10, 3), 128);
  auto fl = x.floor_exact();
  REQUIRE(fl.has_value());
  CHECK(*fl == 3);
  CHECK(x.ceil_of_upper() == 4);

  // An interval spanning an integer cannot commit to a floor.
  const auto wide = CertifiedReal::from_endpoints(mpq_class(29, 10), mpq_class(31, 10), 64);
  CHECK_FALSE(wide.floor_exact().has_value());
}

TEST_CASE("monotone refinement: higher precision stays inside", "[realnum]") {
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    const mpq_class a = random_rational(rng);
    const mpq_class b = random_rational(rng);
    auto run = [&](mpfr_prec_t p) {
      auto x = CertifiedReal::from_mpq(a, p) + CertifiedReal::from_long(12000, p);
      auto y = CertifiedReal::from_mpq(b, p) * CertifiedReal::from_mpq(mpq_class(3, 7), p);
      return (x.log() + y).exp() / CertifiedReal::from_long(5, p);
    };
    const auto coarse = run(64);
    const auto fine = run(128);
    const auto finer = run(512);
    CHECK(fine.contained_in(coarse));
    CHECK(finer.contained_in(fine));
  }
}

TEST_CASE("escalation resolves comparisons no single precision can", "[realnum]") {
  // exp(log 7) encloses 7; deciding it sits below 7 + 2^-200 needs well
  // over the starting precision.
  const mpq_class target = mpq_class(7) + mpq_class(1, mpz_class(1) << 200);
  const PrecisionPolicy policy{64, 4096};
  const bool less = kfib::with_escalation(policy, [&](mpfr_prec_t p) {
    const auto x = CertifiedReal::from_long(7, p).log().exp();
    return kfib::decided(x.less_than(target), "exp(log 7) vs 7 + 2^-200");
  });
  CHECK(less);

  // An impossible budget must surface as precision_error, never an answer.
  const PrecisionPolicy tiny{64, 64};
  CHECK_THROWS_AS(kfib::with_escalation(tiny,
                                        [&](mpfr_prec_t p) {
                                          const auto x =
                                              CertifiedReal::from_long(7, p).log().exp();
                                          return kfib::decided(x.less_than(target), "tight");
                                        }),
                  kfib::precision_error);
}

TEST_CASE("decimal rendering carries the radius", "[realnum]") {
  const auto x = CertifiedReal::from_long(2, 128).sqrt();
  const std::string s = x.to_string(10);
  CHECK(s.find("1.414213562") != std::string::npos);
  CHECK(s.find("±") != std::string::npos);
}

TEST_CASE("RealExpr re-evaluates at any precision", "[realnum]") {
  const RealExpr e("log(2)", [](mpfr_prec_t p) { return CertifiedReal::from_long(2, p).log(); });
  CHECK(e.description() == "log(2)");
  const auto coarse = e.at(64);
  const auto fine = e.at(512);
  CHECK(fine.contained_in(coarse));
  CHECK(fine.radius_approx() < coarse.radius_approx());
}
