#include "kfib/kfib.hpp"

#include <random>
#include <set>

#include <catch2/catch_amalgamated.hpp>

using kfib::KFibWindow;
using kfib::Solution;
using kfib::TwoBlockDecomposition;

namespace {

// Oracle: the recurrence evaluated the slow way, summing k terms each step.
mpz_class kfib_naive(long k, long n) {
  if (n <= 0) return 0;
  std::vector<mpz_class> f;  // f[i] = F_{i}
  f.assign(static_cast<size_t>(std::max(n + 1, k + 2)), 0);
  f[1] = 1;
  for (long i = 2; i <= n; ++i) {
    mpz_class s = 0;
    for (long j = i - k; j <= i - 1; ++j)
      if (j >= 1) s += f[static_cast<size_t>(j)];
    f[static_cast<size_t>(i)] = s;
  }
  return f[static_cast<size_t>(n)];
}

}  // namespace

TEST_CASE("reference values", "[kfib]") {
  CHECK(kfib::kfib(2, 10) == 55);
  CHECK(kfib::kfib(4, 5) == 8);
  CHECK(kfib::kfib(7, 13) == 2000);
  CHECK(kfib::kfib(9, 11) == 511);
  CHECK(kfib::kfib(3, 9) == 81);
  CHECK(kfib::kfib(8, 10) == 255);
}

TEST_CASE("window generator agrees with the naive recurrence", "[kfib]") {
  for (long k : {2L, 3L, 5L, 9L, 17L}) {
    KFibWindow w(k);
    for (long n = 2; n <= 120; ++n) {
      const mpz_class& got = w.next();
      CHECK(w.index() == n);
      if (n <= 60 || n % 17 == 0) CHECK(got == kfib_naive(k, n));
    }
    // The window holds the last k terms, newest last.
    const auto win = w.window();
    REQUIRE(win.size() == static_cast<size_t>(k));
    CHECK(win.back() == w.current());
    CHECK(win[win.size() - 2] == kfib_naive(k, 119));
  }
}

TEST_CASE("seed handling and argument errors", "[kfib]") {
  CHECK(kfib::kfib(5, -3) == 0);  // inside the zero seed range 2-k..0
  CHECK(kfib::kfib(5, 1) == 1);
  CHECK_THROWS_AS(kfib::kfib(1, 3), std::invalid_argument);
  CHECK_THROWS_AS(kfib::kfib(5, -4), std::invalid_argument);
  CHECK_THROWS_AS(KFibWindow(1), std::invalid_argument);
}

TEST_CASE("power regime and strict upper bound", "[kfib]") {
  for (long k : {2L, 4L, 7L, 12L}) {
    mpz_class pow = 1;  // 2^{n-2}
    for (long n = 2; n <= 200; ++n) {
      const mpz_class f = kfib_naive(k, n);
      if (n <= k + 1)
        CHECK(f == pow);
      else
        CHECK(f < pow);
      pow <<= 1;
    }
  }
}

TEST_CASE("two-block decomposition cases", "[kfib]") {
  auto d2000 = kfib::two_block_decompose(mpz_class(2000));
  REQUIRE(d2000.size() == 1);
  CHECK(d2000[0] == TwoBlockDecomposition{2, 0, 1, 3, mpz_class(2000)});

  auto d777 = kfib::two_block_decompose(mpz_class(777));
  REQUIRE(d777.size() == 2);
  CHECK(d777[0].m == 2);  // canonical largest-m split first
  CHECK(d777[1].m == 1);

  CHECK(kfib::two_block_decompose(mpz_class(123)).empty());

  auto d13 = kfib::two_block_decompose(mpz_class(13));
  REQUIRE(d13.size() == 1);
  CHECK(d13[0] == TwoBlockDecomposition{1, 3, 1, 1, mpz_class(13)});

  CHECK_THROWS_AS(kfib::two_block_decompose(mpz_class(9)), std::invalid_argument);
}

TEST_CASE("compose/decompose round trip, fuzzed", "[kfib][property]") {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> dig1(1, 9), dig2(0, 9);
  std::uniform_int_distribution<long> len(1, 12);
  for (int i = 0; i < 100000; ++i) {
    const int d1 = dig1(rng), d2 = dig2(rng);
    const long m = len(rng), ell = len(rng);
    const mpz_class v = TwoBlockDecomposition::compose(d1, d2, m, ell);
    const auto decs = kfib::two_block_decompose(v);
    const TwoBlockDecomposition want{d1, d2, m, ell, v};
    bool hit = false;
    for (const auto& d : decs) {
      CHECK(d.verify());
      if (d == want) hit = true;
    }
    CHECK(hit);
  }
}

TEST_CASE("small-index solver derives its caps and the three families", "[kfib]") {
  const auto rep = kfib::solve_small_n(10);
  CHECK(rep.ell_bound == 3);
  CHECK(rep.digit_bound == 13);
  REQUIRE(rep.families.size() == 3);
  CHECK(rep.families[0].value == 16);
  CHECK(rep.families[0].n == 6);
  CHECK(rep.families[0].k_min == 5);
  CHECK(rep.families[1].value == 32);
  CHECK(rep.families[1].n == 7);
  CHECK(rep.families[1].k_min == 6);
  CHECK(rep.families[2].value == 64);
  CHECK(rep.families[2].n == 8);
  CHECK(rep.families[2].k_min == 7);

  Solution probe;
  probe.k = 5;
  probe.n = 6;
  probe.decomposition = kfib::two_block_decompose(mpz_class(16)).front();
  CHECK(std::find(rep.instances.begin(), rep.instances.end(), probe) != rep.instances.end());

  for (const auto& f : rep.families) CHECK(f.value != 128);
}

TEST_CASE("small-index solver against a brute-force oracle", "[kfib]") {
  // Independent route: every (d1, d2, m, ell) with ell <= 3 and
  // m + ell <= 13, kept when the composed value is a power of two.
  std::set<std::string> oracle;
  for (int d1 = 1; d1 <= 9; ++d1)
    for (int d2 = 0; d2 <= 9; ++d2)
      for (long ell = 1; ell <= 3; ++ell)
        for (long m = 1; m + ell <= 13; ++m) {
          mpz_class v = TwoBlockDecomposition::compose(d1, d2, m, ell);
          if (mpz_popcount(v.get_mpz_t()) == 1) oracle.insert(v.get_str());
        }
  const auto rep = kfib::solve_small_n(4);
  std::set<std::string> got;
  for (const auto& f : rep.families) got.insert(f.value.get_str());
  CHECK(got == oracle);
}

TEST_CASE("enumeration basics", "[kfib]") {
  CHECK(kfib::enumerate_solutions(kfib::KRange{2, 2}, 4).empty());

  auto tri = kfib::enumerate_solutions(kfib::KRange{3, 3}, 9);
  std::vector<std::string> values;
  for (const auto& s : tri) values.push_back(s.decomposition.value.get_str());
  CHECK(values == std::vector<std::string>{"13", "24", "44", "81"});

  CHECK_THROWS_AS(kfib::enumerate_solutions(kfib::KRange{1, 3}, 10), std::invalid_argument);
  CHECK_THROWS_AS(kfib::enumerate_solutions(kfib::KRange{3, 3}, 0), std::invalid_argument);
}

TEST_CASE("enumeration is deterministic and thread-count independent", "[kfib]") {
  const auto seq = kfib::enumerate_solutions(kfib::KRange{2, 40}, 120, 1);
  const auto par = kfib::enumerate_solutions(kfib::KRange{2, 40}, 120, 4);
  REQUIRE(seq.size() == par.size());
  for (size_t i = 0; i < seq.size(); ++i) CHECK(seq[i] == par[i]);
  CHECK(std::is_sorted(seq.begin(), seq.end()));
}

TEST_CASE("every found solution satisfies the defining identity exactly", "[kfib]") {
  const auto sols = kfib::enumerate_solutions(kfib::KRange{2, 30}, 200, 2);
  CHECK(!sols.empty());
  for (const auto& s : sols) {
    CHECK(s.decomposition.verify());
    CHECK(s.decomposition.value == kfib_naive(s.k, s.n));
    // Digit count vs index: 10^{m+ell-1} < 2^{n-2} for n >= 4, exactly.
    if (s.n >= 4) {
      mpz_class p10, p2 = mpz_class(1) << (s.n - 2);
      mpz_ui_pow_ui(p10.get_mpz_t(), 10,
                    static_cast<unsigned long>(s.decomposition.m + s.decomposition.ell - 1));
      CHECK(p10 < p2);
    }
  }
}

TEST_CASE("csv and json serialization", "[kfib]") {
  auto sols = kfib::enumerate_solutions(kfib::KRange{7, 7}, 13);
  const std::string csv = kfib::solutions_to_csv(sols);
  CHECK(csv.find("k,n,value,d1,d2,m,ell") == 0);
  CHECK(csv.find("7,13,2000,2,0,1,3") != std::string::npos);

  const auto arr = kfib::solutions_to_json(sols);
  REQUIRE(arr.is_array());
  REQUIRE(!arr.empty());
  const auto& last = arr.back();
  CHECK(last.at("k") == 7);
  CHECK(last.at("n") == 13);
  CHECK(last.at("value") == "2000");
  CHECK(last.at("ell") == 3);
}
