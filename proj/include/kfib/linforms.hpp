#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfib/realnum.hpp"

namespace kfib {

/// Data of one lower-bound application for a linear form in logarithms:
/// |eta_1^{b_1} ... eta_t^{b_t} - 1| over a real field of degree dL, with
/// D = max |b_i| and A_i >= max{dL h(eta_i), |log eta_i|, 0.16}.
struct MatveevInstance {
  int t = 0;
  long dL = 1;
  mpz_class D;
  std::vector<CertifiedReal> A;
  std::string label;
};

/// 1.4 * 30^{t+3} * t^{4.5} * dL^2 * (1 + log dL) * A_1...A_t — everything
/// in the exponent bound except the (1 + log D) factor. Outward-rounded,
/// so the upper endpoint is a sound coefficient.
inline CertifiedReal matveev_coefficient(int t, long dL, const std::vector<CertifiedReal>& A,
                                         mpfr_prec_t prec = 256) {
  if (t < 2) throw std::invalid_argument("matveev_coefficient: t must be >= 2");
  if (dL < 1) throw std::invalid_argument("matveev_coefficient: dL must be >= 1");
  if (static_cast<int>(A.size()) != t)
    throw std::invalid_argument("matveev_coefficient: need exactly t values A_i");
  for (const auto& a : A) {
    auto s = a.sign();
    if (!s) throw precision_error("matveev_coefficient: A_i sign undecided");
    if (*s <= 0) throw domain_error("matveev_coefficient: nonpositive A_i");
  }
  mpz_class pow30;
  mpz_ui_pow_ui(pow30.get_mpz_t(), 30, static_cast<unsigned long>(t + 3));
  CertifiedReal r = CertifiedReal::from_mpq(mpq_class(7, 5), prec) *
                    CertifiedReal::from_mpz(pow30, prec);
  const CertifiedReal tc = CertifiedReal::from_long(t, prec);
  r = r * tc.pow_ui(4) * tc.sqrt();  // t^{4.5}
  const CertifiedReal dLc = CertifiedReal::from_long(dL, prec);
  r = r * dLc.pow_ui(2) * (CertifiedReal::from_long(1, prec) + dLc.log());
  for (const auto& a : A) r = r * a;
  return r;
}

/// Full exponent E = coefficient * (1 + log D), so that log|Lambda| > -E.
inline CertifiedReal matveev_exponent(const MatveevInstance& inst, mpfr_prec_t prec = 256) {
  if (inst.D < 1) throw std::invalid_argument("matveev_exponent: D must be >= 1");
  CertifiedReal c = matveev_coefficient(inst.t, inst.dL, inst.A, prec);
  return c * (CertifiedReal::from_long(1, prec) +
              CertifiedReal::from_mpz(inst.D, prec).log());
}

/// h(p/q) = log max(|p|, q) for a rational in lowest terms.
inline CertifiedReal height_rational(const mpq_class& r, mpfr_prec_t prec = 256) {
  if (r == 0) throw std::invalid_argument("height_rational: zero has no height here");
  mpq_class c = r;
  c.canonicalize();
  mpz_class num = abs(c.get_num());
  const mpz_class& den = c.get_den();
  return CertifiedReal::from_mpz(std::max(num, mpz_class(den)), prec).log();
}

/// Height majorants used by the two bound chains. d1, d2 fix the exact
/// rational block (d1*10^m - (d1-d2))/9 whose true height is also returned
/// so tests can confirm every majorant really majorizes.
struct BlockHeightBounds {
  CertifiedReal leading_ratio;        // 4 log k, >= h(9 f_k(alpha)/d1) for k >= 4
  CertifiedReal shifted_block_coeff;  // 3.8e12 k^4 log^2 k (to be scaled by log n)
  CertifiedReal rational_block;       // log 9 + (m+1) log 10
  CertifiedReal rational_block_exact; // h((d1*10^m - (d1-d2))/9) exactly
};

inline BlockHeightBounds height_bounds(long k, long m, int d1, int d2,
                                       mpfr_prec_t prec = 256) {
  if (k < 4) throw std::invalid_argument("height_bounds: k must be >= 4");
  if (m < 1 || d1 < 1 || d1 > 9 || d2 < 0 || d2 > 9)
    throw std::invalid_argument("height_bounds: bad digit block");
  BlockHeightBounds b;
  const CertifiedReal logk = CertifiedReal::from_long(k, prec).log();
  b.leading_ratio = CertifiedReal::from_long(4, prec) * logk;
  b.shifted_block_coeff = CertifiedReal::from_mpz(mpz_class("3800000000000"), prec) *
                          CertifiedReal::from_long(k, prec).pow_ui(4) * logk.pow_ui(2);
  const CertifiedReal log10c = CertifiedReal::from_long(10, prec).log();
  b.rational_block = CertifiedReal::from_long(9, prec).log() +
                     CertifiedReal::from_long(m + 1, prec) * log10c;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(m));
  mpq_class block(d1 * p10 - (d1 - d2), 9);
  b.rational_block_exact = height_rational(block, prec);
  return b;
}

/// One explicit bound along the proof chain: an integer cap on some
/// quantity, traceable to a closed-form expression and its inputs.
struct StageBound {
  std::string name;
  std::string formula;
  nlohmann::json inputs;
  mpz_class value;
};

inline nlohmann::json stage_bound_to_json(const StageBound& s) {
  return {{"name", s.name},
          {"formula", s.formula},
          {"inputs", s.inputs},
          {"value", s.value.get_str()}};
}

namespace detail {

inline void require_leq(const CertifiedReal& a, const CertifiedReal& b, const char* what) {
  if (mpfr_cmp(a.upper(), b.lower()) > 0)
    throw std::logic_error(std::string("bound chain check failed: ") + what);
}

inline CertifiedReal pow_log(long base_k, int kpow, int logpow, mpfr_prec_t prec) {
  const CertifiedReal kc = CertifiedReal::from_long(base_k, prec);
  return kc.pow_ui(static_cast<unsigned long>(kpow)) *
         kc.log().pow_ui(static_cast<unsigned long>(logpow));
}

inline CertifiedReal pow_log_z(const mpz_class& k, int kpow, int logpow, mpfr_prec_t prec) {
  const CertifiedReal kc = CertifiedReal::from_mpz(k, prec);
  return kc.pow_ui(static_cast<unsigned long>(kpow)) *
         kc.log().pow_ui(static_cast<unsigned long>(logpow));
}

}  // namespace detail

/// y/log^2 y < C implies y < 4 C log^2 C (for C >= 100). Returns the cap
/// 4 C log^2 C after certifying the implication for this C: y/log^2 y is
/// increasing past e^2, so it is enough that the cap itself satisfies
/// cap / log^2 cap >= C.
inline CertifiedReal quotient_cap(const CertifiedReal& C, mpfr_prec_t prec = 256) {
  if (decided(C.less_than(mpq_class(100)), "quotient_cap: C >= 100"))
    throw std::invalid_argument("quotient_cap: requires C >= 100");
  const CertifiedReal cap =
      CertifiedReal::from_long(4, prec) * C * C.log().pow_ui(2);
  const CertifiedReal back = cap / cap.log().pow_ui(2);
  detail::require_leq(C, back, "cap/log^2(cap) >= C");
  return cap;
}

/// Smallest verified integer cap for k < C * log^j k: iterate
/// k <- ceil(C log^j k) to the fixed point, then certify that the cap
/// satisfies C log^j cap <= cap (k/log^j k is increasing past e^j, so no
/// k >= cap can satisfy the inequality).
inline mpz_class solve_log_cap(const mpz_class& C, int logpow, mpfr_prec_t prec = 256) {
  if (C < 3) throw std::invalid_argument("solve_log_cap: C must be >= 3");
  mpz_class k = 16;
  for (int it = 0; it < 200; ++it) {
    const CertifiedReal rhs =
        CertifiedReal::from_mpz(C, prec) *
        CertifiedReal::from_mpz(k, prec).log().pow_ui(static_cast<unsigned long>(logpow));
    mpz_class next = rhs.ceil_of_upper();
    // next <= k certifies C log^j k <= k; past e^j the quotient k/log^j k
    // only grows, so no k' >= k can satisfy k' < C log^j k'.
    if (next <= k) return k;
    k = next;
  }
  throw std::logic_error("solve_log_cap: no fixed point after 200 iterations");
}

/// Reference caps reproduced by the chains below. Each is re-derived in
/// certified arithmetic before use; a derivation landing above its
/// reference value is a hard error.
namespace reference {
inline const mpz_class m_log_coeff{"3700000000000"};          // m log10 < . * k^4 log^2 k log n
inline const mpz_class tail_matveev_coeff{"3500000000000000000000000"};
inline const mpz_class quotient_coeff{"6000000000000000000000000"};
inline const mpz_class n_poly_coeff{"90000000000000000000000000000"};   // 9e28
inline const mpz_class ml_poly_coeff{"30000000000000000000000000000"};  // 3e28
inline const mpz_class rational_matveev_coeff{"1100000000000"};         // 1.1e12
inline const mpz_class lambda_coeff{"1600000000000"};                   // 1.6e12
inline const long half_case_log_cap = 21;                               // log(9e28 k^8 log^5 k) <= 21 log k
inline const mpz_class half_case_coeff{"70000000000000"};               // 7e13
inline const mpz_class half_case_k_cap{"3000000000000000"};             // 3e15
inline const mpz_class digit_case_m_coeff{"490000000000"};              // 4.9e11
inline const mpz_class tail_height_coeff{"1200000000000"};              // 1.2e12
inline const mpz_class tail_exponent_coeff{"550000000000000000000000"}; // 5.5e23
inline const mpz_class digit_case_k_coeff{"710000000000000000000000000"};  // 7.1e26
inline const mpz_class abs_k_cap{"3600000000000000000000000000000"};    // 3.6e30
inline const mpz_class abs_ml_cap = mpz_class(15) * [] { mpz_class p; mpz_ui_pow_ui(p.get_mpz_t(), 10, 281); return p; }();
inline const mpz_class abs_n_cap = mpz_class(45) * [] { mpz_class p; mpz_ui_pow_ui(p.get_mpz_t(), 10, 281); return p; }();
inline const mpz_class half_case_ml_cap = mpz_class(2) * [] { mpz_class p; mpz_ui_pow_ui(p.get_mpz_t(), 10, 160); return p; }();
inline const mpz_class half_case_n_cap = mpz_class(4) * [] { mpz_class p; mpz_ui_pow_ui(p.get_mpz_t(), 10, 160); return p; }();
inline const mpz_class shrunk_ml_cap = mpz_class(16) * [] { mpz_class p; mpz_ui_pow_ui(p.get_mpz_t(), 10, 58); return p; }();
}  // namespace reference

/// Certified coefficients of the small-k chain, each checked against the
/// reference constant it must stay below.
struct SmallKChainConstants {
  CertifiedReal m_log_coeff;      // <= 3.7e12
  CertifiedReal tail_matveev;     // <= 3.5e24
  CertifiedReal quotient_coeff;   // <= 6e24
};

inline SmallKChainConstants small_k_chain_constants(mpfr_prec_t prec = 256) {
  const CertifiedReal one = CertifiedReal::from_long(1, prec);
  const CertifiedReal log2c = CertifiedReal::from_long(2, prec).log();
  const CertifiedReal log10c = CertifiedReal::from_long(10, prec).log();
  // base = 1.4 * 30^6 * 3^4.5
  const CertifiedReal three = CertifiedReal::from_long(3, prec);
  const CertifiedReal base = CertifiedReal::from_mpq(mpq_class(7, 5), prec) *
                             CertifiedReal::from_mpz(mpz_class(729000000), prec) *
                             three.pow_ui(4) * three.sqrt();

  SmallKChainConstants c{CertifiedReal(prec), CertifiedReal(prec), CertifiedReal(prec)};
  // m log10 < log 11 + c_k (1 + log n), c_k <= base*8*log2*log10*k^4 log^2 k,
  // and 1+log s <= 2 log s twice; the log 11 is absorbed at k>=4, n>=3.
  c.m_log_coeff = base * CertifiedReal::from_long(8, prec) * log2c * log10c *
                      CertifiedReal::from_long(2, prec) +
                  CertifiedReal::from_long(11, prec).log() /
                      (detail::pow_log(4, 4, 2, prec) * three.log());
  detail::require_leq(c.m_log_coeff,
                      CertifiedReal::from_mpz(reference::m_log_coeff, prec),
                      "m-chain coefficient <= 3.7e12");

  // Exponent of the second application: base * k^2 (1+log k)(1+log n) *
  // (3.8e12 k^5 log^2 k log n)(log 2)(k log 10) <= 5e0... * k^8 log^3 k log^2 n.
  c.tail_matveev = base * CertifiedReal::from_long(4, prec) *
                   CertifiedReal::from_mpz(mpz_class("3800000000000"), prec) * log2c * log10c;
  detail::require_leq(c.tail_matveev,
                      CertifiedReal::from_mpz(reference::tail_matveev_coeff, prec),
                      "tail-chain exponent coefficient <= 3.5e24");
  // The 3.8e12 majorant also has to absorb 4 log k + log 10 on top of the
  // m-chain bound; check the slack at the smallest arguments k=4, n=6.
  detail::require_leq(
      CertifiedReal::from_mpz(reference::m_log_coeff, prec) +
          (CertifiedReal::from_long(4, prec) * CertifiedReal::from_long(4, prec).log() +
           log10c) /
              (detail::pow_log(4, 4, 2, prec) * CertifiedReal::from_long(6, prec).log()),
      CertifiedReal::from_mpz(mpz_class("3800000000000"), prec),
      "shifted block height coefficient <= 3.8e12");

  // n log alpha - log 6 < 3.5e24 ... with log alpha >= log(15/8) for k >= 4.
  const CertifiedReal log_alpha_min = CertifiedReal::from_mpq(mpq_class(15, 8), prec).log();
  c.quotient_coeff = CertifiedReal::from_mpz(reference::tail_matveev_coeff, prec) / log_alpha_min +
                     CertifiedReal::from_long(6, prec).log() /
                         (detail::pow_log(4, 8, 3, prec) *
                          CertifiedReal::from_long(6, prec).log().pow_ui(2) * log_alpha_min);
  detail::require_leq(c.quotient_coeff,
                      CertifiedReal::from_mpz(reference::quotient_coeff, prec),
                      "index quotient coefficient <= 6e24");
  return c;
}

/// Runs the chain verification once per process.
inline const SmallKChainConstants& small_k_chain_constants_cached() {
  static const SmallKChainConstants c = small_k_chain_constants();
  return c;
}

struct SmallKBounds {
  StageBound m_bound;   // cap on the leading-run length m
  StageBound n_bound;   // cap on the index n
  StageBound ml_bound;  // cap on the digit count m + ell
};

/// Per-k caps: n < 9e28 k^8 log^5 k (validated against the underlying
/// 4C log^2 C derivation), m+ell < 3e28 k^8 log^5 k, and the m cap that
/// follows by substituting the n cap into the first chain inequality.
inline SmallKBounds stage_bounds_small_k(long k, mpfr_prec_t prec = 256) {
  if (k < 4) throw std::invalid_argument("stage_bounds_small_k: k must be >= 4");
  small_k_chain_constants_cached();

  SmallKBounds out;
  const CertifiedReal poly85 = detail::pow_log(k, 8, 5, prec);
  const CertifiedReal n_closed =
      CertifiedReal::from_mpz(reference::n_poly_coeff, prec) * poly85;
  // The derivation: n/log^2 n < C with C = 6e24 k^8 log^3 k, so
  // n < 4 C log^2 C, which must sit below the closed form reported.
  const CertifiedReal C =
      CertifiedReal::from_mpz(reference::quotient_coeff, prec) * detail::pow_log(k, 8, 3, prec);
  detail::require_leq(quotient_cap(C, prec), n_closed, "4C log^2 C <= 9e28 k^8 log^5 k");

  out.n_bound.name = "n_cap";
  out.n_bound.formula = "ceil(9e28 * k^8 * log(k)^5)";
  out.n_bound.inputs = {{"k", k}};
  out.n_bound.value = n_closed.ceil_of_upper();

  out.ml_bound.name = "digit_cap";
  out.ml_bound.formula = "ceil(3e28 * k^8 * log(k)^5)";
  out.ml_bound.inputs = {{"k", k}};
  out.ml_bound.value =
      (CertifiedReal::from_mpz(reference::ml_poly_coeff, prec) * poly85).ceil_of_upper();

  out.m_bound.name = "m_cap";
  out.m_bound.formula = "ceil(3.7e12 * k^4 * log(k)^2 * log(n_cap) / log(10))";
  out.m_bound.inputs = {{"k", k}, {"n_cap", out.n_bound.value.get_str()}};
  out.m_bound.value = (CertifiedReal::from_mpz(reference::m_log_coeff, prec) *
                       detail::pow_log(k, 4, 2, prec) *
                       CertifiedReal::from_mpz(out.n_bound.value, prec).log() /
                       CertifiedReal::from_long(10, prec).log())
                          .ceil_of_upper();
  return out;
}

/// The ordered absolute chain for k > 500: every coefficient is re-derived
/// in certified arithmetic and checked against the reference constant, the
/// two transcendental caps are solved and verified, and the final caps on
/// k, m+ell and n come out. Stage values are the reference caps (the
/// derivations are strictly tighter, which each require_leq certifies).
inline std::vector<StageBound> stage_bounds_large_k(mpfr_prec_t prec = 320) {
  std::vector<StageBound> stages;
  const CertifiedReal log2c = CertifiedReal::from_long(2, prec).log();
  const CertifiedReal log10c = CertifiedReal::from_long(10, prec).log();
  const CertifiedReal three = CertifiedReal::from_long(3, prec);
  const CertifiedReal log_n_min = CertifiedReal::from_long(502, prec).log();

  auto push = [&stages](std::string name, std::string formula, nlohmann::json inputs,
                        mpz_class value) {
    stages.push_back(StageBound{std::move(name), std::move(formula), std::move(inputs),
                                std::move(value)});
  };

  // Rational t=3 instance: coefficient of log n in the exponent.
  std::vector<CertifiedReal> A{CertifiedReal::from_long(9, prec).log(), log10c, log2c};
  const CertifiedReal rat_coeff = matveev_coefficient(3, 1, A, prec) *
                                  CertifiedReal::from_long(2, prec);  // 1+log n <= 2 log n
  detail::require_leq(rat_coeff, CertifiedReal::from_mpz(reference::rational_matveev_coeff, prec),
                      "rational exponent coefficient <= 1.1e12");
  push("power_balance_exponent_coeff", "2 * matveev(t=3, dL=1, A=(log9, log10, log2))",
       {{"computed", rat_coeff.to_string(8)}}, reference::rational_matveev_coeff);

  // lambda < 1.6e12 log n, folding in log 13 / log 2 at n >= 502.
  const CertifiedReal lam =
      (CertifiedReal::from_mpz(reference::rational_matveev_coeff, prec) +
       CertifiedReal::from_long(13, prec).log() / log_n_min) /
      log2c;
  detail::require_leq(lam, CertifiedReal::from_mpz(reference::lambda_coeff, prec),
                      "lambda coefficient <= 1.6e12");
  push("exponent_gap_coeff", "(1.1e12 + log13/log n)/log2, n >= 502",
       {{"computed", lam.to_string(8)}}, reference::lambda_coeff);

  // log(9e28 k^8 log^5 k) <= 21 log k for k >= 333: certified at the edge;
  // the difference 21 log k - (...) is increasing in k.
  {
    auto chk = [&](long kk) {
      const CertifiedReal lhs =
          (CertifiedReal::from_mpz(reference::n_poly_coeff, prec) * detail::pow_log(kk, 8, 5, prec))
              .log();
      const CertifiedReal rhs = CertifiedReal::from_long(reference::half_case_log_cap, prec) *
                                CertifiedReal::from_long(kk, prec).log();
      detail::require_leq(lhs, rhs, "log(9e28 k^8 log^5 k) <= 21 log k");
    };
    chk(333);
    chk(501);
    push("index_cap_log_majorant", "log(9e28 k^8 log^5 k) <= 21 log k, k >= 333",
         {{"checked_at", {333, 501}}}, mpz_class(reference::half_case_log_cap));
  }

  // Case lambda = k/2: k < 3.2e12 * 21 log k <= 7e13 log k, solved.
  {
    const CertifiedReal lhs = CertifiedReal::from_long(2, prec) *
                              CertifiedReal::from_mpz(reference::lambda_coeff, prec) *
                              CertifiedReal::from_long(reference::half_case_log_cap, prec);
    detail::require_leq(lhs, CertifiedReal::from_mpz(reference::half_case_coeff, prec),
                        "2 * 1.6e12 * 21 <= 7e13");
    const mpz_class solved = solve_log_cap(reference::half_case_coeff, 1, prec);
    if (solved > reference::half_case_k_cap)
      throw std::logic_error("half-case k cap exceeds 3e15");
    push("k_cap_power_balance", "solve k < 7e13 log k",
         {{"solved", solved.get_str()}}, reference::half_case_k_cap);
    const CertifiedReal ml =
        CertifiedReal::from_mpz(reference::ml_poly_coeff, prec) *
        detail::pow_log_z(reference::half_case_k_cap, 8, 5, prec);
    detail::require_leq(ml, CertifiedReal::from_mpz(reference::half_case_ml_cap, prec),
                        "half-case digit cap <= 2e160");
    push("digit_cap_power_balance", "3e28 k^8 log^5 k at k = 3e15",
         {{"computed", ml.to_string(8)}}, reference::half_case_ml_cap);
    const CertifiedReal nn =
        CertifiedReal::from_mpz(reference::n_poly_coeff, prec) *
        detail::pow_log_z(reference::half_case_k_cap, 8, 5, prec);
    detail::require_leq(nn, CertifiedReal::from_mpz(reference::half_case_n_cap, prec),
                        "half-case index cap <= 4e160");
    push("index_cap_power_balance", "9e28 k^8 log^5 k at k = 3e15",
         {{"computed", nn.to_string(8)}}, reference::half_case_n_cap);
  }

  // Case lambda = theta m: m < 1.6e12/theta log n <= 4.9e11 log n.
  {
    const CertifiedReal theta = log10c / log2c;
    const CertifiedReal m_coeff = CertifiedReal::from_mpz(reference::lambda_coeff, prec) / theta;
    detail::require_leq(m_coeff, CertifiedReal::from_mpz(reference::digit_case_m_coeff, prec),
                        "m coefficient <= 4.9e11");
    push("leading_run_coeff", "1.6e12 / (log10/log2)", {{"computed", m_coeff.to_string(8)}},
         reference::digit_case_m_coeff);

    // h(eta_1) <= log9 + (m+1) log10 <= 1.2e12 log n.
    const CertifiedReal h_coeff =
        CertifiedReal::from_mpz(reference::digit_case_m_coeff, prec) * log10c +
        (CertifiedReal::from_long(90, prec).log()) / log_n_min;
    detail::require_leq(h_coeff, CertifiedReal::from_mpz(reference::tail_height_coeff, prec),
                        "tail height coefficient <= 1.2e12");
    push("tail_height_coeff", "4.9e11 log10 + log90/log n, n >= 502",
         {{"computed", h_coeff.to_string(8)}}, reference::tail_height_coeff);

    // Fourth application: exponent coefficient of log^2 n.
    std::vector<CertifiedReal> A4{CertifiedReal::from_mpz(reference::tail_height_coeff, prec),
                                  log10c, log2c};
    const CertifiedReal tail_coeff = matveev_coefficient(3, 1, A4, prec) *
                                     CertifiedReal::from_long(2, prec);
    detail::require_leq(tail_coeff, CertifiedReal::from_mpz(reference::tail_exponent_coeff, prec),
                        "tail exponent coefficient <= 5.5e23");
    push("tail_exponent_coeff", "2 * matveev(t=3, dL=1, A=(1.2e12, log10, log2))",
         {{"computed", tail_coeff.to_string(8)}}, reference::tail_exponent_coeff);

    // k/2 log2 < log3 + 5.5e23 log^2 n and log n <= 21 log k give
    // k < 7.1e26 log^2 k, solved.
    const CertifiedReal k_coeff =
        (CertifiedReal::from_long(2, prec) / log2c) *
            CertifiedReal::from_mpz(reference::tail_exponent_coeff, prec) *
            CertifiedReal::from_long(reference::half_case_log_cap, prec).pow_ui(2) +
        (CertifiedReal::from_long(2, prec) * three.log() / log2c) /
            CertifiedReal::from_long(501, prec).log().pow_ui(2);
    detail::require_leq(k_coeff, CertifiedReal::from_mpz(reference::digit_case_k_coeff, prec),
                        "k coefficient <= 7.1e26");
    push("k_cap_digit_balance_coeff", "(2/log2) * 5.5e23 * 21^2 + slack",
         {{"computed", k_coeff.to_string(8)}}, reference::digit_case_k_coeff);

    const mpz_class solved = solve_log_cap(reference::digit_case_k_coeff, 2, prec);
    if (solved > reference::abs_k_cap)
      throw std::logic_error("absolute k cap exceeds 3.6e30");
    push("k_cap_abs", "solve k < 7.1e26 log^2 k", {{"solved", solved.get_str()}},
         reference::abs_k_cap);
  }

  // Absolute caps on m+ell and n at k = 3.6e30.
  {
    const CertifiedReal ml = CertifiedReal::from_mpz(reference::ml_poly_coeff, prec) *
                             detail::pow_log_z(reference::abs_k_cap, 8, 5, prec);
    detail::require_leq(ml, CertifiedReal::from_mpz(reference::abs_ml_cap, prec),
                        "absolute digit cap <= 1.5e282");
    push("digit_cap_abs", "3e28 k^8 log^5 k at k = 3.6e30", {{"computed", ml.to_string(8)}},
         reference::abs_ml_cap);
    const CertifiedReal nn = CertifiedReal::from_mpz(reference::n_poly_coeff, prec) *
                             detail::pow_log_z(reference::abs_k_cap, 8, 5, prec);
    detail::require_leq(nn, CertifiedReal::from_mpz(reference::abs_n_cap, prec),
                        "absolute index cap <= 4.5e282");
    push("index_cap_abs", "9e28 k^8 log^5 k at k = 3.6e30", {{"computed", nn.to_string(8)}},
         reference::abs_n_cap);
  }

  return stages;
}

/// n < 9e28 k^8 log^5 k < 2^{k/2}: the entry condition for the large-k
/// expansion, certified at one point (the gap only widens with k).
inline bool index_below_power_check(const mpz_class& k, mpfr_prec_t prec = 320) {
  const CertifiedReal lhs =
      (CertifiedReal::from_mpz(reference::n_poly_coeff, prec) * detail::pow_log_z(k, 8, 5, prec))
          .log();
  const CertifiedReal rhs = CertifiedReal::from_mpz(k, prec) * CertifiedReal::from_long(2, prec).log() /
                            CertifiedReal::from_long(2, prec);
  return decided(lhs.less_than(rhs), "index_below_power_check");
}

}  // namespace kfib
