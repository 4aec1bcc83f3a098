#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "kfib/kfib.hpp"
#include "kfib/realnum.hpp"

namespace kfib {

/// Characteristic polynomial x^k - x^{k-1} - ... - x - 1 of the order-k
/// recurrence, in certified arithmetic. Away from x = 1 it is evaluated
/// through the equivalent (x^{k+1} - 2x^k + 1)/(x - 1), which needs only
/// O(log k) multiplications; near 1 that form loses all precision to the
/// tiny denominator, so Horner on the plain coefficients takes over.
inline CertifiedReal psi_k(long k, const CertifiedReal& x) {
  if (k < 2) throw std::invalid_argument("psi_k: k must be >= 2");
  const mpfr_prec_t prec = x.precision();
  const CertifiedReal one = CertifiedReal::from_long(1, prec);
  const CertifiedReal xm1 = x - one;
  const auto away =
      xm1.abs().greater_than(mpq_class(1, 4));
  if (away && *away) {
    CertifiedReal xk = x.pow_ui(static_cast<unsigned long>(k));
    CertifiedReal num = (x - CertifiedReal::from_long(2, prec)) * xk + one;
    return num / xm1;
  }
  // Horner: ((...((1*x - 1)x - 1)...)x - 1), k coefficients of -1.
  CertifiedReal acc = CertifiedReal::from_long(1, prec);
  for (long i = 0; i < k; ++i) acc = acc * x - one;
  return acc;
}

/// The unique root of psi_k outside the unit circle together with the
/// coefficient f_k(alpha) = (alpha-1)/(2 + (k+1)(alpha-2)) from the
/// dominant-term representation of F_n^{(k)}.
struct DominantRoot {
  long k = 0;
  CertifiedReal alpha;
  CertifiedReal fk_alpha;
};

namespace detail {

// Sign of the numerator form g(x) = x^{k+1} - 2x^k + 1 at a point interval.
inline std::optional<int> g_sign(long k, const CertifiedReal& x) {
  const mpfr_prec_t prec = x.precision();
  CertifiedReal xk = x.pow_ui(static_cast<unsigned long>(k));
  CertifiedReal g = (x - CertifiedReal::from_long(2, prec)) * xk +
                    CertifiedReal::from_long(1, prec);
  return g.sign();
}

}  // namespace detail

/// Certified enclosure of alpha(k): bisection for a coarse seed, Newton
/// on g(x) = x^{k+1} - 2x^k + 1 to polish (g is increasing and convex on
/// [alpha, 2], so iterates descend monotonically from 2), then an interval
/// sign-change check across [c - delta, c + delta] that certifies the
/// final radius <= 2^{-target_bits}. The enclosure is also checked against
/// the bracket (2(1 - 2^{-k}), 2).
inline DominantRoot dominant_root(long k, mpfr_prec_t target_bits,
                                  const PrecisionPolicy& policy = {}) {
  if (k < 2) throw std::invalid_argument("dominant_root: k must be >= 2");
  if (target_bits < 8) target_bits = 8;
  // The gap between alpha and the bracket edge 2(1 - 2^-k) is ~2^-k, so
  // the enclosure must be at least that sharp to sit inside it.
  target_bits = std::max(target_bits, static_cast<mpfr_prec_t>(k + 16));

  const mpq_class bracket_lo = 2 - mpq_class(1) / (mpz_class(1) << (k - 1));

  mpfr_prec_t work = std::max<mpfr_prec_t>(2 * target_bits + 64, 128);
  for (; work <= policy.max_bits * 4; work *= 2) {
    // Newton from the right endpoint.
    mpfr_t x, g, gp, t, step;
    mpfr_inits2(work, x, g, gp, t, step, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_ui(x, 2, MPFR_RNDN);
    for (int it = 0; it < 400; ++it) {
      // g = x^{k+1} - 2x^k + 1 = (x - 2) x^k + 1; g' = ((k+1)x - 2k) x^{k-1}
      mpfr_pow_ui(t, x, static_cast<unsigned long>(k - 1), MPFR_RNDN);
      mpfr_mul_si(gp, x, k + 1, MPFR_RNDN);
      mpfr_sub_si(gp, gp, 2 * k, MPFR_RNDN);
      mpfr_mul(gp, gp, t, MPFR_RNDN);
      mpfr_mul(t, t, x, MPFR_RNDN);  // x^k
      mpfr_sub_ui(g, x, 2, MPFR_RNDN);
      mpfr_mul(g, g, t, MPFR_RNDN);
      mpfr_add_ui(g, g, 1, MPFR_RNDN);
      mpfr_div(step, g, gp, MPFR_RNDN);
      mpfr_sub(x, x, step, MPFR_RNDN);
      mpfr_abs(step, step, MPFR_RNDU);
      mpfr_mul_2si(t, x, -static_cast<long>(work - 8), MPFR_RNDU);
      if (mpfr_cmpabs(step, t) <= 0) break;
    }

    // Certify [x - delta, x + delta] by a sign change of g.
    for (mpfr_prec_t dexp = target_bits + 4; dexp >= target_bits; --dexp) {
      CertifiedReal left(work), right(work);
      {
        mpfr_t d;
        mpfr_init2(d, work);
        mpfr_set_ui_2exp(d, 1, -static_cast<mpfr_exp_t>(dexp), MPFR_RNDN);
        mpfr_sub(t, x, d, MPFR_RNDD);
        mpq_class lo_q, hi_q;
        mpfr_get_q(lo_q.get_mpq_t(), t);
        mpfr_add(t, x, d, MPFR_RNDU);
        mpfr_get_q(hi_q.get_mpq_t(), t);
        mpfr_clear(d);
        left = CertifiedReal::from_mpq(lo_q, work);
        right = CertifiedReal::from_mpq(hi_q, work);
      }
      auto sl = detail::g_sign(k, left);
      auto sr = detail::g_sign(k, right);
      if (sl && sr && *sl < 0 && *sr > 0) {
        mpq_class lo_q, hi_q;
        mpfr_t d;
        mpfr_init2(d, work);
        mpfr_set_ui_2exp(d, 1, -static_cast<mpfr_exp_t>(dexp), MPFR_RNDN);
        mpfr_sub(t, x, d, MPFR_RNDD);
        mpfr_get_q(lo_q.get_mpq_t(), t);
        mpfr_add(t, x, d, MPFR_RNDU);
        mpfr_get_q(hi_q.get_mpq_t(), t);
        mpfr_clear(d);
        mpfr_clears(x, g, gp, t, step, static_cast<mpfr_ptr>(nullptr));

        if (lo_q <= bracket_lo || hi_q >= 2)
          throw precision_error("dominant_root: enclosure left the bracket");
        DominantRoot root;
        root.k = k;
        root.alpha = CertifiedReal::from_endpoints(lo_q, hi_q, work);
        const CertifiedReal one = CertifiedReal::from_long(1, work);
        const CertifiedReal two = CertifiedReal::from_long(2, work);
        root.fk_alpha =
            (root.alpha - one) / (two + (root.alpha - two) * mpz_class(k + 1));
        return root;
      }
    }
    mpfr_clears(x, g, gp, t, step, static_cast<mpfr_ptr>(nullptr));
  }
  throw precision_error("dominant_root: failed to certify root of psi_" +
                        std::to_string(k));
}

/// Process-wide memo; root finding is pure so sharing is safe.
inline DominantRoot dominant_root_cached(long k, mpfr_prec_t target_bits,
                                         const PrecisionPolicy& policy = {}) {
  static std::mutex mu;
  static std::map<std::pair<long, mpfr_prec_t>, DominantRoot> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.lower_bound({k, target_bits});
    if (it != cache.end() && it->first.first == k) return it->second;
  }
  DominantRoot r = dominant_root(k, target_bits, policy);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(std::make_pair(k, target_bits), r);
  return r;
}

/// e_k(n) = F_n^{(k)} - f_k(alpha) * alpha^{n-1}, the part of F dropped by
/// the dominant-term approximation; its absolute value stays below 1/2.
inline CertifiedReal dd_error(long k, long n, const PrecisionPolicy& policy = {}) {
  if (n < 1) throw std::invalid_argument("dd_error: n must be >= 1");
  const mpz_class f = kfib(k, n);
  // alpha^{n-1} ~ 2^{n-1}: the enclosure needs ~n guard bits to stay sharp.
  const mpfr_prec_t target =
      std::max<mpfr_prec_t>(policy.initial_bits, static_cast<mpfr_prec_t>(n) + 96);
  DominantRoot root = dominant_root_cached(k, target, policy);
  CertifiedReal power = root.alpha.pow_ui(static_cast<unsigned long>(n - 1));
  return CertifiedReal::from_mpz(f, target) - root.fk_alpha * power;
}

/// zeta(n, k) = F_n^{(k)} / 2^{n-2} - 1, exact.
inline mpq_class zeta_exact(long k, long n) {
  mpq_class f(kfib(k, n));
  mpq_class p2;
  if (n >= 2)
    p2 = mpz_class(1) << (n - 2);
  else
    p2 = mpq_class(1, 2);  // n = 1: 2^{-1}
  return f / p2 - 1;
}

/// Certified form of zeta(n, k). Valid for 2 <= n < 2^{k/2}, where
/// |zeta| < 2/2^{k/2}; at n = 1 the expansion does not hold (F_1 = 1 is
/// twice 2^{-1}), so that index is rejected.
inline CertifiedReal zeta_expansion(long k, long n, mpfr_prec_t prec = 128) {
  if (n < 2) throw std::invalid_argument("zeta_expansion: n must be >= 2");
  mpz_class n2 = mpz_class(n) * n, p2k = mpz_class(1) << k;
  if (n2 >= p2k) throw std::invalid_argument("zeta_expansion: requires n < 2^{k/2}");
  return CertifiedReal::from_mpq(zeta_exact(k, n), prec);
}

}  // namespace kfib
