#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>

#include <nlohmann/json.hpp>

#include "kfib/contfrac.hpp"
#include "kfib/realnum.hpp"

namespace kfib {

/// Certified enclosure of ||t|| (distance from the nearest integer) for
/// every t in the given interval. Requires the interval to sit strictly
/// between two consecutive integers; otherwise the nearest integer is
/// ambiguous and the caller must escalate.
inline CertifiedReal dist_to_nearest_int(const CertifiedReal& t) {
  const mpfr_prec_t prec = t.precision();
  mpz_class flo, fhi;
  mpfr_get_z(flo.get_mpz_t(), t.lower(), MPFR_RNDD);
  mpfr_get_z(fhi.get_mpz_t(), t.upper(), MPFR_RNDD);
  if (flo != fhi) throw precision_error("dist_to_nearest_int: interval spans an integer");
  const CertifiedReal r = t - CertifiedReal::from_mpz(flo, prec);  // within [0, 1)
  const mpq_class half(1, 2);
  if (mpfr_cmp_q(r.upper(), half.get_mpq_t()) <= 0) return r;
  const CertifiedReal one_minus = CertifiedReal::from_long(1, prec) - r;
  if (mpfr_cmp_q(r.lower(), half.get_mpq_t()) >= 0) return one_minus;
  // The interval straddles the half-integer: distance peaks at 1/2.
  mpq_class lo_a, lo_b;
  mpfr_get_q(lo_a.get_mpq_t(), r.lower());
  mpfr_get_q(lo_b.get_mpq_t(), one_minus.lower());
  return CertifiedReal::from_endpoints(std::min(lo_a, lo_b), half, prec);
}

/// One application of the continued-fraction reduction lemma: for
/// irrational gamma, reals mu, A > 0, B > 1 and a convergent p/q of gamma
/// with q > 6M and eps := ||mu q|| - M ||gamma q|| > 0, the inequality
/// 0 < |r gamma - s + mu| < A B^{-w} has no solution in positive integers
/// r <= M, s, w with w >= log(A q / eps) / log B.
struct ReductionInstance {
  std::string label;
  RealExpr gamma;
  RealExpr mu;
  mpq_class A;
  RealExpr B;
  mpz_class M;
};

struct ReducedBound {
  size_t convergent_index = 0;
  mpz_class q_used;
  mpz_class w_max;  // ceiling of the threshold: no solution has w >= w_max
  std::string epsilon;
  double epsilon_approx = 0;
  mpfr_prec_t prec_bits = 0;
};

struct EpsilonNonpositive {
  size_t first_index = 0;
  size_t tried = 0;
  mpz_class q_first;
  mpfr_prec_t prec_bits = 0;
};

struct Inconclusive {
  std::string reason;
};

using ReductionOutcome = std::variant<ReducedBound, EpsilonNonpositive, Inconclusive>;

inline bool reduction_succeeded(const ReductionOutcome& o) {
  return std::holds_alternative<ReducedBound>(o);
}

inline nlohmann::json reduction_to_json(const ReductionInstance& inst,
                                        const ReductionOutcome& out) {
  nlohmann::json j;
  j["label"] = inst.label;
  j["gamma"] = inst.gamma.description();
  j["mu"] = inst.mu.description();
  j["A"] = inst.A.get_str();
  j["B"] = inst.B.description();
  j["M"] = inst.M.get_str();
  if (const auto* r = std::get_if<ReducedBound>(&out)) {
    j["outcome"] = "reduced";
    j["convergent_index"] = r->convergent_index;
    j["q_used"] = r->q_used.get_str();
    j["epsilon"] = r->epsilon;
    j["w_max"] = r->w_max.get_str();
    j["precision_bits"] = r->prec_bits;
  } else if (const auto* e = std::get_if<EpsilonNonpositive>(&out)) {
    j["outcome"] = "epsilon_nonpositive";
    j["first_index"] = e->first_index;
    j["convergents_tried"] = e->tried;
    j["q_first"] = e->q_first.get_str();
    j["precision_bits"] = e->prec_bits;
  } else {
    j["outcome"] = "inconclusive";
    j["reason"] = std::get<Inconclusive>(out).reason;
  }
  return j;
}

namespace detail {

// ||gamma * q|| for a convergent p/q: the nearest integer is p itself
// once |gamma q - p| < 1/2, which the certification below enforces.
inline CertifiedReal gamma_q_dist(const CertifiedReal& gamma, const mpz_class& q,
                                  const mpz_class& p) {
  const mpfr_prec_t prec = gamma.precision();
  CertifiedReal d = (gamma * q - CertifiedReal::from_mpz(p, prec)).abs();
  if (mpfr_cmp_q(d.upper(), mpq_class(1, 2).get_mpq_t()) >= 0)
    throw precision_error("gamma_q_dist: enclosure too wide");
  return d;
}

}  // namespace detail

/// Walks the convergents of gamma with q > 6M, certifying the sign of
/// eps = ||mu q|| - M ||gamma q|| at each one with escalating precision:
///   - first certified eps > 0 yields the bound w_max = ceil(log(Aq/eps)/log B);
///   - a run of certified eps <= 0 across max_convergents convergents
///     returns EpsilonNonpositive (the signature of mu being an integer
///     combination of 1 and gamma);
///   - a sign still undecided at the precision cap returns Inconclusive.
///
/// The walk cap has to be generous: mu can sit within 2^-k of an integer
/// combination without being one (f_k(alpha) approaches 1/alpha at that
/// rate), and then every convergent up to q ~ sqrt(M 2^k) has eps < 0.
inline ReductionOutcome dujella_petho(ContinuedFraction& cf, const ReductionInstance& inst,
                                      const PrecisionPolicy& policy = {},
                                      int max_convergents = 512) {
  if (inst.A <= 0) throw std::invalid_argument("dujella_petho: A must be positive");
  if (inst.M < 1) throw std::invalid_argument("dujella_petho: M must be >= 1");

  const size_t i0 = cf.first_index_with_q_above(6 * inst.M);
  mpz_class q_first;
  size_t nonpositive = 0;

  for (int j = 0; j < max_convergents; ++j) {
    const size_t i = i0 + static_cast<size_t>(j);
    const auto [p, q] = cf.convergent(i);
    if (j == 0) q_first = q;

    bool certified_nonpositive = false;
    std::optional<ReducedBound> success;
    mpfr_prec_t prec = policy.initial_bits;
    for (; prec <= policy.max_bits; prec *= 2) {
      try {
        const CertifiedReal gamma = inst.gamma.at(prec);
        const CertifiedReal gq = detail::gamma_q_dist(gamma, q, p);
        const CertifiedReal mq = dist_to_nearest_int(inst.mu.at(prec) * q);
        const CertifiedReal eps = mq - gq * inst.M;
        if (mpfr_sgn(eps.lower()) > 0) {
          const CertifiedReal logB = inst.B.at(prec).log();
          if (mpfr_sgn(logB.lower()) <= 0)
            throw precision_error("dujella_petho: log B not certified positive");
          const CertifiedReal ratio =
              (CertifiedReal::from_mpq(inst.A, prec) * q) / eps;
          const CertifiedReal w = ratio.log() / logB;
          ReducedBound r;
          r.convergent_index = i;
          r.q_used = q;
          r.w_max = w.ceil_of_upper();
          r.epsilon = eps.to_string(6);
          r.epsilon_approx = eps.approx();
          r.prec_bits = prec;
          success = std::move(r);
          break;
        }
        if (mpfr_sgn(eps.upper()) <= 0) {
          certified_nonpositive = true;
          break;
        }
        // interval straddles zero: escalate
      } catch (const precision_error&) {
        // escalate
      }
    }
    if (success) return *success;
    if (!certified_nonpositive)
      return Inconclusive{"epsilon sign undecided at " + std::to_string(policy.max_bits) +
                          " bits for convergent " + std::to_string(i) + " of " +
                          inst.gamma.description()};
    ++nonpositive;
  }
  EpsilonNonpositive e;
  e.first_index = i0;
  e.tried = nonpositive;
  e.q_first = q_first;
  e.prec_bits = policy.max_bits;
  return e;
}

/// mu = c + log(v)/log(2) is an integer combination c0 + c1 * theta of 1
/// and theta = log10/log2 exactly when v = 2^e * 5^f; then c0 = c + e - f
/// and c1 = f. Such instances defeat the reduction lemma (eps < 0 always)
/// and are routed to the Legendre-type convergent bound instead.
inline std::optional<std::pair<long, long>> theta_integer_combination(const mpq_class& v,
                                                                      long c) {
  if (v <= 0) throw std::invalid_argument("theta_integer_combination: v must be positive");
  mpq_class canon = v;
  canon.canonicalize();
  mpz_class num = canon.get_num(), den = canon.get_den(), rem;
  const mpz_class two = 2, five = 5;
  const long e_num = static_cast<long>(mpz_remove(rem.get_mpz_t(), num.get_mpz_t(), two.get_mpz_t()));
  num = rem;
  const long f_num = static_cast<long>(mpz_remove(rem.get_mpz_t(), num.get_mpz_t(), five.get_mpz_t()));
  num = rem;
  const long e_den = static_cast<long>(mpz_remove(rem.get_mpz_t(), den.get_mpz_t(), two.get_mpz_t()));
  den = rem;
  const long f_den = static_cast<long>(mpz_remove(rem.get_mpz_t(), den.get_mpz_t(), five.get_mpz_t()));
  den = rem;
  if (num != 1 || den != 1) return std::nullopt;
  const long e = e_num - e_den, f = f_num - f_den;
  return std::make_pair(c + e - f, f);
}

/// Largest integer e with 2^e < t (t >= 2).
inline mpz_class largest_exponent_below(const mpz_class& t) {
  if (t < 2) throw std::invalid_argument("largest_exponent_below: t must be >= 2");
  const size_t bits = mpz_sizeinbase(t.get_mpz_t(), 2);  // 2^{bits-1} <= t < 2^{bits}
  mpz_class p = mpz_class(1) << (bits - 1);
  return (p == t) ? mpz_class(bits - 2) : mpz_class(bits - 1);
}

/// Number of decimal digits of t > 0 (exact).
inline long digit_count(const mpz_class& t) {
  if (t <= 0) throw std::invalid_argument("digit_count: t must be positive");
  size_t est = mpz_sizeinbase(t.get_mpz_t(), 10);  // exact or one too big
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, est - 1);
  return (t < p) ? static_cast<long>(est) - 1 : static_cast<long>(est);
}

}  // namespace kfib
