#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace kfib {

/// Thrown when a result cannot be certified at the current working
/// precision. Callers are expected to retry at higher precision
/// (see with_escalation); it never signals a mathematical error.
class precision_error : public std::runtime_error {
 public:
  explicit precision_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an operand is certainly outside an operation's domain
/// (log of a certainly nonpositive value, division by certified zero).
/// Escalating precision cannot fix these.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

struct PrecisionPolicy {
  mpfr_prec_t initial_bits = 512;
  mpfr_prec_t max_bits = 65536;
};

/// Retries f(prec) with doubling precision until it stops throwing
/// precision_error or the policy budget runs out.
template <class F>
auto with_escalation(const PrecisionPolicy& policy, F&& f) {
  std::string last;
  for (mpfr_prec_t prec = policy.initial_bits; prec <= policy.max_bits; prec *= 2) {
    try {
      return f(prec);
    } catch (const precision_error& e) {
      last = e.what();
    }
  }
  throw precision_error("precision budget exhausted (max " +
                        std::to_string(policy.max_bits) + " bits): " + last);
}

/// An arbitrary-precision real carried as a closed interval [lo, hi]
/// that certifiably contains the true value. All operations round the
/// endpoints outward, so containment is preserved through any op
/// sequence. Comparisons are three-valued: an interval overlap yields
/// "undecided" (std::nullopt), which callers turn into a precision
/// escalation rather than a silent answer.
///
/// midpoint() and radius() expose the equivalent center/error view.
class CertifiedReal {
 public:
  explicit CertifiedReal(mpfr_prec_t prec = 64) {
    mpfr_init2(lo_, prec);
    mpfr_init2(hi_, prec);
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }

  CertifiedReal(const CertifiedReal& o) {
    mpfr_init2(lo_, mpfr_get_prec(o.lo_));
    mpfr_init2(hi_, mpfr_get_prec(o.hi_));
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }

  CertifiedReal(CertifiedReal&& o) noexcept {
    mpfr_init2(lo_, 2);
    mpfr_init2(hi_, 2);
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
  }

  CertifiedReal& operator=(CertifiedReal o) noexcept {
    mpfr_swap(lo_, o.lo_);
    mpfr_swap(hi_, o.hi_);
    return *this;
  }

  ~CertifiedReal() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  static CertifiedReal from_long(long v, mpfr_prec_t prec) {
    CertifiedReal r(prec);
    mpfr_set_si(r.lo_, v, MPFR_RNDD);
    mpfr_set_si(r.hi_, v, MPFR_RNDU);
    return r;
  }

  static CertifiedReal from_mpz(const mpz_class& v, mpfr_prec_t prec) {
    CertifiedReal r(prec);
    mpfr_set_z(r.lo_, v.get_mpz_t(), MPFR_RNDD);
    mpfr_set_z(r.hi_, v.get_mpz_t(), MPFR_RNDU);
    return r;
  }

  static CertifiedReal from_mpq(const mpq_class& v, mpfr_prec_t prec) {
    CertifiedReal r(prec);
    mpfr_set_q(r.lo_, v.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_, v.get_mpq_t(), MPFR_RNDU);
    return r;
  }

  /// Exact power of two 2^e.
  static CertifiedReal pow2(long e, mpfr_prec_t prec) {
    CertifiedReal r(prec);
    mpfr_set_ui_2exp(r.lo_, 1, e, MPFR_RNDD);
    mpfr_set_ui_2exp(r.hi_, 1, e, MPFR_RNDU);
    return r;
  }

  static CertifiedReal from_endpoints(const mpq_class& lo, const mpq_class& hi,
                                      mpfr_prec_t prec) {
    if (lo > hi) throw std::invalid_argument("from_endpoints: lo > hi");
    CertifiedReal r(prec);
    mpfr_set_q(r.lo_, lo.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_, hi.get_mpq_t(), MPFR_RNDU);
    return r;
  }

  mpfr_prec_t precision() const { return mpfr_get_prec(lo_); }
  mpfr_srcptr lower() const { return lo_; }
  mpfr_srcptr upper() const { return hi_; }

  bool is_exact() const { return mpfr_equal_p(lo_, hi_) != 0; }

  /// True value's sign when decidable: -1, 0 (exact zero), +1.
  std::optional<int> sign() const {
    if (mpfr_sgn(lo_) > 0) return 1;
    if (mpfr_sgn(hi_) < 0) return -1;
    if (mpfr_zero_p(lo_) && mpfr_zero_p(hi_)) return 0;
    return std::nullopt;
  }

  bool contains_zero() const { return mpfr_sgn(lo_) <= 0 && mpfr_sgn(hi_) >= 0; }

  bool contains(const mpq_class& v) const {
    return mpfr_cmp_q(lo_, v.get_mpq_t()) <= 0 && mpfr_cmp_q(hi_, v.get_mpq_t()) >= 0;
  }

  /// a ⊆ b as intervals (used by refinement tests).
  bool contained_in(const CertifiedReal& outer) const {
    return mpfr_cmp(outer.lo_, lo_) <= 0 && mpfr_cmp(hi_, outer.hi_) <= 0;
  }

  /// Certified strict comparison. nullopt = undecided at this precision.
  std::optional<bool> less_than(const CertifiedReal& o) const {
    if (mpfr_cmp(hi_, o.lo_) < 0) return true;
    if (mpfr_cmp(lo_, o.hi_) >= 0) return false;
    return std::nullopt;
  }

  std::optional<bool> less_than(const mpq_class& v) const {
    if (mpfr_cmp_q(hi_, v.get_mpq_t()) < 0) return true;
    if (mpfr_cmp_q(lo_, v.get_mpq_t()) >= 0) return false;
    return std::nullopt;
  }

  std::optional<bool> greater_than(const mpq_class& v) const {
    if (mpfr_cmp_q(lo_, v.get_mpq_t()) > 0) return true;
    if (mpfr_cmp_q(hi_, v.get_mpq_t()) <= 0) return false;
    return std::nullopt;
  }

  /// Largest integer n with n <= true value, when determined.
  std::optional<mpz_class> floor_exact() const {
    mpz_class fl, fh;
    mpfr_get_z(fl.get_mpz_t(), lo_, MPFR_RNDD);
    mpfr_get_z(fh.get_mpz_t(), hi_, MPFR_RNDD);
    if (fl == fh) return fl;
    return std::nullopt;
  }

  /// Smallest integer >= upper endpoint: a sound integer cap on the value.
  mpz_class ceil_of_upper() const {
    mpz_class c;
    mpfr_get_z(c.get_mpz_t(), hi_, MPFR_RNDU);
    return c;
  }

  mpz_class floor_of_lower() const {
    mpz_class c;
    mpfr_get_z(c.get_mpz_t(), lo_, MPFR_RNDD);
    return c;
  }

  friend CertifiedReal operator+(const CertifiedReal& a, const CertifiedReal& b) {
    CertifiedReal r(join_prec(a, b));
    mpfr_add(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_add(r.hi_, a.hi_, b.hi_, MPFR_RNDU);
    return r;
  }

  friend CertifiedReal operator-(const CertifiedReal& a, const CertifiedReal& b) {
    CertifiedReal r(join_prec(a, b));
    mpfr_sub(r.lo_, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_sub(r.hi_, a.hi_, b.lo_, MPFR_RNDU);
    return r;
  }

  friend CertifiedReal operator-(const CertifiedReal& a) {
    CertifiedReal r(a.precision());
    mpfr_neg(r.lo_, a.hi_, MPFR_RNDD);
    mpfr_neg(r.hi_, a.lo_, MPFR_RNDU);
    return r;
  }

  friend CertifiedReal operator*(const CertifiedReal& a, const CertifiedReal& b) {
    CertifiedReal r(join_prec(a, b));
    mpfr_t t;
    mpfr_init2(t, r.precision());
    // lo: min of the four endpoint products rounded down
    mpfr_mul(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    // hi: max rounded up
    mpfr_mul(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_mul(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_mul(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }

  friend CertifiedReal operator/(const CertifiedReal& a, const CertifiedReal& b) {
    auto bs = b.sign();
    if (!bs) throw precision_error("divisor interval straddles zero");
    if (*bs == 0) throw domain_error("division by certified zero");
    CertifiedReal r(join_prec(a, b));
    mpfr_t t;
    mpfr_init2(t, r.precision());
    mpfr_div(r.lo_, a.lo_, b.lo_, MPFR_RNDD);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDD);
    mpfr_min(r.lo_, r.lo_, t, MPFR_RNDD);
    mpfr_div(r.hi_, a.lo_, b.lo_, MPFR_RNDU);
    mpfr_div(t, a.lo_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.lo_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_div(t, a.hi_, b.hi_, MPFR_RNDU);
    mpfr_max(r.hi_, r.hi_, t, MPFR_RNDU);
    mpfr_clear(t);
    return r;
  }

  CertifiedReal abs() const {
    CertifiedReal r(precision());
    if (mpfr_sgn(lo_) >= 0) {
      mpfr_set(r.lo_, lo_, MPFR_RNDD);
      mpfr_set(r.hi_, hi_, MPFR_RNDU);
    } else if (mpfr_sgn(hi_) <= 0) {
      mpfr_neg(r.lo_, hi_, MPFR_RNDD);
      mpfr_neg(r.hi_, lo_, MPFR_RNDU);
    } else {
      mpfr_set_zero(r.lo_, 1);
      mpfr_neg(r.hi_, lo_, MPFR_RNDU);
      mpfr_max(r.hi_, r.hi_, hi_, MPFR_RNDU);
    }
    return r;
  }

  CertifiedReal log() const {
    if (mpfr_sgn(hi_) <= 0) throw domain_error("log of certified nonpositive value");
    if (mpfr_sgn(lo_) <= 0)
      throw precision_error("log: interval straddles zero");
    CertifiedReal r(precision());
    mpfr_log(r.lo_, lo_, MPFR_RNDD);
    mpfr_log(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  CertifiedReal exp() const {
    CertifiedReal r(precision());
    mpfr_exp(r.lo_, lo_, MPFR_RNDD);
    mpfr_exp(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  CertifiedReal sqrt() const {
    if (mpfr_sgn(hi_) < 0) throw domain_error("sqrt of certified negative value");
    if (mpfr_sgn(lo_) < 0)
      throw precision_error("sqrt: interval straddles zero");
    CertifiedReal r(precision());
    mpfr_sqrt(r.lo_, lo_, MPFR_RNDD);
    mpfr_sqrt(r.hi_, hi_, MPFR_RNDU);
    return r;
  }

  /// x^n for a certified nonnegative base (monotone in the endpoints).
  CertifiedReal pow_ui(unsigned long n) const {
    if (mpfr_sgn(lo_) < 0)
      throw precision_error("pow_ui: base not certified nonnegative");
    CertifiedReal r(precision());
    mpfr_pow_ui(r.lo_, lo_, n, MPFR_RNDD);
    mpfr_pow_ui(r.hi_, hi_, n, MPFR_RNDU);
    return r;
  }

  CertifiedReal mul_2exp(long e) const {  // exact scaling
    CertifiedReal r(precision());
    mpfr_mul_2si(r.lo_, lo_, e, MPFR_RNDD);
    mpfr_mul_2si(r.hi_, hi_, e, MPFR_RNDU);
    return r;
  }

  CertifiedReal midpoint() const {
    CertifiedReal r(precision());
    mpfr_add(r.lo_, lo_, hi_, MPFR_RNDD);
    mpfr_div_2ui(r.lo_, r.lo_, 1, MPFR_RNDD);
    mpfr_add(r.hi_, lo_, hi_, MPFR_RNDU);
    mpfr_div_2ui(r.hi_, r.hi_, 1, MPFR_RNDU);
    return r;
  }

  /// Upper bound on the distance from midpoint to either endpoint.
  CertifiedReal radius() const {
    CertifiedReal w(precision());
    mpfr_sub(w.hi_, hi_, lo_, MPFR_RNDU);
    mpfr_div_2ui(w.hi_, w.hi_, 1, MPFR_RNDU);
    return w;
  }

  double radius_approx() const {
    mpfr_t w;
    mpfr_init2(w, 64);
    mpfr_sub(w, hi_, lo_, MPFR_RNDU);
    double d = mpfr_get_d(w, MPFR_RNDU) / 2;
    mpfr_clear(w);
    return d;
  }

  double approx() const {
    mpfr_t m;
    mpfr_init2(m, 64);
    mpfr_add(m, lo_, hi_, MPFR_RNDN);
    mpfr_div_2ui(m, m, 1, MPFR_RNDN);
    double d = mpfr_get_d(m, MPFR_RNDN);
    mpfr_clear(m);
    return d;
  }

  /// "midpoint ± radius" decimal rendering.
  std::string to_string(int digits = 12) const {
    char* mid = nullptr;
    char* rad = nullptr;
    mpfr_t m, w;
    mpfr_init2(m, precision());
    mpfr_init2(w, precision());
    mpfr_add(m, lo_, hi_, MPFR_RNDN);
    mpfr_div_2ui(m, m, 1, MPFR_RNDN);
    mpfr_sub(w, hi_, lo_, MPFR_RNDU);
    mpfr_div_2ui(w, w, 1, MPFR_RNDU);
    mpfr_asprintf(&mid, "%.*Rg", digits, m);
    mpfr_asprintf(&rad, "%.2Rg", w);
    std::string s = std::string(mid) + " ± " + rad;
    mpfr_free_str(mid);
    mpfr_free_str(rad);
    mpfr_clear(m);
    mpfr_clear(w);
    return s;
  }

 private:
  static mpfr_prec_t join_prec(const CertifiedReal& a, const CertifiedReal& b) {
    return std::max(a.precision(), b.precision());
  }

  mpfr_t lo_, hi_;
};

inline CertifiedReal operator+(const CertifiedReal& a, long b) {
  return a + CertifiedReal::from_long(b, a.precision());
}
inline CertifiedReal operator-(const CertifiedReal& a, long b) {
  return a - CertifiedReal::from_long(b, a.precision());
}
inline CertifiedReal operator*(const CertifiedReal& a, const mpz_class& b) {
  return a * CertifiedReal::from_mpz(b, a.precision());
}
inline CertifiedReal operator*(const mpz_class& a, const CertifiedReal& b) {
  return CertifiedReal::from_mpz(a, b.precision()) * b;
}

/// Turns an undecided three-valued comparison into an escalation request.
inline bool decided(std::optional<bool> v, const char* what) {
  if (!v) throw precision_error(std::string("undecided comparison: ") + what);
  return *v;
}

/// A recomputable real: a description plus an evaluator that produces a
/// certified enclosure at any requested precision. This is what precision
/// escalation acts on — values themselves are immutable.
class RealExpr {
 public:
  RealExpr() = default;
  RealExpr(std::string description, std::function<CertifiedReal(mpfr_prec_t)> eval)
      : desc_(std::move(description)), eval_(std::move(eval)) {}

  static RealExpr constant(const mpq_class& v, std::string desc) {
    return RealExpr(std::move(desc),
                    [v](mpfr_prec_t p) { return CertifiedReal::from_mpq(v, p); });
  }

  const std::string& description() const { return desc_; }
  CertifiedReal at(mpfr_prec_t prec) const { return eval_(prec); }
  bool valid() const { return static_cast<bool>(eval_); }

 private:
  std::string desc_;
  std::function<CertifiedReal(mpfr_prec_t)> eval_;
};

}  // namespace kfib
