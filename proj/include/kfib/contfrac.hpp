#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfib/realnum.hpp"

namespace kfib {

/// Continued fraction of an irrational RealExpr with certified partial
/// quotients: each a_i is the floor of an interval whose endpoints agree,
/// so no quotient can be wrong regardless of how far the expansion runs.
/// When the interval gets too wide to pin the next floor the whole
/// expansion is redone at doubled precision (the quotients themselves are
/// exact integers, so earlier prefixes never change — this is asserted).
///
/// Convergents p_i/q_i follow the standard recurrence in exact integers.
class ContinuedFraction {
 public:
  explicit ContinuedFraction(RealExpr source, PrecisionPolicy policy = {})
      : src_(std::move(source)), policy_(policy) {}

  const std::string& description() const { return src_.description(); }
  mpfr_prec_t precision_used() const { return prec_; }

  mpz_class quotient(size_t i) {
    std::lock_guard<std::mutex> lock(mu_);
    extend_to(i + 1);
    return a_[i];
  }

  /// (p_i, q_i) with p_0/q_0 = a_0/1.
  std::pair<mpz_class, mpz_class> convergent(size_t i) {
    std::lock_guard<std::mutex> lock(mu_);
    extend_to(i + 1);
    return {p_[i], q_[i]};
  }

  size_t count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return a_.size();
  }

  /// Least i with q_i > bound.
  size_t first_index_with_q_above(const mpz_class& bound) {
    std::lock_guard<std::mutex> lock(mu_);
    size_t i = 0;
    for (;; ++i) {
      extend_to(i + 1);
      if (q_[i] > bound) return i;
    }
  }

  /// Persists the certified quotients; convergents are rebuilt on load.
  void save_cache(const std::filesystem::path& file) const {
    std::lock_guard<std::mutex> lock(mu_);
    nlohmann::json j;
    j["description"] = src_.description();
    j["precision_bits"] = prec_;
    auto& arr = j["quotients"] = nlohmann::json::array();
    for (const auto& a : a_) arr.push_back(a.get_str());
    std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file);
    os << j.dump(1) << '\n';
  }

  /// Adopts a previously saved expansion if it describes the same source.
  bool load_cache(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) return false;
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception&) {
      return false;
    }
    if (j.value("description", "") != src_.description()) return false;
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<mpz_class> loaded;
    for (const auto& s : j.at("quotients")) loaded.emplace_back(s.get<std::string>());
    if (loaded.size() <= a_.size()) return false;
    a_ = std::move(loaded);
    prec_ = j.value("precision_bits", mpfr_prec_t(0));
    rebuild_convergents();
    return true;
  }

 private:
  void extend_to(size_t want) {
    if (a_.size() >= want) return;
    // Grow in chunks; re-running the whole expansion is cheap next to the
    // precision it certifies.
    const size_t target = std::max(want, a_.size() + 32);
    for (mpfr_prec_t prec = std::max(prec_, policy_.initial_bits);
         prec <= policy_.max_bits; prec *= 2) {
      std::vector<mpz_class> fresh;
      if (run_expansion(prec, target, fresh)) {
        for (size_t i = 0; i < a_.size(); ++i)
          if (fresh[i] != a_[i])
            throw std::logic_error("continued fraction prefix changed on refinement");
        a_ = std::move(fresh);
        prec_ = prec;
        rebuild_convergents();
        return;
      }
    }
    throw precision_error("continued fraction of " + src_.description() +
                          ": budget exhausted before quotient " + std::to_string(want));
  }

  bool run_expansion(mpfr_prec_t prec, size_t want, std::vector<mpz_class>& out) const {
    CertifiedReal x = src_.at(prec);
    out.clear();
    out.reserve(want);
    while (out.size() < want) {
      mpz_class flo, fhi;
      mpfr_get_z(flo.get_mpz_t(), x.lower(), MPFR_RNDD);
      mpfr_get_z(fhi.get_mpz_t(), x.upper(), MPFR_RNDD);
      if (flo != fhi) return false;
      out.push_back(flo);
      CertifiedReal frac = x - CertifiedReal::from_mpz(flo, prec);
      auto s = frac.sign();
      if (!s || *s <= 0) return false;  // cannot bound the reciprocal
      x = CertifiedReal::from_long(1, prec) / frac;
    }
    return true;
  }

  void rebuild_convergents() {
    p_.assign(a_.size(), 0);
    q_.assign(a_.size(), 0);
    mpz_class pm2 = 0, pm1 = 1, qm2 = 1, qm1 = 0;
    for (size_t i = 0; i < a_.size(); ++i) {
      p_[i] = a_[i] * pm1 + pm2;
      q_[i] = a_[i] * qm1 + qm2;
      pm2 = pm1;
      pm1 = p_[i];
      qm2 = qm1;
      qm1 = q_[i];
    }
  }

  RealExpr src_;
  PrecisionPolicy policy_;
  mutable std::mutex mu_;
  std::vector<mpz_class> a_, p_, q_;
  mpfr_prec_t prec_ = 0;
};

struct ConvergentHit {
  size_t index = 0;
  mpz_class p, q;
};

/// Least-index convergent with q > bound.
inline ConvergentHit first_convergent_beyond(ContinuedFraction& cf, const mpz_class& bound) {
  ConvergentHit hit;
  hit.index = cf.first_index_with_q_above(bound);
  auto pq = cf.convergent(hit.index);
  hit.p = std::move(pq.first);
  hit.q = std::move(pq.second);
  return hit;
}

struct LegendreBound {
  size_t cutoff_index = 0;  // N with q_N <= M < q_{N+1}
  mpz_class a_max;          // max quotient a_i over 0 <= i <= N+1
  mpz_class factor;         // a_max + 2
};

/// For 0 < x < M and any integer y: |x*gamma - y| > 1/((a_max + 2) x),
/// where a_max ranges over the quotients up to the convergent straddling M.
inline LegendreBound legendre_lower(ContinuedFraction& cf, const mpz_class& M) {
  if (M < 1) throw std::invalid_argument("legendre_lower: M must be >= 1");
  size_t beyond = cf.first_index_with_q_above(M);
  if (beyond == 0) throw std::invalid_argument("legendre_lower: M below first denominator");
  LegendreBound b;
  b.cutoff_index = beyond - 1;
  for (size_t i = 0; i <= b.cutoff_index + 1; ++i) b.a_max = std::max(b.a_max, cf.quotient(i));
  b.factor = b.a_max + 2;
  return b;
}

}  // namespace kfib
