#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace kfib {

/// Streaming generator for the order-k Fibonacci recurrence
/// F_n = F_{n-1} + ... + F_{n-k}, seeded F_i = 0 for i = 2-k..0 and F_1 = 1.
/// Keeps the last k terms in a ring buffer with a running sum, so each
/// step costs two big-integer additions regardless of k.
///
/// While 2 <= n <= k+1 the emitted terms are exactly the powers 2^{n-2};
/// from n = k+2 on they fall strictly below 2^{n-2}. Both facts are
/// rechecked on every step (the rest of the library leans on them).
class KFibWindow {
 public:
  explicit KFibWindow(long k) : k_(k), n_(1), window_(static_cast<size_t>(k), 0) {
    if (k < 2) throw std::invalid_argument("KFibWindow: k must be >= 2");
    window_.back() = 1;  // F_1
    sum_ = 1;
    head_ = 0;
    pow2_ = 1;  // 2^{n-1}, maintained so the next emitted term compares to 2^{n-2}
  }

  long k() const { return k_; }
  long index() const { return n_; }  // current n
  const mpz_class& current() const { return window_[(head_ + window_.size() - 1) % window_.size()]; }

  /// F_{n-k+1} .. F_n, oldest first.
  std::vector<mpz_class> window() const {
    std::vector<mpz_class> out;
    out.reserve(window_.size());
    for (size_t i = 0; i < window_.size(); ++i)
      out.push_back(window_[(head_ + i) % window_.size()]);
    return out;
  }

  /// Advances to n+1 and returns F_{n+1}.
  const mpz_class& next() {
    next_ = sum_;
    ++n_;
    if (n_ <= k_ + 1) {
      if (next_ != pow2_) throw std::logic_error("kfib: 2^{n-2} regime violated");
    } else {
      if (next_ >= pow2_) throw std::logic_error("kfib: F_n < 2^{n-2} violated");
    }
    pow2_ <<= 1;
    sum_ += next_;
    sum_ -= window_[head_];
    window_[head_] = next_;
    head_ = (head_ + 1) % window_.size();
    return current();
  }

 private:
  long k_, n_;
  std::vector<mpz_class> window_;
  mpz_class sum_, next_, pow2_;
  size_t head_;
};

/// F_n^{(k)} exactly. Accepts the seed range n >= 2-k.
inline mpz_class kfib(long k, long n) {
  if (k < 2) throw std::invalid_argument("kfib: k must be >= 2");
  if (n < 2 - k) throw std::invalid_argument("kfib: n below seed range");
  if (n <= 0) return 0;
  if (n == 1) return 1;
  KFibWindow w(k);
  while (w.index() < n) w.next();
  return w.current();
}

/// A two-block digit pattern: d1 repeated m times followed by d2 repeated
/// ell times, read as a base-10 integer.
struct TwoBlockDecomposition {
  int d1 = 0;  // leading digit, 1..9
  int d2 = 0;  // trailing digit, 0..9
  long m = 0;  // length of the leading run, >= 1
  long ell = 0;  // length of the trailing run, >= 1
  mpz_class value;

  /// (d1*10^{m+ell} - (d1-d2)*10^{ell} - d2) / 9, always an exact division.
  static mpz_class compose(int d1, int d2, long m, long ell) {
    mpz_class p_ml, p_l;
    mpz_ui_pow_ui(p_ml.get_mpz_t(), 10, static_cast<unsigned long>(m + ell));
    mpz_ui_pow_ui(p_l.get_mpz_t(), 10, static_cast<unsigned long>(ell));
    mpz_class num = d1 * p_ml - (d1 - d2) * p_l - d2;
    mpz_class v;
    mpz_divexact_ui(v.get_mpz_t(), num.get_mpz_t(), 9);
    return v;
  }

  bool verify() const { return compose(d1, d2, m, ell) == value; }

  bool operator==(const TwoBlockDecomposition& o) const {
    return d1 == o.d1 && d2 == o.d2 && m == o.m && ell == o.ell;
  }
};

/// All ways to read N as two runs of repeated digits. A single-run
/// string of length L splits at every position (L-1 ways); a two-run
/// string splits only at the run boundary; three or more runs admit
/// nothing. Results are sorted by decreasing m, so front() is the
/// canonical (largest-m) split.
inline std::vector<TwoBlockDecomposition> two_block_decompose(const mpz_class& n) {
  if (n < 10) throw std::invalid_argument("two_block_decompose: need at least two digits");
  const std::string s = n.get_str();
  std::vector<std::pair<char, long>> runs;
  for (char c : s) {
    if (!runs.empty() && runs.back().first == c)
      ++runs.back().second;
    else
      runs.emplace_back(c, 1);
  }
  std::vector<TwoBlockDecomposition> out;
  auto push = [&](int d1, int d2, long m, long ell) {
    TwoBlockDecomposition d{d1, d2, m, ell, n};
    out.push_back(std::move(d));
  };
  if (runs.size() == 1) {
    const int d = runs[0].first - '0';
    const long len = runs[0].second;
    for (long m = len - 1; m >= 1; --m) push(d, d, m, len - m);
  } else if (runs.size() == 2) {
    push(runs[0].first - '0', runs[1].first - '0', runs[0].second, runs[1].second);
  }
  return out;
}

/// One certified instance of F_n^{(k)} = two-block value.
struct Solution {
  long k = 0;
  long n = 0;
  TwoBlockDecomposition decomposition;

  bool operator<(const Solution& o) const {
    if (k != o.k) return k < o.k;
    return n < o.n;
  }
  bool operator==(const Solution& o) const {
    return k == o.k && n == o.n && decomposition.value == o.decomposition.value;
  }
};

inline std::string solutions_to_csv(const std::vector<Solution>& sols) {
  std::ostringstream os;
  os << "k,n,value,d1,d2,m,ell\n";
  for (const auto& s : sols) {
    const auto& d = s.decomposition;
    os << s.k << ',' << s.n << ',' << d.value.get_str() << ',' << d.d1 << ',' << d.d2
       << ',' << d.m << ',' << d.ell << '\n';
  }
  return os.str();
}

inline nlohmann::json solutions_to_json(const std::vector<Solution>& sols) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sols) {
    const auto& d = s.decomposition;
    arr.push_back({{"k", s.k},
                   {"n", s.n},
                   {"value", d.value.get_str()},
                   {"d1", d.d1},
                   {"d2", d.d2},
                   {"m", d.m},
                   {"ell", d.ell}});
  }
  return arr;
}

/// An infinite family of solutions sharing one value: F_n^{(k)} = value
/// holds for every k >= k_min (the 2^{n-2} regime).
struct SolutionFamily {
  mpz_class value;
  long n = 0;
  long k_min = 0;

  bool operator<(const SolutionFamily& o) const { return n < o.n; }
};

/// Output of the small-index solver (2 <= n <= k+1, where F_n = 2^{n-2}).
struct SmallNReport {
  long ell_bound = 0;    // trailing-run length cap from 2-adic valuation
  long digit_bound = 0;  // total digit cap m+ell
  std::vector<SolutionFamily> families;
  std::vector<Solution> instances;  // families instantiated for k <= probe
};

namespace detail {
inline long v2_ul(unsigned long x) {
  long v = 0;
  while (x % 2 == 0) {
    x /= 2;
    ++v;
  }
  return v;
}
}  // namespace detail

/// Solves the regime 2 <= n <= k+1 exactly. There F_n = 2^{n-2}, so the
/// equation becomes d1*10^{m+ell} - (d1-d2)*10^ell - 9*2^{n-2} = d2.
///
/// Rearranged, 10^ell * (d1*10^m - (d1-d2)) = d2 + 9*2^{n-2}. The value
/// 2^{n-2} is even with at least two digits, so its trailing digit d2 is
/// even; d2 = 0 is impossible (the left side would carry a factor 5, the
/// right side 9*2^{n-2} would not). For even d2 > 0 the right side's
/// 2-adic valuation is v2(d2) <= 3, which caps ell. Then
/// d1*10^{m+ell} - 9*2^{n-2} = (d1-d2)*10^ell + d2 lies in a small
/// interval whose largest contained power of two caps m+ell. The solver
/// derives both caps and sweeps the finite remainder.
inline SmallNReport solve_small_n(long k_probe) {
  SmallNReport rep;

  for (int d2 = 2; d2 <= 8; d2 += 2)
    rep.ell_bound = std::max(rep.ell_bound, detail::v2_ul(static_cast<unsigned long>(d2)));

  mpz_class lo = 0, hi = 0;
  for (int d1 = 1; d1 <= 9; ++d1)
    for (int d2 = 0; d2 <= 9; ++d2)
      for (long ell = 1; ell <= rep.ell_bound; ++ell) {
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(ell));
        mpz_class rhs = (d1 - d2) * p + d2;
        lo = std::min(lo, rhs);
        hi = std::max(hi, rhs);
      }
  mpz_class mag = std::max(mpz_class(-lo), hi);
  rep.digit_bound = static_cast<long>(mpz_sizeinbase(mag.get_mpz_t(), 2)) - 1;

  // Exhaustive sweep: every power of two with 2..digit_bound digits.
  mpz_class digit_cap;
  mpz_ui_pow_ui(digit_cap.get_mpz_t(), 10, static_cast<unsigned long>(rep.digit_bound));
  for (long n = 6; ; ++n) {
    mpz_class v;
    mpz_ui_pow_ui(v.get_mpz_t(), 2, static_cast<unsigned long>(n - 2));
    if (v >= digit_cap) break;
    if (v < 10) continue;
    auto decs = two_block_decompose(v);
    if (decs.empty()) continue;
    rep.families.push_back(SolutionFamily{v, n, std::max(2L, n - 1)});
  }
  std::sort(rep.families.begin(), rep.families.end());

  for (const auto& fam : rep.families)
    for (long k = fam.k_min; k <= k_probe; ++k) {
      Solution s;
      s.k = k;
      s.n = fam.n;
      s.decomposition = two_block_decompose(fam.value).front();
      rep.instances.push_back(std::move(s));
    }
  std::sort(rep.instances.begin(), rep.instances.end());
  return rep;
}

struct KRange {
  long k_min = 2;
  long k_max = 2;
};

/// Direct sweep: every F_n^{(k)} with at least two digits and n <= n_max,
/// filtered through two_block_decompose. One Solution per (k, n), carrying
/// the canonical largest-m split. Parallel over k; output sorted by (k, n).
inline std::vector<Solution> enumerate_solutions(KRange range, long n_max, int jobs = 1) {
  if (n_max < 1) throw std::invalid_argument("enumerate_solutions: n_max must be >= 1");
  if (range.k_min < 2 || range.k_max < range.k_min)
    throw std::invalid_argument("enumerate_solutions: bad k range");

  auto sweep_one = [n_max](long k) {
    std::vector<Solution> found;
    KFibWindow w(k);
    while (w.index() < n_max) {
      const mpz_class& f = w.next();
      if (f < 10) continue;
      auto decs = two_block_decompose(f);
      if (decs.empty()) continue;
      found.push_back(Solution{k, w.index(), decs.front()});
    }
    return found;
  };

  const long total = range.k_max - range.k_min + 1;
  std::vector<std::vector<Solution>> per_k(static_cast<size_t>(total));
  if (jobs <= 1) {
    for (long k = range.k_min; k <= range.k_max; ++k)
      per_k[static_cast<size_t>(k - range.k_min)] = sweep_one(k);
  } else {
    std::atomic<long> next{0};
    auto worker = [&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= total) return;
        per_k[static_cast<size_t>(i)] = sweep_one(range.k_min + i);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<Solution> out;
  for (auto& v : per_k)
    for (auto& s : v) out.push_back(std::move(s));
  return out;
}

}  // namespace kfib
