#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfib/contfrac.hpp"
#include "kfib/dominant_root.hpp"
#include "kfib/kfib.hpp"
#include "kfib/linforms.hpp"
#include "kfib/realnum.hpp"
#include "kfib/reduction.hpp"

namespace kfib {

/// A computed bound came out above its recorded reference cap, or the
/// solution sweep disagreed with the expected table. Distinct from
/// operational failures: this is the "mathematics went wrong" signal.
class verification_error : public std::runtime_error {
 public:
  explicit verification_error(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  long k_min = 4;
  long k_max = 50;
  long n_max = 500;
  long enum_k_min = 2;
  mpfr_prec_t precision_bits = 512;
  mpfr_prec_t max_precision_bits = 65536;
  int jobs = 1;
  std::filesystem::path out_dir = "kfib-out";
  bool resume = false;
  long round2_m_cap = 150;  // leading-run sweep range in the second round
  int max_convergents = 512;

  PrecisionPolicy policy() const { return {precision_bits, max_precision_bits}; }
  PrecisionPolicy wide_policy() const {
    // The wide reductions cancel ~940-bit integers; start past that.
    return {std::max<mpfr_prec_t>(precision_bits, 2048), max_precision_bits};
  }

  void validate() const {
    if (k_min > k_max || n_max < 1 || jobs < 1 || precision_bits < 64)
      throw std::invalid_argument("RunConfig: empty ranges or nonpositive caps");
  }
};

struct StageRecord {
  std::string stage;
  std::string anchor;
  nlohmann::json inputs;
  nlohmann::json outputs;
  mpfr_prec_t precision_bits = 0;
  long wall_ms = 0;
};

inline nlohmann::json stage_record_to_json(const StageRecord& s) {
  return {{"stage", s.stage},       {"anchor", s.anchor},
          {"inputs", s.inputs},     {"outputs", s.outputs},
          {"precision_bits", s.precision_bits}, {"wall_ms", s.wall_ms}};
}

/// Ordered record of every stage of a run, persisted one JSON file per
/// stage so a later run can resume or diff against it.
class ProofLedger {
 public:
  explicit ProofLedger(std::filesystem::path dir = {}, bool resume = false)
      : dir_(std::move(dir)), resume_(resume) {}

  /// When resuming, returns the previously persisted outputs of a stage
  /// whose recorded inputs match.
  std::optional<nlohmann::json> cached(const std::string& stage,
                                       const nlohmann::json& inputs) const {
    if (!resume_ || dir_.empty()) return std::nullopt;
    std::ifstream is(stage_path(stage));
    if (!is) return std::nullopt;
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
    if (j.value("stage", "") != stage || j["inputs"] != inputs) return std::nullopt;
    return j["outputs"];
  }

  const StageRecord& append(StageRecord rec) {
    if (!dir_.empty()) {
      std::filesystem::create_directories(dir_);
      std::ofstream os(stage_path(rec.stage));
      os << stage_record_to_json(rec).dump(1) << '\n';
    }
    stages_.push_back(std::move(rec));
    return stages_.back();
  }

  const std::vector<StageRecord>& stages() const { return stages_; }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : stages_) arr.push_back(stage_record_to_json(s));
    return arr;
  }

 private:
  std::filesystem::path stage_path(const std::string& stage) const {
    std::string name = stage;
    for (char& c : name)
      if (c == '/' || c == ' ') c = '_';
    return dir_ / (name + ".json");
  }

  std::filesystem::path dir_;
  bool resume_ = false;
  std::vector<StageRecord> stages_;
};

namespace detail {

template <class Fn>
void parallel_for(long begin, long end, int jobs, Fn&& fn) {
  const long total = end - begin;
  if (total <= 0) return;
  if (jobs <= 1 || total == 1) {
    for (long i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<long> next{begin};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  const int n = static_cast<int>(std::min<long>(jobs, total));
  for (int j = 0; j < n; ++j)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= end) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          next.store(end);
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline long ms_since(std::chrono::steady_clock::time_point t0) {
  return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reduction-instance builders. Each RealExpr re-derives its value at the
// requested precision, which is what lets the reduction machinery escalate.
// ---------------------------------------------------------------------------

inline RealExpr alpha_log_over_log10(long k) {
  return RealExpr("log(alpha(" + std::to_string(k) + "))/log(10)", [k](mpfr_prec_t p) {
    DominantRoot r = dominant_root_cached(k, p);
    return r.alpha.log() / CertifiedReal::from_long(10, p).log();
  });
}

inline RealExpr log10_over_alpha_log(long k) {
  return RealExpr("log(10)/log(alpha(" + std::to_string(k) + "))", [k](mpfr_prec_t p) {
    DominantRoot r = dominant_root_cached(k, p);
    return CertifiedReal::from_long(10, p).log() / r.alpha.log();
  });
}

inline RealExpr theta_expr() {
  return RealExpr("log(10)/log(2)", [](mpfr_prec_t p) {
    return CertifiedReal::from_long(10, p).log() / CertifiedReal::from_long(2, p).log();
  });
}

inline RealExpr sqrt2_expr() {
  return RealExpr("sqrt(2)",
                  [](mpfr_prec_t p) { return CertifiedReal::from_long(2, p).sqrt(); });
}

inline RealExpr golden_ratio_expr() {
  return RealExpr("(1+sqrt(5))/2", [](mpfr_prec_t p) {
    return (CertifiedReal::from_long(1, p) + CertifiedReal::from_long(5, p).sqrt()) /
           CertifiedReal::from_long(2, p);
  });
}

/// First round over k in [4,500]: |(n-1) gamma - (m+ell) + mu| < 10 * 10^{-m}
/// with gamma = log alpha / log 10, mu = log(9 f_k(alpha)/d1)/log 10,
/// A = B = 10 and M the per-k cap on n. Bounds the leading-run length m.
inline ReductionInstance leading_run_instance(long k, int d1, mpz_class M) {
  ReductionInstance inst;
  inst.label = "leading_run k=" + std::to_string(k) + " d1=" + std::to_string(d1);
  inst.gamma = alpha_log_over_log10(k);
  inst.mu = RealExpr(
      "log(9*f(" + std::to_string(k) + ")/" + std::to_string(d1) + ")/log(10)",
      [k, d1](mpfr_prec_t p) {
        DominantRoot r = dominant_root_cached(k, p);
        return (r.fk_alpha * mpz_class(9) / CertifiedReal::from_long(d1, p)).log() /
               CertifiedReal::from_long(10, p).log();
      });
  inst.A = 10;
  inst.B = RealExpr::constant(mpq_class(10), "10");
  inst.M = std::move(M);
  return inst;
}

/// Second round: |ell gamma - n + mu| < 21 alpha^{-n} with
/// gamma = log 10 / log alpha, mu = 1 + log(v/(9 f_k(alpha)))/log alpha,
/// v = d1 10^m - (d1 - d2), A = 21, B = alpha and M the per-k digit cap.
/// Bounds the index n.
inline ReductionInstance index_instance(long k, int d1, int d2, long m, mpz_class M) {
  ReductionInstance inst;
  inst.label = "index k=" + std::to_string(k) + " d1=" + std::to_string(d1) +
               " d2=" + std::to_string(d2) + " m=" + std::to_string(m);
  inst.gamma = log10_over_alpha_log(k);
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(m));
  const mpz_class v = d1 * p10 - (d1 - d2);
  inst.mu = RealExpr("1+log((" + v.get_str() + ")/(9*f(" + std::to_string(k) + ")))/log(alpha(" +
                         std::to_string(k) + "))",
                     [k, v](mpfr_prec_t p) {
                       DominantRoot r = dominant_root_cached(k, p);
                       const CertifiedReal ratio =
                           CertifiedReal::from_mpz(v, p) / (r.fk_alpha * mpz_class(9));
                       return CertifiedReal::from_long(1, p) + ratio.log() / r.alpha.log();
                     });
  inst.A = 21;
  inst.B = RealExpr("alpha(" + std::to_string(k) + ")", [k](mpfr_prec_t p) {
    return dominant_root_cached(k, p).alpha;
  });
  inst.M = std::move(M);
  return inst;
}

/// Large-k form |(m+ell) theta - (n-2) + mu| < 38 * 2^{-lambda} with
/// mu = 2 + log(d1/9)/log 2. Bounds lambda = min(k/2, theta m). For d1 = 9
/// mu degenerates to the integer 2 and the Legendre bound takes over.
inline ReductionInstance digit_exponent_instance(int d1, mpz_class M) {
  ReductionInstance inst;
  inst.label = "digit_exponent d1=" + std::to_string(d1);
  inst.gamma = theta_expr();
  inst.mu = RealExpr("2+log(" + std::to_string(d1) + "/9)/log(2)", [d1](mpfr_prec_t p) {
    return CertifiedReal::from_long(2, p) +
           CertifiedReal::from_mpq(mpq_class(d1, 9), p).log() /
               CertifiedReal::from_long(2, p).log();
  });
  inst.A = 38;
  inst.B = RealExpr::constant(mpq_class(2), "2");
  inst.M = std::move(M);
  return inst;
}

/// Large-k form |ell theta - n + mu| < 9 * 2^{-k/2} = 9 * sqrt(2)^{-k} with
/// mu = 2 + log(v/9)/log 2, v = d1 10^m - (d1 - d2). Bounds k directly.
/// Cells where v/9 is a product of powers of 2 and 5 degenerate and are
/// routed to the Legendre bound by the sweep.
inline ReductionInstance tail_exponent_instance(int d1, int d2, long m, mpz_class M) {
  ReductionInstance inst;
  inst.label = "tail_exponent d1=" + std::to_string(d1) + " d2=" + std::to_string(d2) +
               " m=" + std::to_string(m);
  inst.gamma = theta_expr();
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(m));
  const mpz_class v = d1 * p10 - (d1 - d2);
  inst.mu = RealExpr("2+log((" + v.get_str() + ")/9)/log(2)", [v](mpfr_prec_t p) {
    return CertifiedReal::from_long(2, p) +
           (CertifiedReal::from_mpz(v, p) / CertifiedReal::from_long(9, p)).log() /
               CertifiedReal::from_long(2, p).log();
  });
  inst.A = 9;
  inst.B = sqrt2_expr();
  inst.M = std::move(M);
  return inst;
}

/// Shared expansion cache: one ContinuedFraction per source description,
/// optionally backed by a disk cache under cache_dir.
inline ContinuedFraction& shared_cf(const RealExpr& gamma, const PrecisionPolicy& policy,
                                    const std::filesystem::path& cache_dir = {}) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<ContinuedFraction>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(gamma.description());
  if (it != cache.end()) return *it->second;
  auto cf = std::make_unique<ContinuedFraction>(gamma, policy);
  if (!cache_dir.empty()) {
    std::string name;
    for (char c : gamma.description()) name += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    cf->load_cache(cache_dir / (name + ".json"));
  }
  auto& ref = *cf;
  cache.emplace(gamma.description(), std::move(cf));
  return ref;
}

inline void persist_cf(ContinuedFraction& cf, const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return;
  std::string name;
  for (char c : cf.description()) name += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  cf.save_cache(cache_dir / (name + ".json"));
}

// ---------------------------------------------------------------------------
// Expected solution set (the verification target for the sweeps).
// ---------------------------------------------------------------------------

struct TheoremTable {
  std::vector<Solution> entries;          // the 22 sporadic solutions
  std::vector<SolutionFamily> families;   // 16, 32, 64 for all large k
};

inline const TheoremTable& theorem_table() {
  static const TheoremTable table = [] {
    TheoremTable t;
    auto add = [&t](long k, long n, long value) {
      Solution s;
      s.k = k;
      s.n = n;
      s.decomposition = two_block_decompose(mpz_class(value)).front();
      t.entries.push_back(std::move(s));
    };
    add(2, 7, 13);   add(2, 8, 21);   add(2, 9, 34);   add(2, 10, 55);
    add(2, 11, 89);  add(2, 12, 144); add(2, 13, 233); add(2, 14, 377);
    add(3, 6, 13);   add(3, 7, 24);   add(3, 8, 44);   add(3, 9, 81);
    add(4, 6, 15);   add(4, 7, 29);   add(4, 8, 56);   add(4, 12, 773);
    add(5, 7, 31);   add(5, 8, 61);
    add(6, 8, 63);
    add(7, 13, 2000);
    add(8, 10, 255);
    add(9, 11, 511);
    std::sort(t.entries.begin(), t.entries.end());
    t.families = {{mpz_class(16), 6, 5}, {mpz_class(32), 7, 6}, {mpz_class(64), 8, 7}};
    return t;
  }();
  return table;
}

/// All solutions the table predicts within a k-range (families instantiated).
inline std::vector<Solution> expected_solutions(long k_min, long k_max, long n_max) {
  std::vector<Solution> out;
  for (const auto& e : theorem_table().entries)
    if (e.k >= k_min && e.k <= k_max && e.n <= n_max) out.push_back(e);
  for (const auto& f : theorem_table().families)
    for (long k = std::max(f.k_min, k_min); k <= k_max; ++k)
      if (f.n <= n_max) {
        Solution s;
        s.k = k;
        s.n = f.n;
        s.decomposition = two_block_decompose(f.value).front();
        out.push_back(std::move(s));
      }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

struct TheoremReport {
  struct Entry {
    Solution expected;
    bool found = false;
  };
  std::vector<Entry> checks;
  std::vector<Solution> extras;
  std::vector<Solution> swept;
  SmallNReport small_n;
  bool families_consistent = false;
  bool pass = false;
};

/// Independent end-to-end verification: the exact sweep plus the small-index
/// solver against the expected table, entry by entry.
inline TheoremReport verify_theorem(const RunConfig& config, ProofLedger* ledger = nullptr) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TheoremReport rep;
  rep.swept = enumerate_solutions(KRange{config.enum_k_min, config.k_max}, config.n_max,
                                  config.jobs);
  rep.small_n = solve_small_n(config.k_max);

  const auto expected = expected_solutions(config.enum_k_min, config.k_max, config.n_max);
  for (const auto& e : expected) {
    TheoremReport::Entry c;
    c.expected = e;
    c.found = std::find(rep.swept.begin(), rep.swept.end(), e) != rep.swept.end();
    rep.checks.push_back(std::move(c));
  }
  for (const auto& s : rep.swept)
    if (std::find(expected.begin(), expected.end(), s) == expected.end())
      rep.extras.push_back(s);

  // The solver's families must agree with what the sweep finds in the
  // power regime (n <= k+1), and vice versa.
  rep.families_consistent = rep.small_n.families.size() == 3;
  for (const auto& f : rep.small_n.families) {
    for (long k = f.k_min; k <= std::min<long>(config.k_max, f.k_min + 20); ++k) {
      Solution probe;
      probe.k = k;
      probe.n = f.n;
      probe.decomposition = two_block_decompose(f.value).front();
      if (std::find(rep.swept.begin(), rep.swept.end(), probe) == rep.swept.end())
        rep.families_consistent = false;
    }
  }

  rep.pass = rep.extras.empty() && rep.families_consistent &&
             std::all_of(rep.checks.begin(), rep.checks.end(),
                         [](const auto& c) { return c.found; });

  if (ledger) {
    StageRecord rec;
    rec.stage = "verify_theorem";
    rec.anchor = "exact digit-pattern sweep and power-regime solver";
    rec.inputs = {{"k_min", config.enum_k_min}, {"k_max", config.k_max}, {"n_max", config.n_max}};
    rec.outputs = {{"entries_checked", rep.checks.size()},
                   {"found", std::count_if(rep.checks.begin(), rep.checks.end(),
                                           [](const auto& c) { return c.found; })},
                   {"extras", rep.extras.size()},
                   {"families_consistent", rep.families_consistent},
                   {"pass", rep.pass}};
    rec.precision_bits = 0;
    rec.wall_ms = detail::ms_since(t0);
    ledger->append(std::move(rec));
  }
  return rep;
}

struct SmallKRunResult {
  mpz_class round1_w_max;  // max over k, d1 (must stay < 151)
  mpz_class round2_w_max;  // max over k, d1, d2, m (must stay < 501)
  nlohmann::json round1_worst;
  nlohmann::json round2_worst;
  bool enumeration_pass = false;
};

/// The k in [4,500] half of the proof: per-k caps, two reduction rounds
/// and the final exact sweep. Throws verification_error if any reduction
/// fails or a bound exceeds its reference cap.
inline SmallKRunResult run_small_k(const RunConfig& config, ProofLedger& ledger) {
  config.validate();
  if (config.k_min < 4 || config.k_max > 500)
    throw std::invalid_argument("run_small_k: k range must lie within [4,500]");
  const PrecisionPolicy policy = config.policy();
  const long nk = config.k_max - config.k_min + 1;

  SmallKRunResult result;

  // Per-k caps.
  std::vector<SmallKBounds> caps(static_cast<size_t>(nk));
  {
    const auto t0 = std::chrono::steady_clock::now();
    detail::parallel_for(0, nk, config.jobs, [&](long i) {
      caps[static_cast<size_t>(i)] = stage_bounds_small_k(config.k_min + i);
    });
    StageRecord rec;
    rec.stage = "small_k_caps";
    rec.anchor = "per-k polynomial-log caps on n and m+ell";
    rec.inputs = {{"k_min", config.k_min}, {"k_max", config.k_max}};
    rec.outputs = {{"n_cap_first", caps.front().n_bound.value.get_str()},
                   {"n_cap_last", caps.back().n_bound.value.get_str()},
                   {"digit_cap_last", caps.back().ml_bound.value.get_str()}};
    rec.precision_bits = 256;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));
  }

  // Round 1: leading-run reduction, 9 digit choices per k.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const nlohmann::json inputs = {{"k_min", config.k_min}, {"k_max", config.k_max}};
    if (auto cached = ledger.cached("reduce_leading_run", inputs)) {
      result.round1_w_max = mpz_class(cached->at("w_max").get<std::string>());
      result.round1_worst = cached->at("worst");
    } else {
      std::vector<mpz_class> per_k(static_cast<size_t>(nk));
      std::vector<nlohmann::json> worst(static_cast<size_t>(nk));
      detail::parallel_for(0, nk, config.jobs, [&](long i) {
        const long k = config.k_min + i;
        ContinuedFraction& cf = shared_cf(alpha_log_over_log10(k), policy);
        mpz_class w_max;
        for (int d1 = 1; d1 <= 9; ++d1) {
          auto inst = leading_run_instance(k, d1, caps[static_cast<size_t>(i)].n_bound.value);
          auto outcome = dujella_petho(cf, inst, policy, config.max_convergents);
          const auto* r = std::get_if<ReducedBound>(&outcome);
          if (!r)
            throw verification_error("leading-run reduction failed: " +
                                     reduction_to_json(inst, outcome).dump());
          if (r->w_max > w_max) {
            w_max = r->w_max;
            worst[static_cast<size_t>(i)] = reduction_to_json(inst, outcome);
          }
        }
        per_k[static_cast<size_t>(i)] = w_max;
      });
      for (long i = 0; i < nk; ++i)
        if (per_k[static_cast<size_t>(i)] > result.round1_w_max) {
          result.round1_w_max = per_k[static_cast<size_t>(i)];
          result.round1_worst = worst[static_cast<size_t>(i)];
        }
      StageRecord rec;
      rec.stage = "reduce_leading_run";
      rec.anchor = "Dujella-Petho reduction bounding the leading-run length";
      rec.inputs = inputs;
      rec.outputs = {{"w_max", result.round1_w_max.get_str()}, {"worst", result.round1_worst}};
      rec.precision_bits = policy.initial_bits;
      rec.wall_ms = detail::ms_since(t0);
      ledger.append(std::move(rec));
    }
    if (result.round1_w_max >= 151)
      throw verification_error("leading-run bound " + result.round1_w_max.get_str() +
                               " reached the reference cap 151");
  }

  // Round 2: index reduction over all digit pairs and m in [1, 150].
  {
    const auto t0 = std::chrono::steady_clock::now();
    const nlohmann::json inputs = {{"k_min", config.k_min},
                                   {"k_max", config.k_max},
                                   {"m_cap", config.round2_m_cap}};
    if (auto cached = ledger.cached("reduce_index", inputs)) {
      result.round2_w_max = mpz_class(cached->at("w_max").get<std::string>());
      result.round2_worst = cached->at("worst");
    } else {
      std::vector<mpz_class> per_k(static_cast<size_t>(nk));
      std::vector<nlohmann::json> worst(static_cast<size_t>(nk));
      detail::parallel_for(0, nk, config.jobs, [&](long i) {
        const long k = config.k_min + i;
        ContinuedFraction& cf = shared_cf(log10_over_alpha_log(k), policy);
        mpz_class w_max;
        for (int d1 = 1; d1 <= 9; ++d1)
          for (int d2 = 0; d2 <= 9; ++d2)
            for (long m = 1; m <= config.round2_m_cap; ++m) {
              auto inst =
                  index_instance(k, d1, d2, m, caps[static_cast<size_t>(i)].ml_bound.value);
              auto outcome = dujella_petho(cf, inst, policy, config.max_convergents);
              const auto* r = std::get_if<ReducedBound>(&outcome);
              if (!r)
                throw verification_error("index reduction failed: " +
                                         reduction_to_json(inst, outcome).dump());
              if (r->w_max > w_max) {
                w_max = r->w_max;
                worst[static_cast<size_t>(i)] = reduction_to_json(inst, outcome);
              }
            }
        per_k[static_cast<size_t>(i)] = w_max;
      });
      for (long i = 0; i < nk; ++i)
        if (per_k[static_cast<size_t>(i)] > result.round2_w_max) {
          result.round2_w_max = per_k[static_cast<size_t>(i)];
          result.round2_worst = worst[static_cast<size_t>(i)];
        }
      StageRecord rec;
      rec.stage = "reduce_index";
      rec.anchor = "Dujella-Petho reduction bounding the index";
      rec.inputs = inputs;
      rec.outputs = {{"w_max", result.round2_w_max.get_str()}, {"worst", result.round2_worst}};
      rec.precision_bits = policy.initial_bits;
      rec.wall_ms = detail::ms_since(t0);
      ledger.append(std::move(rec));
    }
    if (result.round2_w_max >= 501)
      throw verification_error("index bound " + result.round2_w_max.get_str() +
                               " reached the reference cap 501");
  }

  // Exact sweep over the surviving range.
  {
    RunConfig sweep = config;
    sweep.n_max = std::min<long>(config.n_max, 500);
    auto rep = verify_theorem(sweep, &ledger);
    result.enumeration_pass = rep.pass;
    if (!rep.pass) throw verification_error("exact sweep disagrees with the solution table");
  }
  return result;
}

struct LargeKRunResult {
  mpz_class lambda_cap_wide;    // after the first digit-exponent round (<= 955)
  mpz_class lambda_cap_narrow;  // after the shrunk round (<= 210)
  mpz_class k_cap_wide;         // <= 1950
  mpz_class k_cap_final;        // <= 450, the contradiction
  std::vector<std::array<long, 3>> degenerate_cells;  // (m, d1, d2) routed to Legendre
  bool contradiction = false;
};

/// The k > 500 half: absolute Matveev caps, then two rounds of
/// digit-exponent and trailing-run reductions with the Legendre fallback
/// for the degenerate digit patterns, ending in k <= 450 < 500.
inline LargeKRunResult run_large_k(const RunConfig& config, ProofLedger& ledger) {
  config.validate();
  const PrecisionPolicy wide = config.wide_policy();
  const std::filesystem::path cf_dir = config.out_dir / "cf-cache";
  LargeKRunResult result;

  // Absolute caps.
  {
    const auto t0 = std::chrono::steady_clock::now();
    auto stages = stage_bounds_large_k();
    StageRecord rec;
    rec.stage = "large_k_caps";
    rec.anchor = "Matveev chain: absolute caps on k, m+ell, n";
    rec.inputs = nlohmann::json::object();
    auto arr = nlohmann::json::array();
    for (const auto& s : stages) arr.push_back(stage_bound_to_json(s));
    rec.outputs = {{"stages", arr}};
    rec.precision_bits = 320;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));

    for (const mpz_class k : {mpz_class(501), mpz_class(1000), mpz_class(1000000),
                              mpz_class("1000000000000000"), reference::abs_k_cap})
      if (!index_below_power_check(k))
        throw verification_error("index cap does not sit below 2^{k/2} at k=" + k.get_str());
  }

  ContinuedFraction& cf = shared_cf(theta_expr(), wide, cf_dir);

  // Round A: digit-exponent reduction at the wide cap M = 1.5e282.
  mpz_class m_sweep_cap;   // leading-run range for the trailing-run sweep
  mpz_class k_half_wide;   // cap on k from the lambda = k/2 case
  {
    const auto t0 = std::chrono::steady_clock::now();
    const mpz_class M = reference::abs_ml_cap;
    mpz_class dp_cap;  // max (w_max - 1) over d1 in [1,8]
    nlohmann::json per_d1 = nlohmann::json::array();
    for (int d1 = 1; d1 <= 8; ++d1) {
      auto inst = digit_exponent_instance(d1, M);
      auto outcome = dujella_petho(cf, inst, wide, config.max_convergents);
      const auto* r = std::get_if<ReducedBound>(&outcome);
      if (!r)
        throw verification_error("digit-exponent reduction failed: " +
                                 reduction_to_json(inst, outcome).dump());
      per_d1.push_back(reduction_to_json(inst, outcome));
      dp_cap = std::max(dp_cap, mpz_class(r->w_max - 1));
    }
    if (dp_cap > 950)
      throw verification_error("wide digit-exponent cap " + dp_cap.get_str() + " exceeds 950");

    // d1 = 9: mu = 2 exactly, so eps < 0 always; the convergent lower
    // bound applies to |(m+ell) theta - (n-2)| instead.
    auto deg = theta_integer_combination(mpq_class(9, 9), 2);
    if (!deg || deg->first != 2 || deg->second != 0)
      throw std::logic_error("d1=9 digit-exponent cell should be the integer mu = 2");
    const LegendreBound leg = legendre_lower(cf, M);
    const mpz_class T = 38 * leg.factor * M;
    const mpz_class lambda9 = largest_exponent_below(T);
    if (lambda9 > 955)
      throw verification_error("Legendre digit-exponent cap " + lambda9.get_str() +
                               " exceeds 955");
    result.lambda_cap_wide = std::max(dp_cap, lambda9);

    // Case split. The reduction branch gives lambda < dp_cap + 1, the
    // Legendre branch lambda < log2(T); k = 2 lambda and 10^m < 2^lambda
    // turn these into exact integer caps.
    k_half_wide = std::max(mpz_class(2 * dp_cap + 1), largest_exponent_below(T * T));
    mpz_class pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), 2, mpz_get_ui(dp_cap.get_mpz_t()) + 1);
    const mpz_class m_cap_exact =
        std::max(digit_count(pw) - 1, digit_count(T) - 1);
    m_sweep_cap = std::max(mpz_class(290), m_cap_exact);

    StageRecord rec;
    rec.stage = "reduce_digit_exponent_wide";
    rec.anchor = "Dujella-Petho reduction on the power ratio; Legendre bound for d1=9";
    rec.inputs = {{"M", M.get_str()}};
    rec.outputs = {{"dp_cap", dp_cap.get_str()},
                   {"legendre_factor", leg.factor.get_str()},
                   {"legendre_cap", lambda9.get_str()},
                   {"lambda_cap", result.lambda_cap_wide.get_str()},
                   {"k_cap_half_case", k_half_wide.get_str()},
                   {"m_cap_exact", m_cap_exact.get_str()},
                   {"m_sweep_cap", m_sweep_cap.get_str()},
                   {"per_d1", per_d1}};
    rec.precision_bits = wide.initial_bits;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));
  }

  // Round A, trailing-run form: sweep all digit pairs and m.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const mpz_class M = reference::abs_ml_cap;
    mpz_class k_cap_dp, k_cap_deg;
    const long m_hi = static_cast<long>(m_sweep_cap.get_si());
    const LegendreBound leg = legendre_lower(cf, M);
    for (long m = 1; m <= m_hi; ++m)
      for (int d1 = 1; d1 <= 9; ++d1)
        for (int d2 = 0; d2 <= 9; ++d2) {
          mpz_class p10;
          mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(m));
          const mpq_class v(d1 * p10 - (d1 - d2), 9);
          if (auto deg = theta_integer_combination(v, 2)) {
            if (deg->second > m)
              throw std::logic_error("degenerate cell with run shift above m");
            result.degenerate_cells.push_back({m, d1, d2});
            const mpz_class T = 9 * leg.factor * M;
            k_cap_deg = std::max(k_cap_deg, largest_exponent_below(T * T));
            continue;
          }
          auto inst = tail_exponent_instance(d1, d2, m, M);
          auto outcome = dujella_petho(cf, inst, wide, config.max_convergents);
          const auto* r = std::get_if<ReducedBound>(&outcome);
          if (!r)
            throw verification_error("trailing-run reduction failed: " +
                                     reduction_to_json(inst, outcome).dump());
          k_cap_dp = std::max(k_cap_dp, mpz_class(r->w_max - 1));
        }
    if (k_cap_dp > 1950)
      throw verification_error("wide trailing-run cap " + k_cap_dp.get_str() + " exceeds 1950");
    if (k_cap_deg > 1905)
      throw verification_error("degenerate trailing-run cap " + k_cap_deg.get_str() +
                               " exceeds 1905");
    result.k_cap_wide = std::max({k_cap_dp, k_cap_deg, k_half_wide});

    StageRecord rec;
    rec.stage = "reduce_trailing_run_wide";
    rec.anchor = "Dujella-Petho reduction, trailing-run form; Legendre for degenerate cells";
    rec.inputs = {{"M", M.get_str()}, {"m_cap", m_hi}};
    rec.outputs = {{"k_cap_reduction", k_cap_dp.get_str()},
                   {"k_cap_degenerate", k_cap_deg.get_str()},
                   {"k_cap", result.k_cap_wide.get_str()},
                   {"degenerate_cells", result.degenerate_cells.size()}};
    rec.precision_bits = wide.initial_bits;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));
  }

  // Shrink the digit cap using k <= 1950 and rerun both reductions.
  {
    const auto t0 = std::chrono::steady_clock::now();
    const CertifiedReal ml =
        CertifiedReal::from_mpz(reference::ml_poly_coeff, 320) *
        detail::pow_log_z(result.k_cap_wide, 8, 5, 320);
    if (!decided(ml.less_than(mpq_class(reference::shrunk_ml_cap)), "shrunk digit cap"))
      throw verification_error("digit cap at k = " + result.k_cap_wide.get_str() +
                               " does not fit under 1.6e59");
    const mpz_class M = reference::shrunk_ml_cap;

    mpz_class dp_cap;
    for (int d1 = 1; d1 <= 8; ++d1) {
      auto inst = digit_exponent_instance(d1, M);
      auto outcome = dujella_petho(cf, inst, config.policy(), config.max_convergents);
      const auto* r = std::get_if<ReducedBound>(&outcome);
      if (!r)
        throw verification_error("narrow digit-exponent reduction failed: " +
                                 reduction_to_json(inst, outcome).dump());
      dp_cap = std::max(dp_cap, mpz_class(r->w_max - 1));
    }
    const LegendreBound leg = legendre_lower(cf, M);
    const mpz_class T = 38 * leg.factor * M;
    const mpz_class lambda9 = largest_exponent_below(T);
    result.lambda_cap_narrow = std::max(dp_cap, lambda9);
    if (result.lambda_cap_narrow > 210)
      throw verification_error("narrow digit-exponent cap " +
                               result.lambda_cap_narrow.get_str() + " exceeds 210");

    const mpz_class k_cap_half =
        std::max(mpz_class(2 * dp_cap + 1), largest_exponent_below(T * T));
    mpz_class pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), 2, mpz_get_ui(dp_cap.get_mpz_t()) + 1);
    const mpz_class m_cap_exact =
        std::max(digit_count(pw) - 1, digit_count(T) - 1);
    const long m_hi = std::max(65L, static_cast<long>(m_cap_exact.get_si()));

    mpz_class k_cap_dp, k_cap_deg;
    for (long m = 1; m <= m_hi; ++m)
      for (int d1 = 1; d1 <= 9; ++d1)
        for (int d2 = 0; d2 <= 9; ++d2) {
          mpz_class p10;
          mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(m));
          const mpq_class v(d1 * p10 - (d1 - d2), 9);
          if (theta_integer_combination(v, 2)) {
            const mpz_class T = 9 * leg.factor * M;
            k_cap_deg = std::max(k_cap_deg, largest_exponent_below(T * T));
            continue;
          }
          auto inst = tail_exponent_instance(d1, d2, m, M);
          auto outcome = dujella_petho(cf, inst, config.policy(), config.max_convergents);
          const auto* r = std::get_if<ReducedBound>(&outcome);
          if (!r)
            throw verification_error("narrow trailing-run reduction failed: " +
                                     reduction_to_json(inst, outcome).dump());
          k_cap_dp = std::max(k_cap_dp, mpz_class(r->w_max - 1));
        }
    result.k_cap_final = std::max({k_cap_dp, k_cap_deg, k_cap_half});
    if (result.k_cap_final > 450)
      throw verification_error("final cap " + result.k_cap_final.get_str() + " exceeds 450");
    result.contradiction = result.k_cap_final < 501;

    StageRecord rec;
    rec.stage = "reduce_narrow_and_contradict";
    rec.anchor = "cap shrink, rerun of both reductions, contradiction with k > 500";
    rec.inputs = {{"M", M.get_str()}, {"m_cap", m_hi}};
    rec.outputs = {{"lambda_cap", result.lambda_cap_narrow.get_str()},
                   {"k_cap_reduction", k_cap_dp.get_str()},
                   {"k_cap_degenerate", k_cap_deg.get_str()},
                   {"k_cap_final", result.k_cap_final.get_str()},
                   {"contradiction", result.contradiction}};
    rec.precision_bits = config.precision_bits;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));
  }

  persist_cf(cf, cf_dir);
  if (!result.contradiction)
    throw verification_error("large-k analysis did not close: k cap " +
                             result.k_cap_final.get_str());
  return result;
}

struct FullProofResult {
  SmallNReport small_n;
  SmallKRunResult small_k;
  LargeKRunResult large_k;
  TheoremReport theorem;
  bool pass = false;
};

/// The complete argument in order: power-regime solver, small-k rounds,
/// large-k contradiction, and the final exact verification.
inline FullProofResult full_proof(RunConfig config, ProofLedger& ledger) {
  config.validate();
  FullProofResult result;
  {
    const auto t0 = std::chrono::steady_clock::now();
    result.small_n = solve_small_n(config.k_max);
    StageRecord rec;
    rec.stage = "small_n_powers";
    rec.anchor = "two-adic valuation and bounded power search";
    rec.inputs = {{"k_probe", config.k_max}};
    rec.outputs = {{"ell_bound", result.small_n.ell_bound},
                   {"digit_bound", result.small_n.digit_bound},
                   {"families", result.small_n.families.size()}};
    rec.precision_bits = 0;
    rec.wall_ms = detail::ms_since(t0);
    ledger.append(std::move(rec));
  }
  result.small_k = run_small_k(config, ledger);
  result.large_k = run_large_k(config, ledger);
  result.theorem = verify_theorem(config, &ledger);
  result.pass = result.theorem.pass && result.large_k.contradiction &&
                result.small_k.enumeration_pass;
  return result;
}

}  // namespace kfib
