// Command-line driver: exact sweeps, the reduction rounds and the full
// proof pipeline, with JSON stage records under --out-dir.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kfib/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOperational = 1;
constexpr int kExitMismatch = 2;

void write_outputs(const kfib::RunConfig& config, const std::vector<kfib::Solution>& sols) {
  std::filesystem::create_directories(config.out_dir);
  std::ofstream csv(config.out_dir / "solutions.csv");
  csv << kfib::solutions_to_csv(sols);
  std::ofstream js(config.out_dir / "solutions.json");
  js << kfib::solutions_to_json(sols).dump(1) << '\n';
}

std::pair<long, long> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    const long v = std::stol(s);
    return {v, v};
  }
  return {std::stol(s.substr(0, colon)), std::stol(s.substr(colon + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-Fibonacci numbers that are concatenations of two repdigits: "
               "exact solver and proof pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  kfib::RunConfig config;
  long precision_bits = 512;
  app.add_option("--precision-bits", precision_bits, "initial working precision (bits)")
      ->capture_default_str();
  app.add_option("--jobs", config.jobs, "worker threads for sweeps")->capture_default_str();
  app.add_option("--out-dir", config.out_dir, "directory for stage records and outputs")
      ->capture_default_str();
  app.add_flag("--resume", config.resume, "reuse persisted stage outputs when inputs match");

  auto* enumerate = app.add_subcommand("enumerate", "exact sweep of F_n^{(k)} for two-block values");
  long ekmin = 2, ekmax = 50, enmax = 500;
  enumerate->add_option("--k-min", ekmin)->capture_default_str();
  enumerate->add_option("--k-max", ekmax)->capture_default_str();
  enumerate->add_option("--n-max", enmax)->capture_default_str();

  auto* small_n = app.add_subcommand("small-n", "solve the power regime 2 <= n <= k+1");
  long probe = 50;
  small_n->add_option("--k-probe", probe, "instantiate families up to this k")
      ->capture_default_str();

  auto* reduce_small = app.add_subcommand("reduce-small-k", "reduction rounds for k in [4,500]");
  std::string k_range = "4:20";
  reduce_small->add_option("--k-range", k_range, "inclusive range, e.g. 4:500")
      ->capture_default_str();

  auto* reduce_large = app.add_subcommand("reduce-large-k", "close out k > 500");

  auto* verify = app.add_subcommand("verify-theorem", "check the sweep against the solution table");
  long vkmax = 50, vnmax = 500;
  verify->add_option("--k-max", vkmax)->capture_default_str();
  verify->add_option("--n-max", vnmax)->capture_default_str();

  auto* full = app.add_subcommand("full-proof", "run every stage at full scale");

  CLI11_PARSE(app, argc, argv);
  config.precision_bits = static_cast<mpfr_prec_t>(precision_bits);

  try {
    kfib::ProofLedger ledger(config.out_dir / "ledger", config.resume);

    if (*enumerate) {
      config.enum_k_min = ekmin;
      config.k_max = ekmax;
      config.n_max = enmax;
      auto sols = kfib::enumerate_solutions(kfib::KRange{ekmin, ekmax}, enmax, config.jobs);
      std::cout << kfib::solutions_to_csv(sols);
      write_outputs(config, sols);
      return kExitOk;
    }

    if (*small_n) {
      auto rep = kfib::solve_small_n(probe);
      std::cout << "trailing-run cap: ell <= " << rep.ell_bound << "\n"
                << "digit cap: m+ell <= " << rep.digit_bound << "\n";
      for (const auto& f : rep.families)
        std::cout << "family: value " << f.value.get_str() << " at n = " << f.n
                  << " for every k >= " << f.k_min << "\n";
      std::cout << rep.instances.size() << " instances with k <= " << probe << "\n";
      return kExitOk;
    }

    if (*reduce_small) {
      auto [lo, hi] = parse_range(k_range);
      config.k_min = lo;
      config.k_max = hi;
      auto res = kfib::run_small_k(config, ledger);
      std::cout << "leading-run bound: m <= " << mpz_class(res.round1_w_max - 1).get_str()
                << " (cap 150)\n"
                << "index bound: n <= " << mpz_class(res.round2_w_max - 1).get_str() << " (cap 500)\n"
                << "exact sweep: " << (res.enumeration_pass ? "matches" : "MISMATCH") << "\n";
      return res.enumeration_pass ? kExitOk : kExitMismatch;
    }

    if (*reduce_large) {
      auto res = kfib::run_large_k(config, ledger);
      std::cout << "wide exponent cap: lambda <= " << res.lambda_cap_wide.get_str() << "\n"
                << "wide k cap: " << res.k_cap_wide.get_str() << "\n"
                << "narrow exponent cap: lambda <= " << res.lambda_cap_narrow.get_str() << "\n"
                << "final k cap: " << res.k_cap_final.get_str() << " < 501 => "
                << (res.contradiction ? "contradiction, no solutions with k > 500"
                                      : "NOT CLOSED")
                << "\n";
      return res.contradiction ? kExitOk : kExitMismatch;
    }

    if (*verify) {
      config.k_max = vkmax;
      config.n_max = vnmax;
      auto rep = kfib::verify_theorem(config, &ledger);
      for (const auto& c : rep.checks) {
        const auto& d = c.expected.decomposition;
        std::cout << (c.found ? "[PASS] " : "[FAIL] ") << "F_" << c.expected.n << "^("
                  << c.expected.k << ") = " << d.value.get_str() << "\n";
      }
      for (const auto& s : rep.extras)
        std::cout << "[FAIL] unexpected solution k=" << s.k << " n=" << s.n << " value "
                  << s.decomposition.value.get_str() << "\n";
      std::cout << (rep.families_consistent ? "[PASS] " : "[FAIL] ")
                << "power-regime families consistent with sweep\n";
      write_outputs(config, rep.swept);
      std::cout << (rep.pass ? "table verified" : "table verification FAILED") << "\n";
      return rep.pass ? kExitOk : kExitMismatch;
    }

    if (*full) {
      std::cout << "full-scale run: reduction sweep over k in [4,500] and all digit pairs; "
                   "expect on the order of an hour on a single core\n";
      config.k_min = 4;
      config.k_max = 500;
      config.n_max = 500;
      config.enum_k_min = 2;
      auto res = kfib::full_proof(config, ledger);
      write_outputs(config, res.theorem.swept);
      std::cout << "small-k: m <= " << mpz_class(res.small_k.round1_w_max - 1).get_str() << ", n <= "
                << mpz_class(res.small_k.round2_w_max - 1).get_str() << "\n"
                << "large-k: final cap " << res.large_k.k_cap_final.get_str() << " < 501\n"
                << "table: " << res.theorem.checks.size() << " entries, "
                << res.theorem.extras.size() << " extras\n"
                << (res.pass ? "proof pipeline complete" : "proof pipeline FAILED") << "\n";
      return res.pass ? kExitOk : kExitMismatch;
    }
  } catch (const kfib::verification_error& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOperational;
  }
  return kExitOperational;
}
