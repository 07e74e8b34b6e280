// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavy trend criteria run with the stated replicate counts, so
// the full suite takes several minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "efpp/estimators.hpp"
#include "efpp/experiment.hpp"
#include "efpp/verify.hpp"

using namespace efpp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int number, const std::string& label, bool pass, const std::string& details,
            double seconds) {
  std::printf("[%s] criterion %2d: %-34s %7.1fs  %s\n", pass ? "PASS" : "FAIL", number,
              label.c_str(), seconds, details.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void criterion(int number, const std::string& label,
               const std::function<std::pair<bool, std::string>()>& fn) {
  const auto t0 = Clock::now();
  bool pass = false;
  std::string details;
  try {
    auto [p, d] = fn();
    pass = p;
    details = std::move(d);
  } catch (const std::exception& e) {
    details = std::string("exception: ") + e.what();
  }
  report(number, label, pass, details, std::chrono::duration<double>(Clock::now() - t0).count());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig trend_config(int workers) {
  ExperimentConfig config;
  config.dim = 2;
  config.alpha = 2.0;
  config.replicates = 200;
  config.seed = MasterSeed{20260810};
  config.workers = workers;
  config.influence_band = 2.0;
  config.n_values = {8, 16, 32, 64};
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  std::string root = ".";
  int workers = 0;
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--root") == 0 && i + 1 < argc) root = argv[++i];
    if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) workers = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  }

  criterion(1, "oracle equivalence", [&]() -> std::pair<bool, std::string> {
    const CheckResult r = check_oracle_equivalence(1000, workers);
    const bool in_budget = r.seconds < 30.0;
    return {r.pass && in_budget, r.details + (in_budget ? "" : " [over 30s budget]")};
  });

  criterion(2, "analytic gradient vs differences", [&]() -> std::pair<bool, std::string> {
    const CheckResult r = check_gradient_fd(200, workers);
    const bool in_budget = r.seconds < 30.0;
    return {r.pass && in_budget, r.details + (in_budget ? "" : " [over 30s budget]")};
  });

  criterion(3, "deterministic inequality suite", [&]() -> std::pair<bool, std::string> {
    const auto t0 = Clock::now();
    const CheckResult phi = check_phi_inequalities(100000);
    const CheckResult fsq = check_fs_exact(200);
    const CheckResult ls = check_logsobolev(1000);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool pass = phi.pass && fsq.pass && ls.pass && secs < 60.0;
    return {pass, "phi: " + phi.details + "; fs: " + fsq.details + "; ls: " + ls.details};
  });

  criterion(4, "geometry lemmas", [&]() -> std::pair<bool, std::string> {
    const CheckResult wd = check_lemma_w_dimensions_grid();
    const CheckResult er = check_lemma_e_regions_threshold();
    return {wd.pass && er.pass, wd.details + "; " + er.details};
  });

  criterion(5, "order and monotonicity", [&]() -> std::pair<bool, std::string> {
    const CheckResult r = check_order_monotonicity(10000, workers);
    return {r.pass, r.details};
  });

  criterion(6, "distributional encoding", [&]() -> std::pair<bool, std::string> {
    const CheckResult chi = check_poisson_decode(100000);
    const CheckResult lead = check_leading_ones(100000);
    return {chi.pass && lead.pass, chi.details + "; " + lead.details};
  });

  criterion(7, "T' and T'' agreement", [&]() -> std::pair<bool, std::string> {
    ExperimentConfig config = trend_config(workers);
    config.replicates = quick ? 100 : 500;
    std::string detail = "rates:";
    bool pass = true;
    double prev_rate = 0.0;
    int idx = 0;
    for (double n : {8.0, 16.0, 32.0}) {
      const double rate = equality_rate(config, n);
      detail += " " + fmt(rate);
      if (rate < 0.99) pass = false;
      // Qualitative decay direction within two binomial sigmas.
      const double sigma =
          2.0 * std::sqrt(std::max(rate * (1 - rate), 1e-6) / config.replicates);
      if (idx > 0 && rate + 2.0 * sigma < prev_rate) pass = false;
      prev_rate = rate;
      ++idx;
    }
    return {pass, detail};
  });

  criterion(8, "trend checks over the n grid", [&]() -> std::pair<bool, std::string> {
    ExperimentConfig config = trend_config(workers);
    if (quick) {
      config.replicates = 30;
      config.n_values = {8, 16, 32};
    }
    const auto t0 = Clock::now();
    bool pass = true;
    std::string detail;

    std::vector<double> var_over_n, var_se_over_n;
    std::vector<double> infl_sum, infl_max, infl_max_se;
    std::vector<double> grad_sum, bit_sum;
    for (double n : config.n_values) {
      const VarianceEstimate var_t = estimate_variance(config, VarTarget::T, n);
      var_over_n.push_back(var_t.variance / n);
      var_se_over_n.push_back(var_t.stderr_variance / n);
      const InfluenceReport infl = estimate_influences(config, n);
      infl_sum.push_back(infl.sum);
      infl_max.push_back(infl.max);
      infl_max_se.push_back(infl.max_stderr);
      const DerivativeSumsReport ds = derivative_sums(config, n);
      grad_sum.push_back(ds.gradient_sum);
      bit_sum.push_back(ds.bit_sum);
    }
    detail += "VarT/n:";
    for (double v : var_over_n) detail += " " + fmt(v);
    for (std::size_t i = 1; i < var_over_n.size(); ++i) {
      if (var_over_n[i] >
          var_over_n[i - 1] + 2.0 * (var_se_over_n[i] + var_se_over_n[i - 1])) {
        pass = false;
        detail += " [VarT/n increased]";
      }
    }
    detail += "; influence sum:";
    for (double v : infl_sum) detail += " " + fmt(v);
    for (std::size_t i = 1; i < infl_sum.size(); ++i) {
      if (infl_sum[i] > 2.5 * infl_sum[i - 1]) {
        pass = false;
        detail += " [sum ratio > 2.5]";
      }
    }
    detail += "; influence max:";
    for (double v : infl_max) detail += " " + fmt(v);
    for (std::size_t i = 1; i < infl_max.size(); ++i) {
      if (infl_max[i] > infl_max[i - 1] + 2.0 * (infl_max_se[i] + infl_max_se[i - 1])) {
        pass = false;
        detail += " [max increased]";
      }
    }
    detail += "; grad/bit sums:";
    for (std::size_t i = 0; i < grad_sum.size(); ++i) {
      detail += " " + fmt(grad_sum[i]) + "/" + fmt(bit_sum[i]);
    }
    for (std::size_t i = 1; i < grad_sum.size(); ++i) {
      if (grad_sum[i] > 2.5 * grad_sum[i - 1]) {
        pass = false;
        detail += " [gradient ratio > 2.5]";
      }
      if (bit_sum[i] > 2.5 * bit_sum[i - 1]) {
        pass = false;
        detail += " [bit ratio > 2.5]";
      }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!quick && secs > 1200.0) {
      pass = false;
      detail += " [over 20 min budget]";
    }
    return {pass, detail};
  });

  criterion(9, "window-bias control", [&]() -> std::pair<bool, std::string> {
    ExperimentConfig config = trend_config(workers);
    if (quick) config.replicates = 40;
    const VarianceEstimate base = estimate_variance(config, VarTarget::T_PP, 16.0);
    ExperimentConfig wide = config;
    wide.margin_scale = 2.0;
    const VarianceEstimate doubled = estimate_variance(wide, VarTarget::T_PP, 16.0);
    const double gap = std::abs(base.variance - doubled.variance);
    const double bound = 2.0 * std::sqrt(base.stderr_variance * base.stderr_variance +
                                         doubled.stderr_variance * doubled.stderr_variance);
    return {gap < bound, "Var gap " + fmt(gap) + " vs bound " + fmt(bound) + " (Var " +
                             fmt(base.variance) + " -> " + fmt(doubled.variance) + ")"};
  });

  criterion(10, "lattice animals", [&]() -> std::pair<bool, std::string> {
    const CheckResult exact = check_animals();
    const CheckResult greedy = check_animal_greedy_ratio();
    return {exact.pass && greedy.pass, exact.details + "; " + greedy.details};
  });

  criterion(11, "byte-identical reruns", [&]() -> std::pair<bool, std::string> {
    const std::string dir = "acceptance_out";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir + "/config.txt");
      cfg << "n_values=8\nreplicates=24\nseed=31415\ninfluence_band=1\n"
          << "estimators=variance_t,variance_tpp,influence,equality_rate\n";
    }
    RunOptions opts;
    opts.config_path = dir + "/config.txt";
    opts.out_dir = dir + "/w2a";
    opts.workers_override = 2;
    const RunOutcome a = run_experiment(opts);
    opts.out_dir = dir + "/w2b";
    const RunOutcome b = run_experiment(opts);
    opts.out_dir = dir + "/w1";
    opts.workers_override = 1;
    const RunOutcome c = run_experiment(opts);
    if (!a.ok || !b.ok || !c.ok) return {false, "run_experiment failed"};
    const std::string ca = slurp(a.csv_path);
    const bool pass = !ca.empty() && ca == slurp(b.csv_path) && ca == slurp(c.csv_path);
    return {pass, pass ? "3 runs, identical CSV bytes" : "CSV outputs differ"};
  });

  criterion(12, "verify suite wall clock", [&]() -> std::pair<bool, std::string> {
    VerifyOptions options;
    options.workers = workers;
    options.golden_path = root + "/tests/data/golden_env.txt";
    const auto t0 = Clock::now();
    const auto results = run_verify_suite(options);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    int failed = 0;
    std::string names;
    for (const CheckResult& r : results) {
      if (!r.pass) {
        ++failed;
        names += " " + r.name;
      }
    }
    const bool pass = failed == 0 && secs < 300.0;
    return {pass, std::to_string(results.size()) + " checks in " + fmt(secs) + "s" +
                      (failed ? "; failing:" + names : "")};
  });

  std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
