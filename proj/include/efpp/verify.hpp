#pragma once

#include <functional>
#include <string>
#include <vector>

#include "efpp/geometry.hpp"

namespace efpp {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

struct VerifyOptions {
  int workers = 0;
  std::string golden_path;  // empty: roundtrip-only snapshot check
};

// Deterministic geometry and inequality checks.
CheckResult check_phi_examples();
CheckResult check_phi_inequalities(int triples);
CheckResult check_phi_derivative_fd(int samples);
CheckResult check_w_region_rigid_motion(int samples);
CheckResult check_traverse_oracle(int segments, int dense_segments);
CheckResult check_lemma_w_dimensions_grid();
CheckResult check_lemma_e_regions_threshold();

// Point-process encoding checks.
CheckResult check_poisson_decode(int tapes);
CheckResult check_leading_ones(int tapes);
CheckResult check_environment_sampling();
CheckResult check_thinning();
CheckResult check_flip_monotonicity(int trials);
CheckResult check_resample_distribution(int trials);
CheckResult check_snapshot_roundtrip(const std::string& golden_path);

// Geodesic engine oracles.
CheckResult check_oracle_equivalence(int instances, int workers);
CheckResult check_pruning_soundness(int instances, int workers);
CheckResult check_gradient_fd(int vertices, int workers);
CheckResult check_order_monotonicity(int trials, int workers);
CheckResult check_triangle_inequality(int trials, int workers);
CheckResult check_t_vs_tprime_tails(int replicates, int workers);

// Exact functional inequalities.
CheckResult check_fs_exact(int tables);
CheckResult check_logsobolev(int functions);
CheckResult check_entropy_examples();

// Lattice animals.
CheckResult check_animals();
CheckResult check_animal_greedy_ratio();

// Meta-check: the gradient comparison must flag a broken derivative.
CheckResult check_gradient_check_detects_mutation();

/// Gradient-vs-finite-difference core, parameterized so mutation tests can
/// inject a wrong derivative. Returns the max relative error observed.
double gradient_fd_max_rel_error(int vertices, int workers,
                                 const std::function<double(double, double, double)>& derivative);

std::vector<CheckResult> run_verify_suite(const VerifyOptions& options);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace efpp
