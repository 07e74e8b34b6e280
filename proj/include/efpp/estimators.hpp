#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "efpp/geodesic.hpp"
#include "efpp/point_process.hpp"

namespace efpp {

/// Experiment-wide knobs. The window follows the scale: x in
/// [-m - g, n + m + g], transverse in [-w - g, w + g] with m = max(10, n/4),
/// w = max(10, n/2) and g the averaging-cube radius, unless overridden.
struct ExperimentConfig {
  int dim = 2;
  double alpha = 2.0;
  double h0 = 8.0;
  double h1 = 8.0;
  int epsilon_k = 33;  // epsilon = 1/33
  std::vector<double> n_values{8, 16, 32, 64};
  int replicates = 200;
  MasterSeed seed{12345};
  int workers = 0;  // 0: hardware concurrency
  double influence_band = 2.0;
  double margin_scale = 1.0;  // window-bias studies double this
  double window_margin_x = -1.0;   // <0: automatic
  double window_half_width = -1.0; // <0: automatic

  PhiParams phi(double n) const;
  ThinningSpec thinning(double n) const;
  WindowSpec window(double n) const;
  int gamma_radius(double n) const;             // averaging-cube radius
  std::vector<BoxIndex> gamma_translates(double n) const;
  std::vector<std::string> validate() const;    // empty when valid
};

struct VarianceEstimate {
  double mean = 0.0;
  double variance = 0.0;        // unbiased, (M-1)-denominator
  double stderr_variance = 0.0; // jackknife
  int count = 0;
};

VarianceEstimate summarize_variance(std::span<const double> samples);

enum class VarTarget { T, T_PRIME, T_PP, F_N };

VarianceEstimate estimate_variance(const ExperimentConfig& config, VarTarget target, double n);

struct InfluenceReport {
  std::vector<BoxIndex> boxes;
  std::vector<double> mean_abs_delta;  // E|F~ - F| per box
  std::vector<int> samples;            // per-box replicate counts
  double sum = 0.0;
  double max = 0.0;
  double sum_stderr = 0.0;
  double max_stderr = 0.0;
};

InfluenceReport estimate_influences(const ExperimentConfig& config, double n);

/// Plug-in entropy E[X log X] - E[X] log E[X] with 0 log 0 = 0.
double entropy_plugin(std::span<const double> samples);

/// A finite product space with at most 4 factors of size at most 4 and
/// uniform factor measures; Z is tabulated with the first factor varying
/// fastest.
struct ProductSpace {
  std::vector<int> sizes;

  std::size_t total() const;
};

struct FSReport {
  double variance = 0.0;
  double sum_sq_mean_abs = 0.0;  // sum_i (E|V_i|)^2
  double sum_ent_sq = 0.0;       // sum_i Ent V_i^2
  double lhs = 0.0;              // Var Z * log(Var Z / sum_i (E|V_i|)^2)
  double slack = 0.0;            // sum_ent_sq - lhs
  bool vacuous = false;          // Var Z = 0
};

FSReport fs_check_exact(const ProductSpace& space, const std::vector<double>& z_table);

/// Exact two-sided evaluation of the Bernoulli log-Sobolev inequality on
/// the hypercube {-1, 1}^m under the uniform measure; f is indexed by
/// bitmask with bit i set meaning x_i = +1.
bool logsobolev_hypercube_check(int m, const std::vector<double>& f_table);
double logsobolev_hypercube_slack(int m, const std::vector<double>& f_table);

struct DerivativeSumsReport {
  double gradient_sum = 0.0;      // E sum ||grad_{U} T''||^2
  double gradient_sum_stderr = 0.0;
  double bit_sum = 0.0;           // E sum (Delta_{omega} T'')^2
  double bit_sum_stderr = 0.0;
  int replicates = 0;
};

DerivativeSumsReport derivative_sums(const ExperimentConfig& config, double n);

struct TailReport {
  double n = 0.0;
  double kappa = 0.0;      // min(1, d/alpha)
  double p999 = 0.0;
  double envelope_c1 = 0.0;  // calibrated so that p999 <= c1 * n must hold
  bool within_envelope = false;
  std::vector<double> survival_x;      // sorted sample values
  std::vector<double> survival_logp;   // log empirical survival
};

TailReport tail_fit(std::span<const double> samples, double n, double dim, double alpha,
                    double envelope_c1);

/// Collects T'' samples for one scale.
std::vector<double> sample_tpp(const ExperimentConfig& config, double n, int count);

/// Fraction of replicates with T' = T'' to 1e-9 relative.
double equality_rate(const ExperimentConfig& config, double n);

// Shared worker-pool map: calls fn(i) for i in [0, count) across workers,
// results keyed by index so scheduling never affects output.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace efpp
