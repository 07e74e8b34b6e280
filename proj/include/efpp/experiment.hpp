#pragma once

#include <optional>
#include <string>
#include <vector>

#include "efpp/estimators.hpp"

namespace efpp {

inline constexpr const char* kCodeVersion = "efpp 0.1.0";

/// One output record: a statistic at one scale. Monte Carlo statistics
/// carry a standard error; exact checks leave it absent.
struct ResultRow {
  double n = 0.0;
  std::string statistic;
  double value = 0.0;
  std::optional<double> se;
  int count = 0;
  std::string tags;
};

enum class EstimatorKind {
  variance_t,
  variance_tprime,
  variance_tpp,
  variance_fn,
  influence,
  derivative_sums,
  equality_rate,
  tails,
};

const char* estimator_name(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_name(const std::string& name);

struct RunPlan {
  ExperimentConfig config;
  std::vector<EstimatorKind> estimators;
  int tail_samples = 1000;
};

/// Parses the flat key=value config format. Collects every violation
/// instead of stopping at the first.
RunPlan parse_config_text(const std::string& text, std::vector<std::string>& errors);
RunPlan parse_config_file(const std::string& path, std::vector<std::string>& errors);

std::uint64_t config_hash(const RunPlan& plan);

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  int workers_override = -1;  // < 0: take the config value
  bool resume = false;
  int max_work_items = -1;  // test hook: abort after this many items
};

struct RunOutcome {
  bool ok = false;
  bool partial = false;  // interrupted by max_work_items
  std::vector<std::string> errors;
  std::string csv_path;
  std::string jsonl_path;
  std::string manifest_path;
  std::vector<ResultRow> rows;
};

RunOutcome run_experiment(const RunOptions& options);

// Per-replicate kernels shared by the aggregate estimators and the
// resumable scheduler.
double variance_replicate_value(const ExperimentConfig& config, VarTarget target, double n,
                                int replicate);
std::vector<double> influence_replicate_row(const ExperimentConfig& config, double n,
                                            int replicate, const std::vector<BoxIndex>& region);
std::vector<BoxIndex> influence_region_boxes(const ExperimentConfig& config, double n);
std::pair<double, double> derivative_sums_replicate(const ExperimentConfig& config, double n,
                                                    int replicate);
bool equality_replicate(const ExperimentConfig& config, double n, int replicate);
double tpp_replicate_value(const ExperimentConfig& config, double n, int replicate);

std::string format_double(double v);
std::vector<ResultRow> read_result_csv(const std::string& path);

/// Emits self-contained SVG plots from a results CSV. Returns the written
/// file names; an empty CSV produces none.
std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir);

}  // namespace efpp
