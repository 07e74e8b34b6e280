#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "efpp/animals.hpp"
#include "efpp/experiment.hpp"
#include "efpp/geodesic.hpp"
#include "efpp/verify.hpp"

namespace {

using namespace efpp;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "path to a key=value config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "master seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--workers", args.workers, "worker thread count");
  cmd->add_flag("--resume", args.resume, "resume from a partial run");
}

RunOptions to_run_options(const CommonArgs& args) {
  RunOptions opts;
  opts.config_path = args.config_path;
  opts.out_dir = args.out_dir;
  if (args.seed_set) opts.seed_override = args.seed;
  opts.workers_override = args.workers;
  opts.resume = args.resume;
  return opts;
}

int run_with_estimators(const CommonArgs& args, const std::string& default_estimators) {
  RunOptions opts = to_run_options(args);
  if (opts.config_path.empty()) {
    // Build a temporary config with the defaults plus the estimator choice.
    const std::string path = args.out_dir + "/generated_config.txt";
    std::filesystem::create_directories(args.out_dir);
    std::ofstream out(path);
    out << "estimators=" << default_estimators << "\n";
    out.close();
    opts.config_path = path;
  }
  const RunOutcome outcome = run_experiment(opts);
  if (!outcome.errors.empty()) {
    std::cerr << "invalid configuration:\n";
    for (const auto& e : outcome.errors) std::cerr << "  - " << e << "\n";
    return 2;
  }
  if (outcome.partial) {
    std::cout << "partial run recorded; resume with --resume\n";
    return 0;
  }
  std::cout << "wrote " << outcome.csv_path << " (" << outcome.rows.size() << " rows)\n";
  return 0;
}

ExperimentConfig config_or_defaults(const CommonArgs& args, std::vector<std::string>& errors) {
  if (args.config_path.empty()) {
    ExperimentConfig config;
    if (args.seed_set) config.seed = MasterSeed{args.seed};
    if (args.workers >= 0) config.workers = args.workers;
    return config;
  }
  RunPlan plan = parse_config_file(args.config_path, errors);
  if (args.seed_set) plan.config.seed = MasterSeed{args.seed};
  if (args.workers >= 0) plan.config.workers = args.workers;
  return plan.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean first-passage percolation laboratory"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* sample = app.add_subcommand("sample", "dump an environment snapshot");
  double sample_n = 8.0;
  std::uint32_t sample_replicate = 0;
  sample->add_option("--n", sample_n, "scale (controls the window)");
  sample->add_option("--replicate", sample_replicate, "replicate index");
  add_common(sample, args);

  auto* geodesic = app.add_subcommand("geodesic", "solve one instance and print the path");
  double geo_n = 8.0;
  std::uint32_t geo_replicate = 0;
  std::string geo_kind = "tpp";
  geodesic->add_option("--n", geo_n, "scale");
  geodesic->add_option("--replicate", geo_replicate, "replicate index");
  geodesic->add_option("--kind", geo_kind, "t, tprime, or tpp");
  add_common(geodesic, args);

  auto* variance = app.add_subcommand("variance", "variance estimators over the n grid");
  add_common(variance, args);
  auto* influence = app.add_subcommand("influence", "box-resampling influence estimates");
  add_common(influence, args);
  auto* run = app.add_subcommand("run", "run every estimator selected in the config");
  add_common(run, args);
  auto* animals = app.add_subcommand("animals", "greedy lattice-animal growth table");
  int animals_m = 64;
  animals->add_option("--m", animals_m, "largest animal size");
  add_common(animals, args);
  auto* verify = app.add_subcommand("verify", "run the verification suite");
  add_common(verify, args);
  auto* plot = app.add_subcommand("plot", "emit SVG plots from a results CSV");
  std::string plot_csv = "out/results.csv";
  plot->add_option("--csv", plot_csv, "results CSV path");
  add_common(plot, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sample)) {
      std::vector<std::string> errors;
      const ExperimentConfig config = config_or_defaults(args, errors);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        return 2;
      }
      const Environment env = Environment::sample(GridSpec{config.dim}, config.window(sample_n),
                                                  config.seed, sample_replicate);
      env.export_snapshot(std::cout);
      return 0;
    }
    if (app.got_subcommand(geodesic)) {
      std::vector<std::string> errors;
      const ExperimentConfig config = config_or_defaults(args, errors);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        return 2;
      }
      const Environment env = Environment::sample(GridSpec{config.dim}, config.window(geo_n),
                                                  config.seed, geo_replicate);
      const PhiParams params = config.phi(geo_n);
      const Point a = make_point(0, 0), b = make_point(geo_n, 0);
      Environment thinned = env;
      EnvironmentView view;
      view.phi = params;
      if (geo_kind == "t") {
        view.base = &env;
        view.cost_mode = CostMode::euclid_power;
      } else if (geo_kind == "tprime") {
        view.base = &env;
        view.cost_mode = CostMode::euclid_power;
        view.extra_endpoints = {a, b};
      } else if (geo_kind == "tpp") {
        thinned = env.thin(config.thinning(geo_n));
        view.base = &thinned;
        view.cost_mode = CostMode::phi;
      } else {
        std::cerr << "unknown kind '" << geo_kind << "'\n";
        return 2;
      }
      const PathResult path = passage_time(view, a, b);
      const GeodesicStats stats = geodesic_stats(view, path);
      std::printf("passage_time %.17g\n", path.passage_time);
      std::printf("l_max %.17g\n", path.l_max);
      std::printf("vertices %zu boxes_touched %zu boxes_used %zu\n", path.vertices.size(),
                  stats.boxes_touched.size(), stats.boxes_used.size());
      for (const Point& v : path.vertices) {
        std::printf("  %.17g %.17g\n", v.c[0], v.c[1]);
      }
      return 0;
    }
    if (app.got_subcommand(variance)) {
      return run_with_estimators(args, "variance_t,variance_tprime,variance_tpp,variance_fn");
    }
    if (app.got_subcommand(influence)) {
      return run_with_estimators(args, "influence");
    }
    if (app.got_subcommand(run)) {
      if (args.config_path.empty()) {
        std::cerr << "run: --config is required\n";
        return 2;
      }
      return run_with_estimators(args, "");
    }
    if (app.got_subcommand(animals)) {
      std::vector<std::string> errors;
      const ExperimentConfig config = config_or_defaults(args, errors);
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
        return 2;
      }
      std::printf("m greedy_value greedy_per_box\n");
      for (int m = 4; m <= animals_m; m *= 2) {
        const AnimalWeights weights = [&config](const BoxIndex& b) {
          return static_cast<double>(sample_box_tape(config.seed, 0, b, config.dim).count);
        };
        const auto [value, animal] = animal_max_greedy(weights, m, config.dim);
        std::printf("%d %.17g %.17g\n", m, value, value / m);
      }
      return 0;
    }
    if (app.got_subcommand(verify)) {
      VerifyOptions options;
      if (args.workers >= 0) options.workers = args.workers;
      const auto results = run_verify_suite(options);
      for (const CheckResult& r : results) {
        std::printf("[%s] %-28s %6.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.seconds, r.details.c_str());
      }
      const bool ok = all_passed(results);
      std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "FAILURES PRESENT");
      return ok ? 0 : 1;
    }
    if (app.got_subcommand(plot)) {
      const auto written = emit_plots(plot_csv, args.out_dir);
      for (const auto& f : written) std::cout << "wrote " << f << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
