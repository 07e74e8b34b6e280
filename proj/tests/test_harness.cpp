#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "efpp/experiment.hpp"
#include "efpp/verify.hpp"

using namespace efpp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_config(const std::string& dir, const std::string& body) {
  fs::create_directories(dir);
  const std::string path = dir + "/config.txt";
  std::ofstream out(path);
  out << body;
  return path;
}

const char* kTinyConfig =
    "dim=2\n"
    "alpha=2.0\n"
    "n_values=3\n"
    "replicates=6\n"
    "seed=777\n"
    "workers=2\n"
    "influence_band=1\n"
    "estimators=variance_tpp,equality_rate\n";

}  // namespace

TEST_CASE("config parsing reports every violation") {
  std::vector<std::string> errors;
  parse_config_text(
      "alpha=0.5\n"
      "replicates=1\n"
      "epsilon_k=6\n"
      "bogus_key=1\n"
      "estimators=variance_tpp,nonsense\n",
      errors);
  CHECK(errors.size() >= 5);
  errors.clear();
  const RunPlan good = parse_config_text(kTinyConfig, errors);
  CHECK(errors.empty());
  CHECK(good.config.replicates == 6);
  CHECK(good.estimators.size() == 2);
}

TEST_CASE("config hash distinguishes materially different plans") {
  std::vector<std::string> e1, e2;
  const RunPlan a = parse_config_text(kTinyConfig, e1);
  RunPlan b = parse_config_text(kTinyConfig, e2);
  CHECK(config_hash(a) == config_hash(b));
  b.config.seed = MasterSeed{778};
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("experiment runs are byte-identical across reruns and workers") {
  const std::string dir = "test_out/repro";
  fs::remove_all(dir);
  const std::string config = write_config(dir, kTinyConfig);

  RunOptions opts;
  opts.config_path = config;
  opts.out_dir = dir + "/a";
  const RunOutcome a = run_experiment(opts);
  REQUIRE(a.ok);
  opts.out_dir = dir + "/b";
  const RunOutcome b = run_experiment(opts);
  REQUIRE(b.ok);
  opts.out_dir = dir + "/c";
  opts.workers_override = 1;
  const RunOutcome c = run_experiment(opts);
  REQUIRE(c.ok);

  const std::string csv_a = slurp(a.csv_path);
  CHECK(csv_a == slurp(b.csv_path));
  CHECK(csv_a == slurp(c.csv_path));
  CHECK(csv_a.find("equality_rate") != std::string::npos);
}

TEST_CASE("interrupted runs resume to identical outputs") {
  const std::string dir = "test_out/resume";
  fs::remove_all(dir);
  const std::string config = write_config(dir, kTinyConfig);

  RunOptions full;
  full.config_path = config;
  full.out_dir = dir + "/full";
  const RunOutcome baseline = run_experiment(full);
  REQUIRE(baseline.ok);

  RunOptions part = full;
  part.out_dir = dir + "/partial";
  part.max_work_items = 5;
  const RunOutcome interrupted = run_experiment(part);
  REQUIRE(interrupted.ok);
  CHECK(interrupted.partial);
  CHECK(fs::exists(dir + "/partial/partial.jsonl"));

  RunOptions resume = part;
  resume.max_work_items = -1;
  resume.resume = true;
  const RunOutcome finished = run_experiment(resume);
  REQUIRE(finished.ok);
  CHECK_FALSE(finished.partial);
  CHECK(slurp(finished.csv_path) == slurp(baseline.csv_path));
}

TEST_CASE("invalid config yields structured errors, not output") {
  const std::string dir = "test_out/invalid";
  fs::remove_all(dir);
  const std::string config = write_config(dir, "alpha=0.2\nreplicates=0\n");
  RunOptions opts;
  opts.config_path = config;
  opts.out_dir = dir + "/out";
  const RunOutcome outcome = run_experiment(opts);
  CHECK_FALSE(outcome.ok);
  CHECK(outcome.errors.size() >= 2);
}

TEST_CASE("result CSV round trip and plot emission") {
  const std::string dir = "test_out/plots";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/results.csv", std::ios::binary);
    csv << "n,statistic,value,stderr,count,tags\n";
    csv << "8,var_tpp,12.5,1.25,50,\n";
    csv << "16,var_tpp,20,2,50,\n";
    csv << "8,influence_max,0.5,0.05,50,\n";
  }
  const auto rows = read_result_csv(dir + "/results.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].statistic == "var_tpp");
  CHECK(rows[0].se.has_value());
  CHECK(*rows[1].se == doctest::Approx(2.0));

  const auto files = emit_plots(dir + "/results.csv", dir);
  REQUIRE(files.size() == 2);
  const std::string svg = slurp(files.at(1));  // var_tpp plot
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("c*n/log n") != std::string::npos);
  // Reference curves are anchored: the first polyline point of the data
  // series and both reference curves share coordinates.
  const auto first = svg.find("points='");
  REQUIRE(first != std::string::npos);
  const std::string anchor = svg.substr(first + 8, svg.find(' ', first + 8) - first - 8);
  std::size_t seen = 0;
  for (std::size_t pos = svg.find("points='"); pos != std::string::npos;
       pos = svg.find("points='", pos + 1)) {
    if (svg.compare(pos + 8, anchor.size(), anchor) == 0) ++seen;
  }
  CHECK(seen == 3);
}

TEST_CASE("empty CSV produces no plots but succeeds") {
  const std::string dir = "test_out/empty_plot";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/results.csv", std::ios::binary);
    csv << "n,statistic,value,stderr,count,tags\n";
  }
  CHECK(emit_plots(dir + "/results.csv", dir).empty());
}

TEST_CASE("malformed CSV names the offending row") {
  const std::string dir = "test_out/bad_csv";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir + "/results.csv", std::ios::binary);
    csv << "n,statistic,value,stderr,count,tags\n";
    csv << "8,var_tpp,not_a_number,1,50,\n";
  }
  try {
    emit_plots(dir + "/results.csv", dir);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}
