#include <doctest.h>

#include <cmath>

#include "efpp/estimators.hpp"
#include "efpp/experiment.hpp"

using namespace efpp;

namespace {

ExperimentConfig tiny_config(double n) {
  ExperimentConfig config;
  config.n_values = {n};
  config.replicates = 12;
  config.seed = MasterSeed{0xE57};
  config.workers = 2;
  config.influence_band = 1.0;
  return config;
}

}  // namespace

TEST_CASE("unbiased sample variance and jackknife") {
  const std::vector<double> two{0.0, 2.0};
  const VarianceEstimate est = summarize_variance(two);
  CHECK(est.mean == doctest::Approx(1.0));
  CHECK(est.variance == doctest::Approx(2.0));
  const std::vector<double> flat{3.0, 3.0, 3.0, 3.0};
  const VarianceEstimate zero = summarize_variance(flat);
  CHECK(zero.variance == 0.0);
  CHECK(zero.stderr_variance == 0.0);
  CHECK_THROWS_AS(summarize_variance(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("config window covers the averaging translates") {
  ExperimentConfig config;
  config.n_values = {8, 16};
  CHECK(config.validate().empty());
  CHECK(config.gamma_radius(8) == 1);
  CHECK(config.gamma_translates(8).size() == 9);
  const WindowSpec win = config.window(8);
  CHECK(win.lo[0] <= -11);
  CHECK(win.hi[0] >= 19);

  ExperimentConfig bad;
  bad.alpha = 0.9;
  bad.replicates = 1;
  bad.epsilon_k = 4;
  const auto errors = bad.validate();
  CHECK(errors.size() >= 3);  // all violations reported at once
}

TEST_CASE("variance estimation is seed-deterministic") {
  const ExperimentConfig config = tiny_config(4.0);
  const VarianceEstimate a = estimate_variance(config, VarTarget::T_PP, 4.0);
  const VarianceEstimate b = estimate_variance(config, VarTarget::T_PP, 4.0);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK(a.stderr_variance == b.stderr_variance);
  ExperimentConfig other = config;
  other.workers = 1;
  const VarianceEstimate c = estimate_variance(other, VarTarget::T_PP, 4.0);
  CHECK(a.mean == c.mean);  // worker count cannot matter
}

TEST_CASE("averaged passage time has no more variance than its pieces") {
  ExperimentConfig config = tiny_config(4.0);
  config.replicates = 40;
  const VarianceEstimate tpp = estimate_variance(config, VarTarget::T_PP, 4.0);
  const VarianceEstimate fn = estimate_variance(config, VarTarget::F_N, 4.0);
  CHECK(fn.variance <=
        tpp.variance + 3.0 * (tpp.stderr_variance + fn.stderr_variance) + 1e-9);
}

TEST_CASE("the averaging identity holds per replicate") {
  const ExperimentConfig config = tiny_config(4.0);
  const auto translates = config.gamma_translates(4.0);
  const double fn = variance_replicate_value(config, VarTarget::F_N, 4.0, 3);
  double acc = 0.0;
  for (const BoxIndex& z : translates) {
    // Each constituent equals a plain T'' between translated endpoints.
    ExperimentConfig c2 = config;
    const double n = 4.0;
    const Environment env = Environment::sample(GridSpec{c2.dim}, c2.window(n), c2.seed, 3);
    const Environment thinned = env.thin(c2.thinning(n));
    EnvironmentView view;
    view.base = &thinned;
    view.phi = c2.phi(n);
    view.cost_mode = CostMode::phi;
    const Point a = make_point(z.c[0], z.c[1]);
    acc += passage_time(view, a, a + make_point(n, 0.0)).passage_time;
  }
  CHECK(fn == doctest::Approx(acc / static_cast<double>(translates.size())).epsilon(1e-12));
}

TEST_CASE("influence of a far box is exactly zero") {
  const ExperimentConfig config = tiny_config(4.0);
  const std::vector<BoxIndex> region{make_box(2, 9)};
  for (int r = 0; r < 4; ++r) {
    const auto row = influence_replicate_row(config, 4.0, r, region);
    REQUIRE(row.size() == 1);
    CHECK(row[0] == 0.0);
  }
}

TEST_CASE("influence report shape and determinism") {
  ExperimentConfig config = tiny_config(3.0);
  config.replicates = 6;
  const InfluenceReport report = estimate_influences(config, 3.0);
  CHECK(report.boxes.size() == report.mean_abs_delta.size());
  CHECK(report.sum >= report.max);
  CHECK(report.max >= 0.0);
  const InfluenceReport again = estimate_influences(config, 3.0);
  CHECK(report.sum == again.sum);
  CHECK(report.max == again.max);
}

TEST_CASE("entropy plug-in") {
  const double e = std::exp(1.0);
  CHECK(entropy_plugin(std::vector<double>{1.0, e}) ==
        doctest::Approx(e / 2 - (1 + e) / 2 * std::log((1 + e) / 2)));
  CHECK(entropy_plugin(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(entropy_plugin(std::vector<double>{2.0, 2.0, 2.0}) == 0.0);
  CHECK_THROWS_AS(entropy_plugin(std::vector<double>{-1.0}), std::invalid_argument);
}

TEST_CASE("Falik-Samorodnitsky exact check on the two-bit sum") {
  const FSReport r = fs_check_exact(ProductSpace{{2, 2}}, {0.0, 1.0, 1.0, 2.0});
  CHECK(r.variance == doctest::Approx(0.5));
  CHECK(r.sum_sq_mean_abs == doctest::Approx(0.5));
  CHECK(r.lhs == doctest::Approx(0.0));
  CHECK(r.sum_ent_sq == doctest::Approx(0.0));
  CHECK(r.slack == doctest::Approx(0.0));
  CHECK_FALSE(r.vacuous);

  const FSReport constant = fs_check_exact(ProductSpace{{2, 2}}, {1.0, 1.0, 1.0, 1.0});
  CHECK(constant.vacuous);

  CHECK_THROWS_AS(fs_check_exact(ProductSpace{{2, 2}}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fs_check_exact(ProductSpace{{5}}, {1, 2, 3, 4, 5}), std::invalid_argument);
}

TEST_CASE("log-Sobolev on the hypercube") {
  CHECK(logsobolev_hypercube_check(1, {-1.0, 1.0}));
  CHECK(logsobolev_hypercube_slack(1, {-1.0, 1.0}) == doctest::Approx(4.0));
  CHECK(logsobolev_hypercube_check(2, {0.5, 0.5, 0.5, 0.5}));
  CHECK_THROWS_AS(logsobolev_hypercube_check(13, std::vector<double>(1 << 13, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(logsobolev_hypercube_check(2, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("tail fit: kappa rule, calibration, degenerate samples") {
  std::vector<double> flat(1000, 5.0);
  const TailReport degenerate = tail_fit(flat, 8.0, 2.0, 1.5, 10.0);
  CHECK(degenerate.kappa == doctest::Approx(1.0));  // min(1, 2/1.5)
  CHECK(degenerate.within_envelope);
  const TailReport high_alpha = tail_fit(flat, 8.0, 2.0, 3.0, 0.0);
  CHECK(high_alpha.kappa == doctest::Approx(2.0 / 3.0));
  CHECK(high_alpha.envelope_c1 == doctest::Approx(5.0 / 8.0));
  CHECK_THROWS_AS(tail_fit(std::vector<double>(10, 1.0), 8.0, 2.0, 2.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("equality rate is one when linearization cannot bite") {
  // Tiny scale: h_n is far above every segment and thinning is far below
  // interpoint distances, so T' and T'' coincide.
  ExperimentConfig config = tiny_config(3.0);
  config.h0 = 64.0;
  config.h1 = 64.0;
  config.replicates = 20;
  CHECK(equality_rate(config, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("derivative sums are nonnegative and deterministic") {
  ExperimentConfig config = tiny_config(3.0);
  config.replicates = 6;
  const DerivativeSumsReport a = derivative_sums(config, 3.0);
  const DerivativeSumsReport b = derivative_sums(config, 3.0);
  CHECK(a.gradient_sum >= 0.0);
  CHECK(a.bit_sum >= 0.0);
  CHECK(a.gradient_sum == b.gradient_sum);
  CHECK(a.bit_sum == b.bit_sum);
}
