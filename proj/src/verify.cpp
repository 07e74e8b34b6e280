#include "efpp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "efpp/animals.hpp"
#include "efpp/estimators.hpp"
#include "efpp/geodesic.hpp"
#include "efpp/point_process.hpp"
#include "efpp/rng.hpp"

namespace efpp {
namespace {

constexpr double kChi2Df7P999 = 24.321886347856854;  // 0.999 quantile, 7 dof

using Clock = std::chrono::steady_clock;

CheckResult timed(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
  CheckResult result;
  result.name = name;
  const auto t0 = Clock::now();
  try {
    auto [pass, details] = fn();
    result.pass = pass;
    result.details = std::move(details);
  } catch (const std::exception& e) {
    result.pass = false;
    result.details = std::string("exception: ") + e.what();
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double uniform(std::uint64_t key, std::uint64_t& ctr, double lo, double hi) {
  return lo + (hi - lo) * counter_unit(key, ctr++);
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

double poisson1_pmf(int k) {
  double t = std::exp(-1.0);
  for (int i = 1; i <= k; ++i) t /= i;
  return t;
}

}  // namespace

CheckResult check_phi_examples() {
  return timed("phi_examples", []() -> std::pair<bool, std::string> {
    int bad = 0;
    std::string what;
    auto expect = [&](bool ok, const std::string& label) {
      if (!ok) {
        ++bad;
        if (!what.empty()) what += "; ";
        what += label;
      }
    };
    const PhiParams p24 = PhiParams::make(2.0, 4.0, 4.0, 0.0);
    expect(p24.h_n == 4.0, "h_n derivation");
    expect(phi_cost(p24, 2.0) == 4.0, "phi below cutoff");
    expect(phi_cost(p24, 4.0) == 16.0, "phi continuity at cutoff");
    expect(phi_cost(p24, 6.0) == 32.0, "phi linear branch");
    expect(phi_cost(p24, 0.0) == 0.0, "phi at zero");
    expect(phi_derivative(p24, 3.0) == 6.0, "derivative below cutoff");
    expect(phi_derivative(p24, 10.0) == 8.0, "derivative above cutoff");
    const PhiParams p31 = PhiParams::make(3.0, 1.0, 1.0, 0.0);
    expect(phi_derivative(p31, 1.0) == 3.0, "derivative at the kink");
    bool threw = false;
    try {
      phi_cost(p24, -1.0);
    } catch (const std::domain_error&) {
      threw = true;
    }
    expect(threw, "negative length rejected");

    const PhiParams big = PhiParams::make(2.0, 1000.0, 1000.0, 0.0);
    const Point a = make_point(0, 0), b = make_point(4, 0);
    expect(w_region_contains(big, a, b, make_point(2, 0)), "w-region midpoint");
    expect(w_region_contains(big, a, b, make_point(2, 2)), "w-region boundary case");
    expect(!w_region_contains(big, a, b, make_point(0, 1)), "w-region outside");

    expect(check_lemma_e_regions(big, 0.0, 10.0), "e-regions on-segment point");
    expect(check_lemma_e_regions(big, 1.0, 1000.0), "e-regions large k");
    expect(!check_lemma_e_regions(big, 2.0, 3.0), "e-regions small k");
    expect(check_lemma_w_dimensions(big, 2.0, 0.1), "w-dimensions small c");
    expect(!check_lemma_w_dimensions(big, 2.0, 10.0), "w-dimensions large c");
    expect(check_lemma_w_dimensions(big, 2.0, 0.0), "w-dimensions degenerate c");

    GridSpec grid{2};
    const auto walk = traverse_segment(grid, make_point(0, 0), make_point(2, 0));
    expect(walk.size() == 3 && walk[0] == make_box(0, 0) && walk[2] == make_box(2, 0),
           "axis traversal");
    const auto degenerate = traverse_segment(grid, make_point(0.1, 0.1), make_point(0.1, 0.1));
    expect(degenerate.size() == 1 && degenerate[0] == make_box(0, 0), "degenerate traversal");
    const auto corner = traverse_segment(grid, make_point(0, 0), make_point(1, 1));
    expect(corner.size() == 3, "corner tie rule");
    return {bad == 0, bad ? what : "all examples hold"};
  });
}

CheckResult check_phi_inequalities(int triples) {
  return timed("phi_inequalities", [triples]() -> std::pair<bool, std::string> {
    std::uint64_t ctr = 0;
    const double alphas[3] = {1.5, 2.0, 3.0};
    const double hs[3] = {1.0, 8.0, 64.0};
    const double ns[3] = {0.0, 1.0, 16.0};
    int bad1 = 0, bad2 = 0;
    for (int i = 0; i < triples; ++i) {
      const PhiParams p = PhiParams::make(alphas[i % 3], hs[(i / 3) % 3], hs[(i / 3) % 3],
                                          ns[(i / 9) % 3]);
      Point a, b, c;
      for (int j = 0; j < 2; ++j) {
        a.c[j] = uniform(0xAB12, ctr, -50, 50);
        b.c[j] = uniform(0xAB12, ctr, -50, 50);
        c.c[j] = uniform(0xAB12, ctr, -50, 50);
      }
      const double pac = phi_cost(p, dist(a, c));
      const double pab = phi_cost(p, dist(a, b));
      const double pbc = phi_cost(p, dist(b, c));
      const double factor = std::pow(2.0, 2.0 * p.alpha);
      if (pac * pac > factor * (pab * pab + pbc * pbc)) ++bad1;
      if (pac - pab - pbc > std::pow(2.0, p.alpha) * std::pow(p.h_n, p.alpha)) ++bad2;
    }
    return {bad1 == 0 && bad2 == 0,
            "part1 violations " + std::to_string(bad1) + ", part2 violations " +
                std::to_string(bad2) + " of " + std::to_string(triples)};
  });
}

CheckResult check_phi_derivative_fd(int samples) {
  return timed("phi_derivative_fd", [samples]() -> std::pair<bool, std::string> {
    std::uint64_t ctr = 0;
    double worst = 0.0;
    const double alphas[3] = {1.5, 2.0, 3.0};
    for (int i = 0; i < samples; ++i) {
      const PhiParams p = PhiParams::make(alphas[i % 3], 4.0, 8.0, (i % 5) * 3.0);
      double t = uniform(0x5EED01, ctr, 0.05, 3.0 * p.h_n);
      if (std::abs(t - p.h_n) < 0.01) t += 0.02;
      const double delta = 1e-6 * std::max(1.0, t);
      const double fd = (phi_cost(p, t + delta) - phi_cost(p, t - delta)) / (2.0 * delta);
      const double an = phi_derivative(p, t);
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    }
    return {worst <= 1e-8, "max relative error " + fmt(worst)};
  });
}

CheckResult check_w_region_rigid_motion(int samples) {
  return timed("w_region_rigid_motion", [samples]() -> std::pair<bool, std::string> {
    std::uint64_t ctr = 0;
    int disagreements = 0;
    for (int i = 0; i < samples; ++i) {
      const PhiParams p = PhiParams::make(2.0 + (i % 3) * 0.5, 4.0, 4.0, (i % 4) * 2.0);
      Point pts[3];
      for (auto& q : pts) {
        q = make_point(uniform(0x5EED02, ctr, -10, 10), uniform(0x5EED02, ctr, -10, 10));
      }
      const double theta = uniform(0x5EED02, ctr, 0, 6.283185307179586);
      const Point shift = make_point(uniform(0x5EED02, ctr, -20, 20),
                                     uniform(0x5EED02, ctr, -20, 20));
      auto moved = [&](const Point& q) {
        return make_point(q.c[0] * std::cos(theta) - q.c[1] * std::sin(theta) + shift.c[0],
                          q.c[0] * std::sin(theta) + q.c[1] * std::cos(theta) + shift.c[1]);
      };
      const bool before = w_region_contains(p, pts[0], pts[1], pts[2]);
      const bool after = w_region_contains(p, moved(pts[0]), moved(pts[1]), moved(pts[2]));
      if (before != after) {
        // Tolerated only within floating tolerance of the boundary.
        const double slack = phi_cost(p, dist(pts[0], pts[1])) -
                             phi_cost(p, dist(pts[0], pts[2])) -
                             phi_cost(p, dist(pts[2], pts[1]));
        const double scale = std::max(1.0, phi_cost(p, dist(pts[0], pts[1])));
        if (std::abs(slack) > 1e-12 * scale) ++disagreements;
      }
    }
    return {disagreements == 0,
            std::to_string(disagreements) + " rigid-motion disagreements of " +
                std::to_string(samples)};
  });
}

CheckResult check_traverse_oracle(int segments, int dense_segments) {
  return timed("traverse_oracle", [=]() -> std::pair<bool, std::string> {
    GridSpec grid{2};
    std::uint64_t ctr = 0;
    int bad = 0;
    for (int i = 0; i < segments; ++i) {
      const Point p = make_point(uniform(0x5EED03, ctr, -20, 20),
                                 uniform(0x5EED03, ctr, -20, 20));
      const Point q = make_point(p.c[0] + uniform(0x5EED03, ctr, -6, 6),
                                 p.c[1] + uniform(0x5EED03, ctr, -6, 6));
      const auto boxes = traverse_segment(grid, p, q);
      // Crossing-count identity for segments missing all corners (a.s.).
      const BoxIndex bp = grid.box_of(p), bq = grid.box_of(q);
      const std::size_t expected = 1 + std::abs(bq.c[0] - bp.c[0]) + std::abs(bq.c[1] - bp.c[1]);
      bool ok = boxes.size() == expected && boxes.front() == bp && boxes.back() == bq;
      for (std::size_t j = 0; ok && j + 1 < boxes.size(); ++j) {
        const int d0 = std::abs(boxes[j + 1].c[0] - boxes[j].c[0]);
        const int d1 = std::abs(boxes[j + 1].c[1] - boxes[j].c[1]);
        ok = (d0 + d1 == 1);
      }
      if (!ok) ++bad;
      // Dense-sampling oracle with refinement on the first few segments.
      if (i < dense_segments) {
        std::set<std::pair<int, int>> seen;
        for (long k_samples = 4096; k_samples <= (1 << 22); k_samples *= 16) {
          seen.clear();
          for (long s = 0; s <= k_samples; ++s) {
            const double t = static_cast<double>(s) / static_cast<double>(k_samples);
            const BoxIndex b = grid.box_of(p + t * (q - p));
            seen.insert({b.c[0], b.c[1]});
          }
          if (seen.size() == boxes.size()) break;
        }
        if (seen.size() != boxes.size()) ++bad;
      }
    }
    return {bad == 0, std::to_string(bad) + " traversal mismatches of " +
                          std::to_string(segments)};
  });
}

CheckResult check_lemma_w_dimensions_grid() {
  return timed("lemma_w_dimensions", []() -> std::pair<bool, std::string> {
    int bad = 0;
    int total = 0;
    for (double alpha : {1.5, 2.0, 3.0}) {
      for (double n : {0.0, 1.0, 4.0, 64.0, 1024.0}) {
        const PhiParams p = PhiParams::make(alpha, 8.0, 8.0, n);
        for (double ell = 0.5; ell <= 1024.0; ell *= 2.0) {
          ++total;
          if (!check_lemma_w_dimensions(p, ell, 0.05)) ++bad;
        }
      }
    }
    return {bad == 0, std::to_string(bad) + " failures of " + std::to_string(total) +
                          " (c = 0.05)"};
  });
}

CheckResult check_lemma_e_regions_threshold() {
  return timed("lemma_e_regions", []() -> std::pair<bool, std::string> {
    std::vector<double> ks;
    for (double k = 2.1; k <= 32.0; k += 0.1) ks.push_back(k);
    for (double k : {40.0, 64.0, 128.0, 256.0, 512.0, 900.0}) ks.push_back(k);
    int bad = 0;
    std::string detail;
    for (double alpha : {1.5, 2.0, 3.0}) {
      const PhiParams p = PhiParams::make(alpha, 1000.0, 1000.0, 0.0);
      for (double E : {1.0, 2.0, 4.0}) {
        int first_true = -1;
        bool monotone = true;
        for (std::size_t i = 0; i < ks.size(); ++i) {
          const bool in = check_lemma_e_regions(p, E, ks[i]);
          if (in && first_true < 0) first_true = static_cast<int>(i);
          if (!in && first_true >= 0) monotone = false;
        }
        if (first_true < 0 || !monotone) {
          ++bad;
        } else if (detail.size() < 120) {
          detail += "a=" + fmt(alpha) + ",E=" + fmt(E) + ":k*=" + fmt(ks[static_cast<std::size_t>(first_true)]) + " ";
        }
      }
    }
    return {bad == 0, bad ? std::to_string(bad) + " (alpha, E) cells not eventually-true"
                          : "thresholds: " + detail};
  });
}

CheckResult check_poisson_decode(int tapes) {
  return timed("poisson_decode_chi2", [tapes]() -> std::pair<bool, std::string> {
    // Worked inverse-CDF examples.
    if (decode_poisson_count({0, 0}) != 0) return {false, "all-zero tape should decode to 0"};
    if (decode_poisson_count({1, 0, 0}) != 1) return {false, "tape 100 should decode to 1"};
    if (decode_poisson_count({1, 1, 1, 0, 0}) != 2) return {false, "tape 11100 should decode to 2"};
    std::array<long, 8> observed{};
    const MasterSeed seed{0xDECADE01};
    for (int i = 0; i < tapes; ++i) {
      const BoxTape tape = sample_box_tape(seed, static_cast<std::uint32_t>(i), make_box(0, 0), 2);
      ++observed[static_cast<std::size_t>(std::min(tape.count, 7))];
    }
    double chi2 = 0.0;
    for (int k = 0; k < 8; ++k) {
      double pk;
      if (k < 7) {
        pk = poisson1_pmf(k);
      } else {
        pk = 1.0;
        for (int j = 0; j < 7; ++j) pk -= poisson1_pmf(j);
      }
      const double expected = pk * tapes;
      const double diff = observed[static_cast<std::size_t>(k)] - expected;
      chi2 += diff * diff / expected;
    }
    return {chi2 <= kChi2Df7P999,
            "chi2 = " + fmt(chi2) + " (critical " + fmt(kChi2Df7P999) + ")"};
  });
}

CheckResult check_leading_ones(int tapes) {
  return timed("leading_ones_mean", [tapes]() -> std::pair<bool, std::string> {
    BoxTape zero;
    zero.bits = {0, 1, 1};
    zero.has_stream = false;
    if (leading_ones(zero) != 0) return {false, "tape 011 should have run 0"};
    BoxTape two;
    two.bits = {1, 1, 0};
    two.has_stream = false;
    if (leading_ones(two) != 2) return {false, "tape 110 should have run 2"};
    const MasterSeed seed{0xDECADE02};
    double acc = 0.0;
    for (int i = 0; i < tapes; ++i) {
      const BoxTape tape = sample_box_tape(seed, static_cast<std::uint32_t>(i), make_box(0, 0), 2);
      acc += leading_ones(tape);
    }
    const double mean = acc / tapes;
    const double bound = 3.0 * std::sqrt(2.0 / tapes);  // geometric(1/2) variance is 2
    return {std::abs(mean - 1.0) <= bound,
            "mean " + fmt(mean) + " (3-sigma window " + fmt(bound) + ")"};
  });
}

CheckResult check_environment_sampling() {
  return timed("environment_sampling", []() -> std::pair<bool, std::string> {
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {0, 0, 0};
    win.hi = {19, 19, 0};
    const MasterSeed seed{0xDECADE03};
    const int reps = 1000;
    double total = 0.0;
    double c1 = 0.0, c2 = 0.0, c12 = 0.0;
    for (int r = 0; r < reps; ++r) {
      const Environment env = Environment::sample(grid, win, seed, static_cast<std::uint32_t>(r));
      total += static_cast<double>(env.total_points());
      const double a = env.count(make_box(3, 4));
      const double b = env.count(make_box(15, 11));
      c1 += a;
      c2 += b;
      c12 += a * b;
    }
    const double mean = total / reps;
    const double se = 3.0 * std::sqrt(400.0 / reps);
    if (std::abs(mean - 400.0) > se) {
      return {false, "mean points " + fmt(mean) + " outside 400 +- " + fmt(se)};
    }
    const double cov = c12 / reps - (c1 / reps) * (c2 / reps);
    if (std::abs(cov) > 3.0 / std::sqrt(static_cast<double>(reps))) {
      return {false, "box-count covariance " + fmt(cov) + " beyond 3 sigma"};
    }
    const Environment e1 = Environment::sample(grid, win, seed, 7);
    const Environment e2 = Environment::sample(grid, win, seed, 7);
    std::ostringstream s1, s2;
    e1.export_snapshot(s1);
    e2.export_snapshot(s2);
    if (s1.str() != s2.str()) return {false, "same (seed, replicate) produced different environments"};
    return {true, "mean " + fmt(mean) + ", covariance " + fmt(cov)};
  });
}

CheckResult check_thinning() {
  return timed("thinning", []() -> std::pair<bool, std::string> {
    // Two points in one cell: only the left-most survives.
    std::istringstream snap(
        "efpp-env 1 2 0 0 0 0 0 0 none\n"
        "box 0 0 0 110 2 0.1,0.5,0 0.2,0.6,0\n");
    const Environment env = Environment::import_snapshot(snap);
    const ThinningSpec coarse = ThinningSpec::make(1, 0.0);  // cell side 1
    const Environment thinned = env.thin(coarse);
    const auto kept = thinned.box_points(make_box(0, 0));
    if (kept.size() != 1 || !(kept[0] == make_point(-0.4, 0.0))) {
      return {false, "left-most survivor rule failed"};
    }
    // Idempotence and identity at default cell sizes on random environments.
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {-3, -3, 0};
    win.hi = {3, 3, 0};
    const MasterSeed seed{0xDECADE04};
    for (int r = 0; r < 50; ++r) {
      const Environment e = Environment::sample(grid, win, seed, static_cast<std::uint32_t>(r));
      const ThinningSpec spec = ThinningSpec::make(33, 8.0);
      const Environment once = e.thin(spec);
      const Environment twice = once.thin(spec);
      for (std::int64_t f = 0; f < win.box_count(2); ++f) {
        const BoxIndex b = win.box_at(f, 2);
        const auto p1 = once.box_points(b);
        const auto p2 = twice.box_points(b);
        const auto p0 = e.box_points(b);
        if (p1.size() != p2.size()) return {false, "thinning not idempotent"};
        for (std::size_t i = 0; i < p1.size(); ++i) {
          if (!(p1[i] == p2[i])) return {false, "thinning not idempotent"};
        }
        // Default cells are far below minimal pairwise distances.
        if (p0.size() != p1.size()) return {false, "desk-scale thinning should be the identity"};
      }
    }
    return {true, "survivor rule, idempotence, identity"};
  });
}

CheckResult check_flip_monotonicity(int trials) {
  return timed("flip_monotonicity", [trials]() -> std::pair<bool, std::string> {
    // Worked example: tape 01 decodes to 0; setting bit 1 gives 11 -> 2.
    {
      std::istringstream snap(
          "efpp-env 1 2 0 0 0 0 0 0 none\n"
          "box 0 0 0 010 0\n");
      Environment env = Environment::import_snapshot(snap);
      if (env.count(make_box(0, 0)) != 0) return {false, "tape 01 should decode to 0"};
      bool threw = false;
      try {
        env.flip_bit(make_box(0, 0), 1, 1);  // frozen tape cannot realize new uniforms
      } catch (const std::runtime_error&) {
        threw = true;
      }
      if (!threw) return {false, "frozen tape extension should be rejected"};
    }
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {0, 0, 0};
    win.hi = {0, 0, 0};
    const MasterSeed seed{0xDECADE05};
    std::uint64_t ctr = 0;
    for (int i = 0; i < trials; ++i) {
      const Environment env = Environment::sample(grid, win, seed, static_cast<std::uint32_t>(i));
      const BoxTape& tape = env.tape(make_box(0, 0));
      const int j = 1 + static_cast<int>(uniform(0x5EED06, ctr, 0, tape.stable_len));
      const Environment up = env.flip_bit(make_box(0, 0), j, 1);
      if (up.count(make_box(0, 0)) < env.count(make_box(0, 0))) {
        return {false, "setting a bit decreased the decoded count"};
      }
      const int cur = tape.bits[static_cast<std::size_t>(j - 1)];
      const Environment same = env.flip_bit(make_box(0, 0), j, cur);
      if (same.count(make_box(0, 0)) != env.count(make_box(0, 0))) {
        return {false, "flip to the current value changed the count"};
      }
      // Uniforms are shared, so points are added or removed at the tail only.
      const auto before = env.box_points(make_box(0, 0));
      const auto after = up.box_points(make_box(0, 0));
      for (std::size_t k = 0; k < std::min(before.size(), after.size()); ++k) {
        if (!(before[k] == after[k])) return {false, "flip disturbed existing point locations"};
      }
    }
    {
      // Example from the inverse-CDF table: 01 -> 0 becomes 11 -> 2.
      std::istringstream snap(
          "efpp-env 1 2 0 0 0 0 0 0 none\n"
          "box 0 0 0 11 2 0.5,0.5,0 0.25,0.75,0\n");
      Environment env = Environment::import_snapshot(snap);
      if (env.count(make_box(0, 0)) != 2) return {false, "tape 11 should decode to 2"};
    }
    return {true, std::to_string(trials) + " flips monotone"};
  });
}

CheckResult check_resample_distribution(int trials) {
  return timed("resample_distribution", [trials]() -> std::pair<bool, std::string> {
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {0, 0, 0};
    win.hi = {1, 0, 0};
    const MasterSeed seed{0xDECADE06};
    const Environment env = Environment::sample(grid, win, seed, 0);
    std::array<long, 8> observed{};
    for (int i = 0; i < trials; ++i) {
      const BoxTape tape = sample_box_tape(seed.derive(static_cast<std::uint64_t>(i) + 10), 0,
                                           make_box(0, 0), 2);
      ++observed[static_cast<std::size_t>(std::min(tape.count, 7))];
    }
    double chi2 = 0.0;
    for (int k = 0; k < 8; ++k) {
      double pk;
      if (k < 7) {
        pk = poisson1_pmf(k);
      } else {
        pk = 1.0;
        for (int j = 0; j < 7; ++j) pk -= poisson1_pmf(j);
      }
      const double expected = pk * trials;
      const double diff = observed[static_cast<std::size_t>(k)] - expected;
      chi2 += diff * diff / expected;
    }
    if (chi2 > kChi2Df7P999) {
      return {false, "resampled counts chi2 = " + fmt(chi2)};
    }
    // Locality: the untouched box is bit-identical after a resample.
    const Environment r1 = env.resample_box(make_box(0, 0), seed, 42);
    if (r1.tape(make_box(1, 0)).bits != env.tape(make_box(1, 0)).bits) {
      return {false, "resample touched another box"};
    }
    // Tag independence: counts from different tags are uncorrelated.
    const int pairs = 4000;
    double a1 = 0, a2 = 0, a12 = 0;
    for (int i = 0; i < pairs; ++i) {
      const int ca =
          sample_box_tape(seed.derive(2 * static_cast<std::uint64_t>(i) + 1), 0, make_box(0, 0), 2)
              .count;
      const int cb =
          sample_box_tape(seed.derive(2 * static_cast<std::uint64_t>(i) + 2), 0, make_box(0, 0), 2)
              .count;
      a1 += ca;
      a2 += cb;
      a12 += static_cast<double>(ca) * cb;
    }
    const double cov = a12 / pairs - (a1 / pairs) * (a2 / pairs);
    if (std::abs(cov) > 3.0 / std::sqrt(static_cast<double>(pairs))) {
      return {false, "tagged resample covariance " + fmt(cov)};
    }
    return {true, "chi2 = " + fmt(chi2) + ", tag covariance " + fmt(cov)};
  });
}

CheckResult check_snapshot_roundtrip(const std::string& golden_path) {
  return timed("snapshot_roundtrip", [golden_path]() -> std::pair<bool, std::string> {
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {-2, -1, 0};
    win.hi = {2, 1, 0};
    const Environment env = Environment::sample(grid, win, MasterSeed{0x60AD5EED}, 3);
    std::ostringstream first;
    env.export_snapshot(first);
    std::istringstream reread(first.str());
    const Environment back = Environment::import_snapshot(reread);
    std::ostringstream second;
    back.export_snapshot(second);
    if (first.str() != second.str()) return {false, "export/import/export not stable"};
    for (std::int64_t f = 0; f < win.box_count(2); ++f) {
      const BoxIndex b = win.box_at(f, 2);
      const auto p1 = env.box_points(b);
      const auto p2 = back.box_points(b);
      if (p1.size() != p2.size()) return {false, "roundtrip changed point counts"};
      for (std::size_t i = 0; i < p1.size(); ++i) {
        if (!(p1[i] == p2[i])) return {false, "roundtrip changed point locations"};
      }
    }
    if (!golden_path.empty()) {
      std::ifstream in(golden_path, std::ios::binary);
      if (!in) return {false, "golden snapshot missing: " + golden_path};
      std::stringstream golden;
      golden << in.rdbuf();
      if (golden.str() != first.str()) return {false, "export drifted from the golden snapshot"};
    }
    return {true, "roundtrip stable"};
  });
}

namespace {

// Small-instance generator for engine oracles: a handful of points in a
// tight window, cycling cost modes and view modifications.
struct SmallInstance {
  std::shared_ptr<Environment> env;  // stable address; the view points here
  EnvironmentView view;
  Point a, b;
  std::string label;
};

SmallInstance make_small_instance(int index, int max_points) {
  const double alphas[3] = {1.5, 2.0, 3.0};
  GridSpec grid{2};
  WindowSpec win;
  win.lo = {-1, -1, 0};
  win.hi = {1, 1, 0};
  const MasterSeed seed{0x0AC1E000u + static_cast<std::uint32_t>(index)};
  Environment env;
  std::uint32_t attempt = 0;
  for (;; ++attempt) {
    env = Environment::sample(grid, win, seed, attempt);
    const auto n = env.total_points();
    if (n >= 1 && n <= max_points) break;
  }
  SmallInstance inst{std::make_shared<Environment>(std::move(env)), {}, {}, {}, ""};

  const int mode = index % 3;        // T, T', T''
  const int modification = (index / 3) % 3;  // none, emptied, free
  const double alpha = alphas[(index / 9) % 3];
  const PhiParams params = PhiParams::make(alpha, 2.0, 2.0, (index % 2) ? 1.0 : 0.0);
  if (mode == 2) {
    *inst.env = inst.env->thin(ThinningSpec::make(33, params.n));
  }
  inst.view.base = inst.env.get();
  inst.view.phi = params;
  inst.view.cost_mode = (mode == 2) ? CostMode::phi : CostMode::euclid_power;
  std::uint64_t ctr = static_cast<std::uint64_t>(index) * 16;
  inst.a = make_point(uniform(0x5EED07, ctr, -1.45, 1.45), uniform(0x5EED07, ctr, -1.45, 1.45));
  inst.b = make_point(uniform(0x5EED07, ctr, -1.45, 1.45), uniform(0x5EED07, ctr, -1.45, 1.45));
  if (mode == 1) inst.view.extra_endpoints = {inst.a, inst.b};
  if (modification == 1) inst.view.emptied_box = make_box(0, 0);
  if (modification == 2) inst.view.free_box = make_box(0, 0);
  inst.label = std::string("mode=") + "TT'T\""[mode] + " mod=" + std::to_string(modification) +
               " alpha=" + fmt(alpha);

  // T-mode endpoint snapping needs a usable point somewhere.
  if (modification == 1) {
    bool usable = false;
    const WindowSpec& w = inst.env->window();
    for (std::int64_t f = 0; f < w.box_count(2); ++f) {
      const BoxIndex bx = w.box_at(f, 2);
      if (bx == make_box(0, 0)) continue;
      if (!inst.env->box_points(bx).empty()) {
        usable = true;
        break;
      }
    }
    if (!usable) inst.view.emptied_box.reset();
  }
  return inst;
}

bool same_vertex_sequence(const PathResult& x, const PathResult& y) {
  if (x.vertices.size() != y.vertices.size()) return false;
  for (std::size_t i = 0; i < x.vertices.size(); ++i) {
    if (!(x.vertices[i] == y.vertices[i])) return false;
  }
  return true;
}

}  // namespace

CheckResult check_oracle_equivalence(int instances, int workers) {
  return timed("oracle_equivalence", [=]() -> std::pair<bool, std::string> {
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(instances), 0);
    parallel_for(instances, workers, [&](int i) {
      const SmallInstance inst = make_small_instance(i, 7);
      const PathResult fast = passage_time(inst.view, inst.a, inst.b);
      const PathResult exact = brute_force_passage_time(inst.view, inst.a, inst.b);
      const bool cost_ok =
          std::abs(fast.passage_time - exact.passage_time) <=
          1e-12 * std::max({1.0, fast.passage_time, exact.passage_time});
      ok[static_cast<std::size_t>(i)] = cost_ok && same_vertex_sequence(fast, exact);
    });
    int bad = 0;
    for (auto o : ok) bad += !o;
    return {bad == 0, std::to_string(bad) + " mismatches of " + std::to_string(instances)};
  });
}

CheckResult check_pruning_soundness(int instances, int workers) {
  return timed("pruning_soundness", [=]() -> std::pair<bool, std::string> {
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(instances), 0);
    parallel_for(instances, workers, [&](int i) {
      GridSpec grid{2};
      WindowSpec win;
      win.lo = {-2, -2, 0};
      win.hi = {5, 2, 0};
      const Environment env =
          Environment::sample(grid, win, MasterSeed{0x50DA0000u + static_cast<std::uint32_t>(i)}, 0);
      EnvironmentView view;
      view.base = &env;
      view.phi = PhiParams::make(2.0 + (i % 3) * 0.5, 8.0, 8.0, 1.0);
      view.cost_mode = (i % 2) ? CostMode::phi : CostMode::euclid_power;
      const Point a = make_point(-1.7, 0.2), b = make_point(4.6, -0.3);
      EngineOptions pruned;
      pruned.w_region_pruning = true;
      const PathResult plain = passage_time(view, a, b);
      const PathResult fast = passage_time(view, a, b, pruned);
      ok[static_cast<std::size_t>(i)] =
          std::abs(plain.passage_time - fast.passage_time) <=
              1e-12 * std::max(1.0, plain.passage_time) &&
          same_vertex_sequence(plain, fast);
    });
    int bad = 0;
    for (auto o : ok) bad += !o;
    return {bad == 0, std::to_string(bad) + " pruning mismatches of " + std::to_string(instances)};
  });
}

double gradient_fd_max_rel_error(int vertices, int workers,
                                 const std::function<double(double, double, double)>& derivative) {
  std::mutex mu;
  double worst = 0.0;
  int collected = 0;
  const int instances = std::max(1, vertices / 3 + 8);
  parallel_for(instances, workers, [&](int inst) {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (collected >= vertices) return;
    }
    GridSpec grid{2};
    WindowSpec win;
    win.lo = {-3, -3, 0};
    win.hi = {9, 3, 0};
    const MasterSeed seed{0x6AD00000u + static_cast<std::uint32_t>(inst)};
    const PhiParams params = PhiParams::make(1.5 + 0.5 * (inst % 4), 4.0, 4.0, 2.0);
    const Environment env = Environment::sample(grid, win, seed, 0);
    const Environment thinned = env.thin(ThinningSpec::make(33, params.n));
    EnvironmentView view;
    view.base = &thinned;
    view.phi = params;
    view.cost_mode = CostMode::phi;
    const Point a = make_point(0, 0), b = make_point(6, 0);
    const PathResult path = passage_time(view, a, b);
    const PointSoup& soup = thinned.soup();
    const double h = 1e-5;

    for (std::size_t vi = 1; vi + 1 < path.vertices.size(); ++vi) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (collected >= vertices) return;
        ++collected;
      }
      const Point& v = path.vertices[vi];
      // Locate the realized point behind this vertex.
      const BoxIndex box = grid.box_of(v);
      int k = -1;
      const auto flat = thinned.window().flat_index(box, 2);
      for (auto idx = soup.box_begin[static_cast<std::size_t>(flat)];
           idx < soup.box_begin[static_cast<std::size_t>(flat) + 1]; ++idx) {
        if (soup.points[static_cast<std::size_t>(idx)] == v) {
          k = soup.index_in_box[static_cast<std::size_t>(idx)];
          break;
        }
      }
      if (k < 0) continue;
      const Point uf = env.tape(box).uniforms[static_cast<std::size_t>(k)];
      if (uf.c[0] < 2 * h || uf.c[0] > 1 - 2 * h || uf.c[1] < 2 * h || uf.c[1] > 1 - 2 * h) {
        continue;  // a nudge would cross the box boundary
      }

      // Analytic gradient through the injected derivative.
      Point analytic;
      for (int side : {-1, 1}) {
        const Point& nb = path.vertices[static_cast<std::size_t>(static_cast<long>(vi) + side)];
        const double len = dist(v, nb);
        analytic = analytic + (derivative(params.alpha, params.h_n, len) / len) * (v - nb);
      }
      // The engine's own gradient must agree with the true derivative path.
      const Point engine_grad = grad_wrt_point(view, path, box, k);

      Point fd;
      for (int axis = 0; axis < 2; ++axis) {
        double t[2];
        for (int s = 0; s < 2; ++s) {
          Point u2 = uf;
          u2.c[axis] += (s == 0 ? h : -h);
          const Environment moved = env.with_uniform(box, k, u2).thin(ThinningSpec::make(33, params.n));
          EnvironmentView mv = view;
          mv.base = &moved;
          t[s] = passage_time(mv, a, b).passage_time;
        }
        fd.c[axis] = (t[0] - t[1]) / (2.0 * h);
      }
      const double scale = std::max(norm(fd), 1e-3);
      const double err = std::max(norm(analytic - fd), norm(engine_grad - fd)) / scale;
      {
        std::lock_guard<std::mutex> lock(mu);
        worst = std::max(worst, err);
      }
    }
  });
  return worst;
}

CheckResult check_gradient_fd(int vertices, int workers) {
  return timed("gradient_vs_fd", [=]() -> std::pair<bool, std::string> {
    const auto true_derivative = [](double alpha, double h_n, double t) {
      return t < h_n ? alpha * std::pow(t, alpha - 1.0) : alpha * std::pow(h_n, alpha - 1.0);
    };
    const double worst = gradient_fd_max_rel_error(vertices, workers, true_derivative);
    return {worst <= 1e-6, "max relative error " + fmt(worst) + " over " +
                               std::to_string(vertices) + " vertices"};
  });
}

CheckResult check_gradient_check_detects_mutation() {
  return timed("gradient_check_mutation", []() -> std::pair<bool, std::string> {
    const auto broken = [](double alpha, double h_n, double t) {
      return -(t < h_n ? alpha * std::pow(t, alpha - 1.0) : alpha * std::pow(h_n, alpha - 1.0));
    };
    const double worst = gradient_fd_max_rel_error(12, 0, broken);
    return {worst > 0.5, "sign-flipped derivative yields max error " + fmt(worst)};
  });
}

CheckResult check_order_monotonicity(int trials, int workers) {
  return timed("order_monotonicity", [=]() -> std::pair<bool, std::string> {
    std::vector<std::uint8_t> bad(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, workers, [&](int i) {
      GridSpec grid{2};
      WindowSpec win;
      win.lo = {-3, -3, 0};
      win.hi = {11, 3, 0};
      const MasterSeed seed{0x0DD50000u + static_cast<std::uint32_t>(i / 64)};
      const PhiParams params = PhiParams::make(2.0, 8.0, 8.0, 8.0);
      const ThinningSpec spec = ThinningSpec::make(33, 8.0);
      const Environment env =
          Environment::sample(grid, win, seed, static_cast<std::uint32_t>(i % 64));
      std::uint64_t ctr = static_cast<std::uint64_t>(i) * 8;
      const BoxIndex box = make_box(static_cast<std::int32_t>(uniform(0x5EED08, ctr, 0, 9)),
                                    static_cast<std::int32_t>(uniform(0x5EED08, ctr, -1.99, 2)));
      const Environment thinned = env.thin(spec);
      EnvironmentView view;
      view.base = &thinned;
      view.phi = params;
      view.cost_mode = CostMode::phi;
      const Point a = make_point(0, 0), b = make_point(8, 0);
      const double base = passage_time(view, a, b).passage_time;
      const double open = modified_passage_time(env, params, spec, box, BoxMode::free_box);
      const double closed = modified_passage_time(env, params, spec, box, BoxMode::empty_box);
      const double tol = 1e-12 * std::max(1.0, closed);
      bool fail = !(open <= base + tol && base <= closed + tol);

      // Point addition never increases T''; removal never decreases it.
      const BoxTape& tape = env.tape(box);
      const int j = 1 + static_cast<int>(uniform(0x5EED08, ctr, 0, tape.stable_len));
      const Environment more = env.flip_bit(box, j, 1).thin(spec);
      EnvironmentView view_more = view;
      view_more.base = &more;
      if (passage_time(view_more, a, b).passage_time > base + tol) fail = true;
      const Environment fewer = env.flip_bit(box, j, 0).thin(spec);
      EnvironmentView view_fewer = view;
      view_fewer.base = &fewer;
      if (passage_time(view_fewer, a, b).passage_time < base - tol) fail = true;
      bad[static_cast<std::size_t>(i)] = fail;
    });
    int failures = 0;
    for (auto b : bad) failures += b;
    return {failures == 0,
            std::to_string(failures) + " order violations of " + std::to_string(trials)};
  });
}

CheckResult check_triangle_inequality(int trials, int workers) {
  return timed("triangle_inequality", [=]() -> std::pair<bool, std::string> {
    std::vector<std::uint8_t> bad(static_cast<std::size_t>(trials), 0);
    parallel_for(trials, workers, [&](int i) {
      GridSpec grid{2};
      WindowSpec win;
      win.lo = {-4, -4, 0};
      win.hi = {8, 4, 0};
      const Environment env =
          Environment::sample(grid, win, MasterSeed{0x7A100000u + static_cast<std::uint32_t>(i)}, 0);
      if (env.total_points() < 3) return;
      EnvironmentView view;
      view.base = &env;
      view.phi = PhiParams::make(2.0, 8.0, 8.0, 1.0);
      view.cost_mode = CostMode::euclid_power;
      const PointSoup& soup = env.soup();
      std::uint64_t ctr = static_cast<std::uint64_t>(i) * 4;
      const auto pick = [&] {
        return soup.points[static_cast<std::size_t>(
            uniform(0x5EED09, ctr, 0, static_cast<double>(soup.points.size())))];
      };
      const Point q0 = pick(), q1 = pick(), q2 = pick();
      const double d02 = passage_time(view, q0, q2).passage_time;
      const double d01 = passage_time(view, q0, q1).passage_time;
      const double d12 = passage_time(view, q1, q2).passage_time;
      if (d02 > d01 + d12 + 1e-12 * std::max(1.0, d01 + d12)) {
        bad[static_cast<std::size_t>(i)] = 1;
      }
    });
    int failures = 0;
    for (auto b : bad) failures += b;
    return {failures == 0,
            std::to_string(failures) + " triangle violations of " + std::to_string(trials)};
  });
}

CheckResult check_t_vs_tprime_tails(int replicates, int workers) {
  return timed("t_tprime_tails_and_segments", [=]() -> std::pair<bool, std::string> {
    const double n_grid[3] = {8.0, 16.0, 32.0};
    std::array<std::vector<double>, 3> diffs;
    std::array<std::vector<double>, 3> seg_sums;
    for (int g = 0; g < 3; ++g) {
      const double n = n_grid[g];
      ExperimentConfig config;
      config.alpha = 2.0;
      config.replicates = replicates;
      config.seed = MasterSeed{0x7D1F0000};
      config.workers = workers;
      diffs[static_cast<std::size_t>(g)].resize(static_cast<std::size_t>(replicates));
      seg_sums[static_cast<std::size_t>(g)].resize(static_cast<std::size_t>(replicates));
      std::vector<double>& dn = diffs[static_cast<std::size_t>(g)];
      std::vector<double>& sn = seg_sums[static_cast<std::size_t>(g)];
      parallel_for(replicates, workers, [&](int r) {
        const Environment env = Environment::sample(GridSpec{config.dim}, config.window(n),
                                                    config.seed, static_cast<std::uint32_t>(r));
        const PhiParams params = config.phi(n);
        EnvironmentView tv;
        tv.base = &env;
        tv.phi = params;
        tv.cost_mode = CostMode::euclid_power;
        const Point a = make_point(0, 0), b = make_point(n, 0);
        const double t = passage_time(tv, a, b).passage_time;
        EnvironmentView tpv = tv;
        tpv.extra_endpoints = {a, b};
        const double tp = passage_time(tpv, a, b).passage_time;
        dn[static_cast<std::size_t>(r)] = std::abs(t - tp);
        const Environment thinned = env.thin(config.thinning(n));
        EnvironmentView ppv;
        ppv.base = &thinned;
        ppv.phi = params;
        ppv.cost_mode = CostMode::phi;
        const PathResult path = passage_time(ppv, a, b);
        double acc = 0.0;
        for (double len : path.segment_lengths) acc += std::pow(len, 2.0 * config.alpha);
        sn[static_cast<std::size_t>(r)] = acc;
      });
    }
    auto p999 = [](std::vector<double> xs) {
      std::sort(xs.begin(), xs.end());
      const std::size_t idx = std::min(
          xs.size() - 1,
          static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(xs.size()))) - 1);
      return xs[idx];
    };
    const double cap = std::max(2.0, 3.0 * p999(diffs[0]));
    std::string detail = "p999 |T-T'|:";
    bool pass = true;
    for (int g = 0; g < 3; ++g) {
      const double v = p999(diffs[static_cast<std::size_t>(g)]);
      detail += " " + fmt(v);
      if (v > cap) pass = false;
    }
    auto mean = [](const std::vector<double>& xs) {
      double acc = 0.0;
      for (double x : xs) acc += x;
      return acc / static_cast<double>(xs.size());
    };
    detail += "; segment-sum means:";
    double prev = 0.0;
    for (int g = 0; g < 3; ++g) {
      const double v = mean(seg_sums[static_cast<std::size_t>(g)]);
      detail += " " + fmt(v);
      if (g > 0 && v > 3.0 * prev) pass = false;  // doubling n may at most triple the mean
      prev = v;
    }
    return {pass, detail};
  });
}

CheckResult check_fs_exact(int tables) {
  return timed("fs_inequality_exact", [tables]() -> std::pair<bool, std::string> {
    // Worked example: Z = w1 + w2 on two fair bits.
    {
      const FSReport r = fs_check_exact(ProductSpace{{2, 2}}, {0.0, 1.0, 1.0, 2.0});
      if (!close_rel(r.variance, 0.5, 1e-12) || !close_rel(r.sum_sq_mean_abs, 0.5, 1e-12) ||
          std::abs(r.lhs) > 1e-12 || std::abs(r.sum_ent_sq) > 1e-12 ||
          std::abs(r.slack) > 1e-12) {
        return {false, "two-bit worked example failed"};
      }
      const FSReport c = fs_check_exact(ProductSpace{{2, 2}}, {3.0, 3.0, 3.0, 3.0});
      if (!c.vacuous) return {false, "constant Z should be vacuous"};
    }
    std::uint64_t ctr = 0;
    const std::vector<std::vector<int>> shapes = {{3, 3, 3}, {2, 2}, {2, 3, 4}, {4, 4, 4, 4}};
    double min_slack = 0.0;
    for (int i = 0; i < tables; ++i) {
      const auto& sizes = shapes[static_cast<std::size_t>(i) % shapes.size()];
      ProductSpace space{sizes};
      std::vector<double> z(space.total());
      for (double& v : z) v = uniform(0x5EED0A, ctr, -1.0, 2.0);
      const FSReport r = fs_check_exact(space, z);
      const double scale = std::max({1.0, std::abs(r.lhs), r.sum_ent_sq});
      min_slack = std::min(min_slack, r.slack / scale);
      if (r.slack < -1e-12 * scale) {
        return {false, "FS inequality violated on table " + std::to_string(i)};
      }
    }
    return {true, "min normalized slack " + fmt(min_slack) + " over " + std::to_string(tables)};
  });
}

CheckResult check_logsobolev(int functions) {
  return timed("log_sobolev_hypercube", [functions]() -> std::pair<bool, std::string> {
    // Worked example: f(x) = x_1 on one bit.
    if (!logsobolev_hypercube_check(1, {-1.0, 1.0})) return {false, "f = x1 example failed"};
    if (std::abs(logsobolev_hypercube_slack(1, {-1.0, 1.0}) - 4.0) > 1e-12) {
      return {false, "f = x1 slack should be exactly 4"};
    }
    if (std::abs(logsobolev_hypercube_slack(3, std::vector<double>(8, 2.5))) > 1e-12) {
      return {false, "constant f should have zero slack"};
    }
    std::uint64_t ctr = 0;
    const int m = 6;
    for (int i = 0; i < functions; ++i) {
      std::vector<double> f(std::size_t{1} << m);
      for (double& v : f) v = uniform(0x5EED0B, ctr, -1.0, 1.0);
      if (i % 7 == 0) f[0] = 0.0;  // touch the 0 log 0 convention
      if (!logsobolev_hypercube_check(m, f)) {
        return {false, "log-Sobolev violated on function " + std::to_string(i)};
      }
    }
    return {true, std::to_string(functions) + " random functions at m = 6 hold"};
  });
}

CheckResult check_entropy_examples() {
  return timed("entropy_plugin", []() -> std::pair<bool, std::string> {
    const double e = std::exp(1.0);
    const std::vector<double> two{1.0, e};
    const double expected = e / 2.0 - (1.0 + e) / 2.0 * std::log((1.0 + e) / 2.0);
    if (!close_rel(entropy_plugin(two), expected, 1e-12)) {
      return {false, "two-point entropy example failed"};
    }
    if (entropy_plugin(std::vector<double>{0.0, 0.0}) != 0.0) {
      return {false, "0 log 0 convention failed"};
    }
    if (entropy_plugin(std::vector<double>{3.5, 3.5, 3.5}) != 0.0) {
      return {false, "constant entropy should be zero"};
    }
    bool threw = false;
    try {
      entropy_plugin(std::vector<double>{1.0, -0.5});
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    if (!threw) return {false, "negative sample should be rejected"};
    // Nonnegativity on Monte Carlo inputs.
    std::uint64_t ctr = 0;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> xs(256);
      for (double& x : xs) x = uniform(0x5EED0C, ctr, 0.0, 5.0);
      if (entropy_plugin(xs) < -1e-12) return {false, "plug-in entropy went negative"};
    }
    return {true, "examples and nonnegativity hold"};
  });
}

namespace {

// Second implementation path: breadth-first growth with canonical-form
// deduplication, independent of the forbidden-set enumeration.
double bfs_animal_max(const AnimalWeights& weights, int m) {
  std::set<std::vector<BoxIndex>> layer{{BoxIndex{}}};
  for (int size = 2; size <= m; ++size) {
    std::set<std::vector<BoxIndex>> next;
    for (const auto& animal : layer) {
      std::set<BoxIndex> cells(animal.begin(), animal.end());
      for (const BoxIndex& cell : animal) {
        for (int axis = 0; axis < 2; ++axis) {
          for (int step : {-1, 1}) {
            BoxIndex nb = cell;
            nb.c[axis] += step;
            if (cells.count(nb)) continue;
            std::vector<BoxIndex> grown = animal;
            grown.push_back(nb);
            std::sort(grown.begin(), grown.end());
            next.insert(std::move(grown));
          }
        }
      }
    }
    layer = std::move(next);
  }
  double best = -1.0;
  for (const auto& animal : layer) {
    double acc = 0.0;
    for (const BoxIndex& b : animal) acc += weights(b);
    best = std::max(best, acc);
  }
  return best;
}

AnimalWeights poisson_weights(std::uint64_t key) {
  return [key](const BoxIndex& b) {
    const BoxTape tape = sample_box_tape(MasterSeed{key}, 0, b, 2);
    return static_cast<double>(tape.count);
  };
}

}  // namespace

CheckResult check_animals() {
  return timed("lattice_animals", []() -> std::pair<bool, std::string> {
    const std::int64_t expected[7] = {0, 1, 4, 18, 76, 315, 1296};
    for (int m = 1; m <= 6; ++m) {
      const auto animals_m = enumerate_animals(2, m);
      if (static_cast<std::int64_t>(animals_m.size()) != expected[m]) {
        return {false, "enumeration count at m=" + std::to_string(m) + " is " +
                           std::to_string(animals_m.size())};
      }
      if (count_animals_redelmeier(2, m) != expected[m]) {
        return {false, "independent count disagrees at m=" + std::to_string(m)};
      }
      for (const auto& a : animals_m) {
        if (!animal_is_connected(a)) return {false, "disconnected animal emitted"};
        bool has_origin = false;
        for (const auto& b : a) has_origin |= (b == BoxIndex{});
        if (!has_origin) return {false, "animal missing the origin box"};
      }
      if (std::set<LatticeAnimal>(animals_m.begin(), animals_m.end()).size() != animals_m.size()) {
        return {false, "duplicate animals at m=" + std::to_string(m)};
      }
    }

    // Exact maximum: dual-path agreement plus monotonicity in m and weights.
    double floor_ratio = 1.0;
    for (int i = 0; i < 200; ++i) {
      const AnimalWeights w = poisson_weights(0xA11A0000u + static_cast<std::uint32_t>(i));
      const int m = 2 + (i % 5);
      const auto [exact, animal] = animal_max_exact(w, m);
      if (std::abs(exact - bfs_animal_max(w, m)) > 1e-9) {
        return {false, "exact maximum disagrees with the BFS recomputation"};
      }
      const auto [prev, _a] = animal_max_exact(w, std::max(1, m - 1));
      if (prev > exact + 1e-12) return {false, "exact maximum not monotone in m"};
      const auto [greedy, _g] = animal_max_greedy(w, m);
      if (greedy > exact + 1e-12) return {false, "greedy exceeded the exact maximum"};
      if (exact > 0.0) floor_ratio = std::min(floor_ratio, greedy / exact);
      // Raising one weight never lowers the maximum.
      const BoxIndex bump = animal[static_cast<std::size_t>(i) % animal.size()];
      const AnimalWeights w2 = [&w, bump](const BoxIndex& b) {
        return w(b) + (b == bump ? 2.5 : 0.0);
      };
      const auto [raised, _r] = animal_max_exact(w2, m);
      if (raised + 1e-12 < exact) return {false, "exact maximum not monotone in weights"};
    }
    {
      // All-equal weights: every size-m animal ties, greedy attains m.
      const AnimalWeights ones = [](const BoxIndex&) { return 1.0; };
      const auto [v3, _] = animal_max_exact(ones, 3);
      const auto [g3, _g] = animal_max_greedy(ones, 3);
      if (v3 != 3.0 || g3 != 3.0) return {false, "all-equal weights should give m"};
    }
    return {true, "counts, dual path, monotonicity; greedy/exact floor " + fmt(floor_ratio)};
  });
}

CheckResult check_animal_greedy_ratio() {
  return timed("greedy_animal_growth", []() -> std::pair<bool, std::string> {
    const int draws = 50;
    const std::vector<int> ms = {16, 24, 32, 48, 64};
    std::map<int, double> mean_ratio;
    for (int m : ms) {
      double acc = 0.0;
      for (int d = 0; d < draws; ++d) {
        const AnimalWeights w = poisson_weights(0x6EED0000u + static_cast<std::uint32_t>(d));
        acc += animal_max_greedy(w, m).first / static_cast<double>(m);
      }
      mean_ratio[m] = acc / draws;
    }
    const double anchor = mean_ratio[64];
    std::string detail = "greedy M_m/m:";
    bool pass = true;
    for (int m : ms) {
      detail += " " + fmt(mean_ratio[m]);
      if (std::abs(mean_ratio[m] - anchor) > 0.2 * anchor) pass = false;
    }
    return {pass, detail};
  });
}

std::vector<CheckResult> run_verify_suite(const VerifyOptions& options) {
  const int w = options.workers;
  std::vector<CheckResult> results;
  results.push_back(check_phi_examples());
  results.push_back(check_phi_inequalities(100000));
  results.push_back(check_phi_derivative_fd(2000));
  results.push_back(check_w_region_rigid_motion(1000));
  results.push_back(check_traverse_oracle(10000, 300));
  results.push_back(check_lemma_w_dimensions_grid());
  results.push_back(check_lemma_e_regions_threshold());
  results.push_back(check_poisson_decode(100000));
  results.push_back(check_leading_ones(100000));
  results.push_back(check_environment_sampling());
  results.push_back(check_thinning());
  results.push_back(check_flip_monotonicity(2000));
  results.push_back(check_resample_distribution(100000));
  results.push_back(check_snapshot_roundtrip(options.golden_path));
  results.push_back(check_oracle_equivalence(1000, w));
  results.push_back(check_pruning_soundness(1000, w));
  results.push_back(check_gradient_fd(200, w));
  results.push_back(check_gradient_check_detects_mutation());
  results.push_back(check_order_monotonicity(10000, w));
  results.push_back(check_triangle_inequality(300, w));
  results.push_back(check_t_vs_tprime_tails(1000, w));
  results.push_back(check_fs_exact(200));
  results.push_back(check_logsobolev(1000));
  results.push_back(check_entropy_examples());
  results.push_back(check_animals());
  results.push_back(check_animal_greedy_ratio());
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace efpp
