#include <doctest.h>

#include <cmath>
#include <sstream>

#include "efpp/geodesic.hpp"
#include "efpp/rng.hpp"

using namespace efpp;

namespace {

Environment env_from(const std::string& body) {
  std::istringstream in(body);
  return Environment::import_snapshot(in);
}

// Window of boxes (0,0)..(2,0) with a single point at (1, 0).
const char* kOnePoint =
    "efpp-env 1 2 0 0 0 2 0 0 none\n"
    "box 0 0 0 00 0\n"
    "box 1 0 0 100 1 0.5,0.5,0\n"
    "box 2 0 0 00 0\n";

EnvironmentView power_view(const Environment& env, double alpha) {
  EnvironmentView v;
  v.base = &env;
  v.phi = PhiParams::make(alpha, 1000.0, 1000.0, 0.0);
  v.cost_mode = CostMode::euclid_power;
  return v;
}

}  // namespace

TEST_CASE("a single interior point halves the squared cost") {
  const Environment env = env_from(kOnePoint);
  EnvironmentView view = power_view(env, 2.0);
  const Point a = make_point(0, 0), b = make_point(2, 0);
  view.extra_endpoints = {a, b};
  const PathResult path = passage_time(view, a, b);
  CHECK(path.passage_time == doctest::Approx(2.0));
  REQUIRE(path.vertices.size() == 3);
  CHECK(path.vertices[1] == make_point(1, 0));
  CHECK(path.l_max == doctest::Approx(1.0));
  // The invariant: total equals the forward segment-cost sum.
  double acc = 0.0;
  for (double c : path.segment_costs) acc += c;
  CHECK(path.passage_time == acc);
}

TEST_CASE("no interior points: a single direct segment") {
  const Environment env = env_from(
      "efpp-env 1 2 0 0 0 1 0 0 none\n"
      "box 0 0 0 00 0\n"
      "box 1 0 0 00 0\n");
  EnvironmentView view = power_view(env, 2.0);
  const Point a = make_point(0, 0), b = make_point(1, 0);
  view.extra_endpoints = {a, b};
  CHECK(passage_time(view, a, b).passage_time == doctest::Approx(1.0));
  CHECK(passage_time(view, a, a).passage_time == 0.0);
}

TEST_CASE("T mode snaps endpoints to nearest process points") {
  const Environment env = env_from(kOnePoint);
  const EnvironmentView view = power_view(env, 2.0);
  const PathResult path = passage_time(view, make_point(0.9, 0.1), make_point(1.2, -0.2));
  // Both queries snap to the only point; the path is that single vertex.
  CHECK(path.passage_time == 0.0);
  REQUIRE(path.vertices.size() == 1);
  CHECK(path.vertices[0] == make_point(1, 0));
}

TEST_CASE("nearest point: exact hits and lexicographic ties") {
  const Environment env = env_from(
      "efpp-env 1 2 -1 0 0 1 0 0 none\n"
      "box -1 0 0 100 1 0.5,0.5,0\n"
      "box 0 0 0 00 0\n"
      "box 1 0 0 100 1 0.5,0.5,0\n");
  CHECK(nearest_point(env, make_point(1, 0)) == make_point(1, 0));
  // (0,0) is equidistant from (-1,0) and (1,0); the lex-smaller wins.
  CHECK(nearest_point(env, make_point(0, 0)) == make_point(-1, 0));
  const Environment empty = env_from(
      "efpp-env 1 2 0 0 0 0 0 0 none\n"
      "box 0 0 0 00 0\n");
  CHECK_THROWS_AS(nearest_point(empty, make_point(0, 0)), std::runtime_error);
}

TEST_CASE("brute force on collinear equally spaced points uses every hop") {
  std::ostringstream snap;
  snap << "efpp-env 1 2 0 0 0 4 0 0 none\n";
  snap << "box 0 0 0 00 0\n";
  for (int i = 1; i <= 3; ++i) {
    snap << "box " << i << " 0 0 100 1 0.5,0.5,0\n";
  }
  snap << "box 4 0 0 00 0\n";
  const Environment env = env_from(snap.str());
  EnvironmentView view = power_view(env, 2.0);
  const Point a = make_point(0, 0), b = make_point(4, 0);
  view.extra_endpoints = {a, b};
  const PathResult exact = brute_force_passage_time(view, a, b);
  CHECK(exact.passage_time == doctest::Approx(4.0));  // four unit hops
  CHECK(exact.vertices.size() == 5);
  const PathResult fast = passage_time(view, a, b);
  CHECK(fast.passage_time == doctest::Approx(exact.passage_time));
  REQUIRE(fast.vertices.size() == exact.vertices.size());
  for (std::size_t i = 0; i < fast.vertices.size(); ++i) {
    CHECK(fast.vertices[i] == exact.vertices[i]);
  }
}

TEST_CASE("brute force refuses large instances") {
  GridSpec grid{2};
  WindowSpec win;
  win.lo = {-3, -3, 0};
  win.hi = {3, 3, 0};
  Environment env = Environment::sample(grid, win, MasterSeed{0xB16}, 0);
  std::uint32_t rep = 0;
  while (env.total_points() <= 8) {
    env = Environment::sample(grid, win, MasterSeed{0xB16}, ++rep);
  }
  EnvironmentView view = power_view(env, 2.0);
  const Point a = make_point(0, 0), b = make_point(1, 0);
  view.extra_endpoints = {a, b};
  CHECK_THROWS_AS(brute_force_passage_time(view, a, b), std::invalid_argument);
}

TEST_CASE("monotonicity: adding a point never increases the optimum") {
  const Environment base = env_from(kOnePoint);
  const Environment more = env_from(
      "efpp-env 1 2 0 0 0 2 0 0 none\n"
      "box 0 0 0 100 1 0.6,0.4,0\n"
      "box 1 0 0 100 1 0.5,0.5,0\n"
      "box 2 0 0 00 0\n");
  EnvironmentView v1 = power_view(base, 2.0);
  EnvironmentView v2 = power_view(more, 2.0);
  const Point a = make_point(0, 0), b = make_point(2, 0);
  v1.extra_endpoints = {a, b};
  v2.extra_endpoints = {a, b};
  CHECK(passage_time(v2, a, b).passage_time <= passage_time(v1, a, b).passage_time + 1e-12);
}

TEST_CASE("modified passage times bracket the plain one") {
  GridSpec grid{2};
  WindowSpec win;
  win.lo = {-3, -3, 0};
  win.hi = {9, 3, 0};
  const PhiParams params = PhiParams::make(2.0, 8.0, 8.0, 6.0);
  const ThinningSpec spec = ThinningSpec::make(33, 6.0);
  for (std::uint32_t r = 0; r < 12; ++r) {
    const Environment env = Environment::sample(grid, win, MasterSeed{0xB0B0}, r);
    const Environment thinned = env.thin(spec);
    EnvironmentView view;
    view.base = &thinned;
    view.phi = params;
    view.cost_mode = CostMode::phi;
    const double base = passage_time(view, make_point(0, 0), make_point(6, 0)).passage_time;
    const BoxIndex box = make_box(3, 0);
    const double open = modified_passage_time(env, params, spec, box, BoxMode::free_box);
    const double closed = modified_passage_time(env, params, spec, box, BoxMode::empty_box);
    CHECK(open <= base + 1e-12 * std::max(1.0, base));
    CHECK(base <= closed + 1e-12 * std::max(1.0, closed));
  }
  CHECK_THROWS_AS(
      modified_passage_time(Environment::sample(grid, win, MasterSeed{1}, 0), params, spec,
                            make_box(99, 0), BoxMode::empty_box),
      std::invalid_argument);
}

TEST_CASE("an empty untouched box leaves the passage time unchanged") {
  const Environment env = env_from(kOnePoint);
  const PhiParams params = PhiParams::make(2.0, 1000.0, 1000.0, 2.0);
  const ThinningSpec spec = ThinningSpec::make(33, 2.0);
  const Environment thinned = env.thin(spec);
  EnvironmentView view;
  view.base = &thinned;
  view.phi = params;
  view.cost_mode = CostMode::phi;
  const double base = passage_time(view, make_point(0, 0), make_point(2, 0)).passage_time;
  // Box (2,0) holds no points and the geodesic's interior avoids it.
  const double closed =
      modified_passage_time(env, params, spec, make_box(0, 0), BoxMode::empty_box);
  CHECK(base == doctest::Approx(2.0));
  CHECK(closed == doctest::Approx(base));
}

TEST_CASE("free box with no points admits entry at its boundary") {
  const Environment env = env_from(
      "efpp-env 1 2 0 0 0 2 0 0 none\n"
      "box 0 0 0 00 0\n"
      "box 1 0 0 00 0\n"
      "box 2 0 0 00 0\n");
  const PhiParams params = PhiParams::make(2.0, 1000.0, 1000.0, 2.0);
  const ThinningSpec spec = ThinningSpec::make(33, 2.0);
  const double open = modified_passage_time(env, params, spec, make_box(1, 0), BoxMode::free_box);
  // Enter at x=0.5, free transit to x=1.5, finish: 0.25 + 0 + 0.25.
  CHECK(open == doctest::Approx(0.5));
}

TEST_CASE("geodesic statistics: touched vs used") {
  const Environment env = env_from(
      "efpp-env 1 2 0 0 0 3 0 0 none\n"
      "box 0 0 0 00 0\n"
      "box 1 0 0 00 0\n"
      "box 2 0 0 00 0\n"
      "box 3 0 0 00 0\n");
  EnvironmentView view = power_view(env, 2.0);
  const Point a = make_point(0, 0), b = make_point(3, 0);
  view.extra_endpoints = {a, b};
  const PathResult path = passage_time(view, a, b);
  const GeodesicStats stats = geodesic_stats(view, path);
  CHECK(stats.boxes_touched.size() == 4);
  CHECK(stats.boxes_used.size() == 2);  // only the endpoints
  CHECK(stats.uses(make_box(0, 0)));
  CHECK(stats.uses(make_box(3, 0)));
  CHECK_FALSE(stats.uses(make_box(1, 0)));
  const BoxUsage& origin = stats.usage.at(make_box(0, 0));
  CHECK(origin.s_minus == a);
  CHECK(origin.r_minus == a);  // endpoint convention
  CHECK(origin.r_plus == b);
}

TEST_CASE("touched-box count dominates the straight-line lower bound") {
  GridSpec grid{2};
  WindowSpec win;
  win.lo = {-3, -3, 0};
  win.hi = {11, 3, 0};
  for (std::uint32_t r = 0; r < 20; ++r) {
    const Environment env = Environment::sample(grid, win, MasterSeed{0xCAFE}, r);
    const Environment thinned = env.thin(ThinningSpec::make(33, 8.0));
    EnvironmentView view;
    view.base = &thinned;
    view.phi = PhiParams::make(2.0, 8.0, 8.0, 8.0);
    view.cost_mode = CostMode::phi;
    const Point a = make_point(0, 0), b = make_point(8, 0);
    const PathResult path = passage_time(view, a, b);
    const GeodesicStats stats = geodesic_stats(view, path);
    CHECK(static_cast<double>(stats.touched_count()) >=
          std::ceil(dist(a, b) / std::sqrt(2.0)));
  }
}

TEST_CASE("positional gradient: off-path zero, collinear balance, errors") {
  const Environment env = env_from(
      "efpp-env 1 2 0 0 0 2 0 0 none\n"
      "box 0 0 0 00 0\n"
      "box 1 0 0 1100 2 0.5,0.5,0 0.25,0.99,0\n"
      "box 2 0 0 00 0\n");
  const PhiParams params = PhiParams::make(2.0, 1000.0, 1000.0, 2.0);
  const Environment thinned = env.thin(ThinningSpec::make(33, 2.0));
  EnvironmentView view;
  view.base = &thinned;
  view.phi = params;
  view.cost_mode = CostMode::phi;
  const Point a = make_point(0, 0), b = make_point(2, 0);
  const PathResult path = passage_time(view, a, b);
  REQUIRE(path.vertices.size() == 3);  // through the centered point

  // The interior vertex sits midway on a straight path: gradient zero.
  const Point g_on = grad_wrt_point(view, path, make_box(1, 0), 0);
  CHECK(norm(g_on) == doctest::Approx(0.0).epsilon(1e-12));
  // The second realized point is off the geodesic: exactly zero.
  const Point g_off = grad_wrt_point(view, path, make_box(1, 0), 1);
  CHECK(g_off == Point{});
  CHECK_THROWS_AS(grad_wrt_point(view, path, make_box(1, 0), 2), std::out_of_range);
}

TEST_CASE("pruned search agrees with the plain one") {
  GridSpec grid{2};
  WindowSpec win;
  win.lo = {-2, -2, 0};
  win.hi = {8, 2, 0};
  for (std::uint32_t r = 0; r < 25; ++r) {
    const Environment env = Environment::sample(grid, win, MasterSeed{0x9999}, r);
    EnvironmentView view;
    view.base = &env;
    view.phi = PhiParams::make(2.0, 8.0, 8.0, 4.0);
    view.cost_mode = CostMode::euclid_power;
    const Point a = make_point(-1.2, 0.3), b = make_point(7.1, -0.4);
    view.extra_endpoints = {a, b};
    EngineOptions pruned;
    pruned.w_region_pruning = true;
    const double plain = passage_time(view, a, b).passage_time;
    const double fast = passage_time(view, a, b, pruned).passage_time;
    CHECK(fast == doctest::Approx(plain).epsilon(1e-12));
  }
}

TEST_CASE("endpoints outside the window are rejected") {
  const Environment env = env_from(kOnePoint);
  EnvironmentView view = power_view(env, 2.0);
  view.extra_endpoints = {make_point(50, 0)};
  CHECK_THROWS_AS(passage_time(view, make_point(50, 0), make_point(1, 0)),
                  std::invalid_argument);
}
