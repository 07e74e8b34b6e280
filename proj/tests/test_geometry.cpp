#include <doctest.h>

#include <cmath>

#include "efpp/geometry.hpp"
#include "efpp/rng.hpp"

using namespace efpp;

TEST_CASE("phi cost follows the two-branch definition") {
  const PhiParams p = PhiParams::make(2.0, 4.0, 4.0, 0.0);
  CHECK(p.h_n == 4.0);
  CHECK(phi_cost(p, 2.0) == doctest::Approx(4.0));
  CHECK(phi_cost(p, 4.0) == doctest::Approx(16.0));
  CHECK(phi_cost(p, 6.0) == doctest::Approx(32.0));
  CHECK(phi_cost(p, 0.0) == 0.0);
  CHECK_THROWS_AS(phi_cost(p, -0.1), std::domain_error);
  CHECK_THROWS_AS(PhiParams::make(1.0, 4.0, 4.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(PhiParams::make(2.0, 0.5, 4.0, 0.0), std::domain_error);
}

TEST_CASE("h_n derivation uses the n power law") {
  const PhiParams p = PhiParams::make(2.0, 8.0, 8.0, 16.0);
  CHECK(p.h_n == doctest::Approx(8.0 * std::pow(16.0, 0.25)));
  const PhiParams low = PhiParams::make(2.0, 8.0, 8.0, 0.5);
  CHECK(low.h_n == 8.0);  // the base dominates for small n
}

TEST_CASE("phi derivative matches both branches and the kink rule") {
  const PhiParams p = PhiParams::make(2.0, 4.0, 4.0, 0.0);
  CHECK(phi_derivative(p, 3.0) == doctest::Approx(6.0));
  CHECK(phi_derivative(p, 10.0) == doctest::Approx(8.0));
  const PhiParams p3 = PhiParams::make(3.0, 1.0, 1.0, 0.0);
  CHECK(phi_derivative(p3, 1.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(phi_derivative(p, 0.0), std::domain_error);
}

TEST_CASE("phi stays below the pure power with equality below the cutoff") {
  const PhiParams p = PhiParams::make(2.5, 2.0, 4.0, 3.0);
  std::uint64_t ctr = 0;
  for (int i = 0; i < 2000; ++i) {
    const double t = 20.0 * counter_unit(0xBEE, ctr++);
    const double cost = phi_cost(p, t);
    const double power = std::pow(t, p.alpha);
    CHECK(cost <= power * (1 + 1e-12));
    if (t <= p.h_n) {
      CHECK(cost == doctest::Approx(power));
    } else {
      CHECK(cost < power);
    }
  }
}

TEST_CASE("improvement region examples") {
  const PhiParams big = PhiParams::make(2.0, 1000.0, 1000.0, 0.0);
  const Point a = make_point(0, 0), b = make_point(4, 0);
  CHECK(w_region_contains(big, a, b, make_point(2, 0)));
  CHECK(w_region_contains(big, a, b, make_point(2, 2)));  // exact boundary
  CHECK_FALSE(w_region_contains(big, a, b, make_point(0, 1)));
}

TEST_CASE("lemma region checks evaluate the defining inequality") {
  const PhiParams big = PhiParams::make(2.0, 1000.0, 1000.0, 0.0);
  CHECK(check_lemma_e_regions(big, 0.0, 10.0));
  CHECK(check_lemma_e_regions(big, 1.0, 1000.0));
  CHECK_FALSE(check_lemma_e_regions(big, 2.0, 3.0));
  CHECK(check_lemma_w_dimensions(big, 2.0, 0.1));
  CHECK_FALSE(check_lemma_w_dimensions(big, 2.0, 10.0));
  CHECK(check_lemma_w_dimensions(big, 2.0, 0.0));
}

TEST_CASE("segment traversal over the unit grid") {
  GridSpec grid{2};
  SUBCASE("axis aligned") {
    const auto boxes = traverse_segment(grid, make_point(0, 0), make_point(2, 0));
    REQUIRE(boxes.size() == 3);
    CHECK(boxes[0] == make_box(0, 0));
    CHECK(boxes[1] == make_box(1, 0));
    CHECK(boxes[2] == make_box(2, 0));
  }
  SUBCASE("degenerate segment") {
    const auto boxes = traverse_segment(grid, make_point(0.1, 0.1), make_point(0.1, 0.1));
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == make_box(0, 0));
  }
  SUBCASE("corner crossing steps the lower axis first") {
    const auto boxes = traverse_segment(grid, make_point(0, 0), make_point(1, 1));
    REQUIRE(boxes.size() == 3);
    CHECK(boxes[0] == make_box(0, 0));
    CHECK(boxes[1] == make_box(1, 0));
    CHECK(boxes[2] == make_box(1, 1));
  }
  SUBCASE("random segments satisfy the crossing-count identity") {
    std::uint64_t ctr = 0;
    for (int i = 0; i < 500; ++i) {
      const Point p = make_point(40 * counter_unit(0xF00, ctr++) - 20,
                                 40 * counter_unit(0xF00, ctr++) - 20);
      const Point q = make_point(p.c[0] + 12 * counter_unit(0xF00, ctr++) - 6,
                                 p.c[1] + 12 * counter_unit(0xF00, ctr++) - 6);
      const auto boxes = traverse_segment(grid, p, q);
      const BoxIndex bp = grid.box_of(p), bq = grid.box_of(q);
      CHECK(boxes.size() ==
            1 + std::abs(bq.c[0] - bp.c[0]) + std::abs(bq.c[1] - bp.c[1]));
      for (std::size_t j = 0; j + 1 < boxes.size(); ++j) {
        CHECK(std::abs(boxes[j + 1].c[0] - boxes[j].c[0]) +
                  std::abs(boxes[j + 1].c[1] - boxes[j].c[1]) ==
              1);
      }
    }
  }
  SUBCASE("three dimensions") {
    GridSpec g3{3};
    const auto boxes = traverse_segment(g3, make_point(0, 0, 0), make_point(0, 0, 2.2));
    REQUIRE(boxes.size() == 3);
    CHECK(boxes[2] == make_box(0, 0, 2));
  }
}

TEST_CASE("box conventions: lower faces inclusive, centers at integers") {
  GridSpec grid{2};
  CHECK(grid.box_of(make_point(0.49, 0)) == make_box(0, 0));
  CHECK(grid.box_of(make_point(0.5, 0)) == make_box(1, 0));  // boundary goes up
  CHECK(grid.box_of(make_point(-0.5, 0)) == make_box(0, 0));
  CHECK(grid.box_center(make_box(-3, 7)) == make_point(-3, 7));
  CHECK(grid.dist_to_box(make_point(2, 0), make_box(0, 0)) == doctest::Approx(1.5));
  CHECK(grid.dist_to_box(make_point(0.2, 0.1), make_box(0, 0)) == 0.0);
}
