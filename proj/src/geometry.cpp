#include "efpp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace efpp {

double norm(const Point& a) {
  return std::sqrt(a.c[0] * a.c[0] + a.c[1] * a.c[1] + a.c[2] * a.c[2]);
}

double dist(const Point& a, const Point& b) { return norm(a - b); }

double dist2(const Point& a, const Point& b) {
  const double dx = a.c[0] - b.c[0];
  const double dy = a.c[1] - b.c[1];
  const double dz = a.c[2] - b.c[2];
  return dx * dx + dy * dy + dz * dz;
}

bool lex_less(const Point& a, const Point& b) { return a.c < b.c; }

BoxIndex GridSpec::box_of(const Point& p) const {
  BoxIndex b;
  for (int i = 0; i < dim; ++i) {
    b.c[i] = static_cast<std::int32_t>(std::floor(p.c[i] + 0.5));
  }
  return b;
}

Point GridSpec::box_center(const BoxIndex& b) const {
  Point p;
  for (int i = 0; i < dim; ++i) p.c[i] = static_cast<double>(b.c[i]);
  return p;
}

double GridSpec::dist_to_box(const Point& p, const BoxIndex& b) const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double lo = b.c[i] - 0.5;
    const double hi = b.c[i] + 0.5;
    double d = 0.0;
    if (p.c[i] < lo) d = lo - p.c[i];
    else if (p.c[i] > hi) d = p.c[i] - hi;
    s += d * d;
  }
  return std::sqrt(s);
}

PhiParams PhiParams::make(double alpha, double h0, double h1, double n) {
  if (!(alpha > 1.0)) throw std::domain_error("PhiParams: alpha must exceed 1");
  if (!(h0 >= 1.0)) throw std::domain_error("PhiParams: h0 must be >= 1");
  if (!(h1 >= h0)) throw std::domain_error("PhiParams: h1 must be >= h0");
  if (!(n >= 0.0)) throw std::domain_error("PhiParams: n must be >= 0");
  PhiParams p;
  p.alpha = alpha;
  p.h0 = h0;
  p.h1 = h1;
  p.n = n;
  p.h_n = std::max(h0, h1 * std::pow(n, 1.0 / (2.0 * alpha)));
  return p;
}

double phi_cost(const PhiParams& params, double t) {
  if (t < 0.0) throw std::domain_error("phi_cost: negative length");
  if (t == 0.0) return 0.0;
  const double h = params.h_n;
  if (t <= h) return std::pow(t, params.alpha);
  return std::pow(h, params.alpha) + params.alpha * std::pow(h, params.alpha - 1.0) * (t - h);
}

double phi_derivative(const PhiParams& params, double t) {
  if (t <= 0.0) throw std::domain_error("phi_derivative: length must be positive");
  const double h = params.h_n;
  // At the kink we return the right-hand slope, matching the linear branch.
  if (t < h) return params.alpha * std::pow(t, params.alpha - 1.0);
  return params.alpha * std::pow(h, params.alpha - 1.0);
}

namespace {

// phi evaluated from a squared length. Working with squared lengths keeps
// exactly-representable distances exact (e.g. |(2,2)|^2 = 8), so boundary
// cases of the region inequality resolve the way the formula says.
double phi_cost2(const PhiParams& params, double t2) {
  if (t2 == 0.0) return 0.0;
  const double h2 = params.h_n * params.h_n;
  if (t2 <= h2) {
    return (params.alpha == 2.0) ? t2 : std::pow(t2, 0.5 * params.alpha);
  }
  return std::pow(params.h_n, params.alpha) +
         params.alpha * std::pow(params.h_n, params.alpha - 1.0) * (std::sqrt(t2) - params.h_n);
}

}  // namespace

bool w_region_contains(const PhiParams& params, const Point& a, const Point& b, const Point& c) {
  return phi_cost2(params, dist2(a, c)) + phi_cost2(params, dist2(c, b)) <=
         phi_cost2(params, dist2(a, b));
}

bool check_lemma_e_regions(const PhiParams& params, double E, double k) {
  return w_region_contains(params, Point{}, make_point(k, 0.0), make_point(2.0, E));
}

bool check_lemma_w_dimensions(const PhiParams& params, double ell, double c) {
  return 2.0 * phi_cost2(params, ell * ell + c * c * ell) <=
         phi_cost2(params, 4.0 * ell * ell);
}

std::vector<BoxIndex> traverse_segment(const GridSpec& grid, const Point& p, const Point& q) {
  std::vector<BoxIndex> out;
  BoxIndex cur = grid.box_of(p);
  const BoxIndex goal = grid.box_of(q);
  out.push_back(cur);
  if (cur == goal) return out;

  // Amanatides-Woo walk over half-integer face planes. When two crossing
  // times tie (corner crossing) the lower-index axis steps first, so the
  // output stays face-connected.
  const Point v = q - p;
  std::array<int, 3> step{0, 0, 0};
  std::array<double, 3> t_max{}, t_delta{};
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.dim; ++i) {
    if (v.c[i] > 0.0) {
      step[i] = 1;
      t_max[i] = ((cur.c[i] + 0.5) - p.c[i]) / v.c[i];
      t_delta[i] = 1.0 / v.c[i];
    } else if (v.c[i] < 0.0) {
      step[i] = -1;
      t_max[i] = ((cur.c[i] - 0.5) - p.c[i]) / v.c[i];
      t_delta[i] = -1.0 / v.c[i];
    } else {
      t_max[i] = inf;
      t_delta[i] = inf;
    }
  }
  for (int i = grid.dim; i < 3; ++i) {
    t_max[i] = inf;
    t_delta[i] = inf;
  }

  // Safety bound: a segment cannot cross more faces than its coordinate
  // spans plus slack.
  long guard = 8;
  for (int i = 0; i < grid.dim; ++i) guard += std::labs(goal.c[i] - cur.c[i]) + 2;

  while (!(cur == goal) && guard-- > 0) {
    int axis = 0;
    for (int i = 1; i < grid.dim; ++i) {
      if (t_max[i] < t_max[axis]) axis = i;
    }
    cur.c[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    out.push_back(cur);
  }
  if (!(cur == goal)) throw std::runtime_error("traverse_segment: walk failed to reach target box");
  return out;
}

}  // namespace efpp
