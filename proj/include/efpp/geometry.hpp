#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace efpp {

// Points carry three slots regardless of dimension; unused axes stay zero.
// This keeps distance loops branch-free for d in {2, 3}.
struct Point {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  bool operator==(const Point& o) const { return c == o.c; }
};

inline Point make_point(double x, double y, double z = 0.0) { return Point{{x, y, z}}; }

inline Point operator-(const Point& a, const Point& b) {
  return Point{{a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}};
}
inline Point operator+(const Point& a, const Point& b) {
  return Point{{a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}};
}
inline Point operator*(double s, const Point& a) {
  return Point{{s * a.c[0], s * a.c[1], s * a.c[2]}};
}

double norm(const Point& a);
double dist(const Point& a, const Point& b);
double dist2(const Point& a, const Point& b);

// Lexicographic order on coordinates; the global tie-break rule.
bool lex_less(const Point& a, const Point& b);

/// Unit box identifier. The box with index z covers [z - 1/2, z + 1/2)
/// per axis (lower faces inclusive), so boxes are centered at integer points.
struct BoxIndex {
  std::array<std::int32_t, 3> c{0, 0, 0};

  bool operator==(const BoxIndex& o) const { return c == o.c; }
  bool operator<(const BoxIndex& o) const { return c < o.c; }
};

inline BoxIndex make_box(std::int32_t x, std::int32_t y, std::int32_t z = 0) {
  return BoxIndex{{x, y, z}};
}

struct BoxIndexHash {
  std::size_t operator()(const BoxIndex& b) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 3; ++i) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(b.c[i])) + 0x9e3779b97f4a7c15ULL +
           (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Unit-grid decomposition of R^d into half-open boxes centered at Z^d.
struct GridSpec {
  int dim = 2;

  BoxIndex box_of(const Point& p) const;
  Point box_center(const BoxIndex& b) const;
  // Euclidean distance from p to the closed box region (0 if inside).
  double dist_to_box(const Point& p, const BoxIndex& b) const;
};

/// Parameters of the linearized power cost: t^alpha below the cutoff h_n,
/// linear continuation with matched value and slope above it.
struct PhiParams {
  double alpha = 2.0;  // exponent, > 1
  double h0 = 8.0;     // cutoff base, >= 1
  double h1 = 8.0;     // cutoff slope, >= h0
  double n = 1.0;      // scale parameter, >= 0
  double h_n = 8.0;    // derived cutoff

  static PhiParams make(double alpha, double h0, double h1, double n);
};

double phi_cost(const PhiParams& params, double t);
double phi_derivative(const PhiParams& params, double t);

/// Whether c lies in the improvement region W(a, b): inserting c does not
/// increase the cost of the direct a-b connection.
bool w_region_contains(const PhiParams& params, const Point& a, const Point& b, const Point& c);

// Checks 2*e1 + E*e2 in W(0, k*e1); eventually true in k for fixed E and
// large h0 = h1.
bool check_lemma_e_regions(const PhiParams& params, double E, double k);

// Checks ell*e1 +- c*sqrt(ell)*e2 in W(0, 2*ell*e1); both displaced points
// are symmetric so a single inequality suffices.
bool check_lemma_w_dimensions(const PhiParams& params, double ell, double c);

/// All unit boxes whose closed region intersects segment pq, in traversal
/// order. Consecutive boxes share a face; simultaneous boundary crossings
/// step axes in index order.
std::vector<BoxIndex> traverse_segment(const GridSpec& grid, const Point& p, const Point& q);

}  // namespace efpp
