#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "efpp/geometry.hpp"
#include "efpp/point_process.hpp"

namespace efpp {

enum class CostMode { euclid_power, phi };

/// Segment cost under a view: t^alpha everywhere (euclid_power) or the
/// linearized phi cost (phi). Precomputed powers keep the hot loop cheap.
struct CostFn {
  double alpha = 2.0;
  double cutoff = 0.0;   // h_n; +inf realizes the pure power cost
  double cutoff2 = 0.0;  // cutoff^2
  double value_at_cutoff = 0.0;
  double slope = 0.0;

  static CostFn power(double alpha);
  static CostFn phi(const PhiParams& params);

  double at(double t) const;
  double at2(double t2) const;  // cost from squared length
  double derivative(double t) const;
};

/// An environment plus the modifications the estimators differentiate:
/// endpoints inserted as path vertices, one emptied box, one free box.
struct EnvironmentView {
  const Environment* base = nullptr;  // possibly thinned
  PhiParams phi;
  CostMode cost_mode = CostMode::phi;
  std::vector<Point> extra_endpoints;
  std::optional<BoxIndex> emptied_box;
  std::optional<BoxIndex> free_box;

  CostFn cost() const;
};

struct PathResult {
  std::vector<Point> vertices;
  double passage_time = 0.0;
  std::vector<double> segment_lengths;
  std::vector<double> segment_costs;  // free-box transits cost 0
  double l_max = 0.0;
};

struct BoxUsage {
  Point s_minus, r_minus;  // first vertex used in the box and its predecessor
  Point s_plus, r_plus;    // last vertex used and its successor
};

struct GeodesicStats {
  std::vector<BoxIndex> boxes_touched;  // traversal order, first occurrence
  std::vector<BoxIndex> boxes_used;     // order of first use along the path
  std::unordered_map<BoxIndex, BoxUsage, BoxIndexHash> usage;

  bool uses(const BoxIndex& b) const { return usage.count(b) != 0; }
  std::size_t touched_count() const { return boxes_touched.size(); }
};

struct EngineOptions {
  // Removes candidate edges with a strictly improving midpoint-region point.
  bool w_region_pruning = false;
};

/// Closest realized point to x, ties broken lexicographically.
Point nearest_point(const Environment& env, const Point& x);

PathResult passage_time(const EnvironmentView& view, const Point& a, const Point& b,
                        const EngineOptions& opts = {});

/// Exhaustive minimum over all vertex subsets and orderings; ground truth
/// for instances of at most 8 usable points.
PathResult brute_force_passage_time(const EnvironmentView& view, const Point& a, const Point& b);

enum class BoxMode { empty_box, free_box };

/// T'' from 0 to n*e1 with one box emptied or made free to transit.
double modified_passage_time(const Environment& env, const PhiParams& params,
                             const ThinningSpec& spec, const BoxIndex& box, BoxMode mode,
                             const EngineOptions& opts = {});

GeodesicStats geodesic_stats(const EnvironmentView& view, const PathResult& path);

/// Analytic gradient of the path cost with respect to the location of the
/// k-th point (0-based, pre-thinning index) of a box; zero when that point
/// is not a path vertex.
Point grad_wrt_point(const EnvironmentView& view, const PathResult& path, const BoxIndex& box,
                     int k);

/// Passage time plus the search's exact distance labels, for influence
/// certificates: settled vertices carry exact distances, and every
/// unsettled vertex is at distance >= threshold.
struct SolveWithFieldResult {
  PathResult path;
  std::vector<double> dist;  // by soup point index, then extra endpoints
  std::vector<std::uint8_t> settled;
  double threshold = 0.0;
};

SolveWithFieldResult solve_with_field(const EnvironmentView& view, const Point& a, const Point& b,
                                      const EngineOptions& opts = {});

}  // namespace efpp
