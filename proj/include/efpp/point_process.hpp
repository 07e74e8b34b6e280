#pragma once

#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "efpp/geometry.hpp"
#include "efpp/rng.hpp"

namespace efpp {

// Poisson(1) CDF table and its generalized inverse D^{-1}(t) = inf{x : D(x) >= t}.
double poisson1_cdf(int k);
int poisson1_icdf(double t);

/// Decodes a Poisson(1) count from a fair-bit tape prefix (remaining bits
/// taken as zero). The prefix must already be long enough that the decoded
/// value is independent of the unseen tail.
int decode_poisson_count(const std::vector<std::uint8_t>& omega_prefix);

/// Per-box randomness: a Bernoulli tape encoding the point count through the
/// inverse Poisson CDF, plus uniform locations in [0,1)^d. Tapes extend
/// lazily from their substream; imported tapes are frozen.
struct BoxTape {
  std::vector<std::uint8_t> bits;  // realized prefix, including overrides
  std::vector<Point> uniforms;     // locations for points 1..count (and spares)
  int count = 0;                   // decoded Poisson(1) count
  int stable_len = 0;              // prefix length at which the decode stabilized

  // Procedural backing; absent for snapshot-imported tapes.
  bool has_stream = false;
  MasterSeed stream_seed;
  std::uint32_t stream_replicate = 0;
  BoxIndex box;
};

int leading_ones(const BoxTape& tape);

/// Scale-dependent thinning grid: cells of side epsilon / 3^n (floored at a
/// machine limit), anchored at box corners so cells never straddle boxes.
struct ThinningSpec {
  double epsilon = 1.0 / 33.0;
  double n = 1.0;
  double cell = 0.0;

  static ThinningSpec make(int k_odd, double n);
};

/// Axis-aligned union of unit boxes given by inclusive box-index ranges.
struct WindowSpec {
  std::array<std::int32_t, 3> lo{0, 0, 0};
  std::array<std::int32_t, 3> hi{0, 0, 0};

  bool contains_box(const BoxIndex& b, int dim) const;
  bool contains_point(const Point& p, int dim) const;
  std::int64_t box_count(int dim) const;
  std::int64_t flat_index(const BoxIndex& b, int dim) const;
  BoxIndex box_at(std::int64_t flat, int dim) const;
};

/// Flattened per-window view of all realized (post-thinning) points, grouped
/// by box for ring searches. Built lazily and cached per Environment.
struct PointSoup {
  std::vector<Point> points;              // grouped by flat box index
  std::vector<std::int32_t> box_begin;    // size box_count+1
  std::vector<BoxIndex> box_of_point;     // parallel to points
  std::vector<std::int32_t> index_in_box; // pre-thinning point index (0-based)
};

/// A realized point configuration on a window, backed by per-box tapes.
/// Immutable; surgeries return new environments sharing untouched tapes.
class Environment {
 public:
  Environment() = default;

  static Environment sample(const GridSpec& grid, const WindowSpec& window,
                            const MasterSeed& seed, std::uint32_t replicate);

  const GridSpec& grid() const { return grid_; }
  const WindowSpec& window() const { return window_; }
  const std::optional<ThinningSpec>& thinning() const { return thinning_; }

  const BoxTape& tape(const BoxIndex& b) const;
  int count(const BoxIndex& b) const;

  // Realized points of a box (after thinning, when configured).
  // Pre-thinning indices of the surviving points come along for gradients.
  std::vector<Point> box_points(const BoxIndex& b) const;
  std::vector<std::pair<Point, int>> box_points_indexed(const BoxIndex& b) const;

  Environment thin(const ThinningSpec& spec) const;
  Environment flip_bit(const BoxIndex& b, int j, int value) const;  // j is 1-based
  Environment resample_box(const BoxIndex& b, const MasterSeed& seed, std::uint64_t tag) const;
  // Replaces the location variable U_{b,k} (0-based k); counts unchanged.
  Environment with_uniform(const BoxIndex& b, int k, const Point& u) const;

  const PointSoup& soup() const;
  std::int64_t total_points() const;

  void export_snapshot(std::ostream& os) const;
  static Environment import_snapshot(std::istream& is);

 private:
  GridSpec grid_;
  WindowSpec window_;
  std::optional<ThinningSpec> thinning_;
  std::vector<std::shared_ptr<const BoxTape>> tapes_;  // by flat window index

  struct SoupCache {
    std::once_flag once;
    PointSoup soup;
  };
  mutable std::shared_ptr<SoupCache> soup_cache_ = std::make_shared<SoupCache>();

  void build_soup(PointSoup& out) const;
};

Environment sample_environment(const GridSpec& grid, const WindowSpec& window,
                               const MasterSeed& seed, std::uint32_t replicate);
Environment thin_to_Qn(const Environment& env, const ThinningSpec& spec);

// Tape-level helpers for estimator fast paths that must avoid building
// whole environments.
BoxTape sample_box_tape(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                        int dim);
std::vector<std::pair<Point, int>> realized_box_points(const BoxTape& tape, const BoxIndex& box,
                                                       int dim,
                                                       const std::optional<ThinningSpec>& thinning);
BoxTape flipped_tape(const BoxTape& tape, int j, int value, int dim);

}  // namespace efpp
