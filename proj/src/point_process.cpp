#include "efpp/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace efpp {
namespace {

constexpr int kMaxTapeBits = 128;
constexpr double kMinThinningCell = 0x1.0p-30;

struct PoissonTable {
  std::array<double, 40> cdf{};
  int saturated_at = 0;

  PoissonTable() {
    double term = std::exp(-1.0);  // e^{-1} / 0!
    double acc = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
      acc += term;
      if (acc > 1.0) acc = 1.0;
      cdf[k] = acc;
      term /= static_cast<double>(k + 1);
    }
    // Force exact saturation so icdf(1.0) terminates.
    saturated_at = static_cast<int>(cdf.size()) - 1;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
      if (cdf[k] >= 1.0) {
        saturated_at = static_cast<int>(k);
        break;
      }
    }
    for (std::size_t k = static_cast<std::size_t>(saturated_at); k < cdf.size(); ++k) cdf[k] = 1.0;
  }
};

const PoissonTable& poisson_table() {
  static const PoissonTable table;
  return table;
}

}  // namespace

double poisson1_cdf(int k) {
  if (k < 0) return 0.0;
  const auto& t = poisson_table();
  if (k >= static_cast<int>(t.cdf.size())) return 1.0;
  return t.cdf[static_cast<std::size_t>(k)];
}

int poisson1_icdf(double t) {
  if (t < 0.0 || t > 1.0) throw std::domain_error("poisson1_icdf: t outside [0,1]");
  const auto& table = poisson_table();
  int k = 0;
  while (table.cdf[static_cast<std::size_t>(k)] < t) ++k;
  return k;
}

namespace {

double prefix_value(const std::vector<std::uint8_t>& bits, std::size_t len) {
  double t = 0.0;
  double w = 0.5;
  for (std::size_t i = 0; i < len; ++i) {
    if (bits[i]) t += w;
    w *= 0.5;
  }
  return t;
}

// Returns true plus the count when the decode no longer depends on bits
// beyond `len`.
bool decode_stable(const std::vector<std::uint8_t>& bits, std::size_t len, int& count) {
  const double t_low = prefix_value(bits, len);
  const double t_high = t_low + std::ldexp(1.0, -static_cast<int>(len));
  const int lo = poisson1_icdf(t_low);
  if (lo != poisson1_icdf(std::min(t_high, 1.0))) return false;
  count = lo;
  return true;
}

std::uint8_t stream_bit(const BoxTape& tape, std::size_t index) {
  if (!tape.has_stream) {
    throw std::runtime_error("BoxTape: frozen snapshot tape cannot be extended");
  }
  return static_cast<std::uint8_t>(substream_bit(tape.stream_seed, tape.stream_replicate,
                                                 tape.box, TapeKind::count_bits,
                                                 static_cast<std::uint32_t>(index)));
}

Point stream_uniform(const BoxTape& tape, std::size_t index, int dim) {
  if (!tape.has_stream) {
    throw std::runtime_error("BoxTape: frozen snapshot tape lacks uniforms for its count");
  }
  Point u;
  for (int c = 0; c < dim; ++c) {
    u.c[c] = substream_unit(tape.stream_seed, tape.stream_replicate, tape.box,
                            TapeKind::uniforms, static_cast<std::uint32_t>(index),
                            static_cast<std::uint32_t>(c));
  }
  return u;
}

// Extends the bit prefix until the decoded count stabilizes, then realizes
// enough uniforms for the count.
void finalize_tape(BoxTape& tape, int dim) {
  std::size_t len = tape.bits.size();
  int count = 0;
  // An existing prefix may already stabilize at some shorter length.
  std::size_t stable = 0;
  bool done = false;
  for (std::size_t l = 1; l <= len; ++l) {
    if (decode_stable(tape.bits, l, count)) {
      stable = l;
      done = true;
      break;
    }
  }
  while (!done) {
    if (len >= kMaxTapeBits) {
      throw std::runtime_error("BoxTape: count decode exceeded 128-bit tape cap");
    }
    tape.bits.push_back(stream_bit(tape, len));
    ++len;
    if (decode_stable(tape.bits, len, count)) {
      stable = len;
      done = true;
    }
  }
  tape.count = count;
  tape.stable_len = static_cast<int>(stable);
  while (static_cast<int>(tape.uniforms.size()) < count) {
    tape.uniforms.push_back(stream_uniform(tape, tape.uniforms.size(), dim));
  }
}

}  // namespace

int decode_poisson_count(const std::vector<std::uint8_t>& omega_prefix) {
  int count = 0;
  if (!decode_stable(omega_prefix, omega_prefix.size(), count)) {
    throw std::invalid_argument("decode_poisson_count: prefix too short to determine the count");
  }
  return count;
}

int leading_ones(const BoxTape& tape) {
  int run = 0;
  for (std::size_t i = 0;; ++i) {
    std::uint8_t bit;
    if (i < tape.bits.size()) {
      bit = tape.bits[i];
    } else if (tape.has_stream) {
      if (i >= kMaxTapeBits) break;
      bit = stream_bit(tape, i);
    } else {
      break;
    }
    if (!bit) break;
    ++run;
  }
  return run;
}

ThinningSpec ThinningSpec::make(int k_odd, double n) {
  if (k_odd <= 0 || k_odd % 2 == 0) {
    throw std::domain_error("ThinningSpec: epsilon must be 1/k for odd positive k");
  }
  if (!(n >= 0.0)) throw std::domain_error("ThinningSpec: n must be >= 0");
  ThinningSpec s;
  s.epsilon = 1.0 / static_cast<double>(k_odd);
  s.n = n;
  s.cell = std::max(s.epsilon * std::exp(-n * std::log(3.0)), kMinThinningCell);
  return s;
}

bool WindowSpec::contains_box(const BoxIndex& b, int dim) const {
  for (int i = 0; i < dim; ++i) {
    if (b.c[i] < lo[i] || b.c[i] > hi[i]) return false;
  }
  return true;
}

bool WindowSpec::contains_point(const Point& p, int dim) const {
  for (int i = 0; i < dim; ++i) {
    if (p.c[i] < lo[i] - 0.5 || p.c[i] >= hi[i] + 0.5) return false;
  }
  return true;
}

std::int64_t WindowSpec::box_count(int dim) const {
  std::int64_t n = 1;
  for (int i = 0; i < dim; ++i) n *= (hi[i] - lo[i] + 1);
  return n;
}

std::int64_t WindowSpec::flat_index(const BoxIndex& b, int dim) const {
  std::int64_t idx = 0;
  for (int i = dim - 1; i >= 0; --i) {
    idx = idx * (hi[i] - lo[i] + 1) + (b.c[i] - lo[i]);
  }
  return idx;
}

BoxIndex WindowSpec::box_at(std::int64_t flat, int dim) const {
  BoxIndex b;
  for (int i = 0; i < dim; ++i) {
    const std::int64_t span = hi[i] - lo[i] + 1;
    b.c[i] = static_cast<std::int32_t>(lo[i] + flat % span);
    flat /= span;
  }
  return b;
}

Environment Environment::sample(const GridSpec& grid, const WindowSpec& window,
                                const MasterSeed& seed, std::uint32_t replicate) {
  for (int i = 0; i < grid.dim; ++i) {
    if (window.lo[i] > window.hi[i]) throw std::invalid_argument("sample_environment: empty window");
  }
  Environment env;
  env.grid_ = grid;
  env.window_ = window;
  const std::int64_t nbox = window.box_count(grid.dim);
  env.tapes_.resize(static_cast<std::size_t>(nbox));
  for (std::int64_t f = 0; f < nbox; ++f) {
    auto tape = std::make_shared<BoxTape>();
    tape->has_stream = true;
    tape->stream_seed = seed;
    tape->stream_replicate = replicate;
    tape->box = window.box_at(f, grid.dim);
    finalize_tape(*tape, grid.dim);
    env.tapes_[static_cast<std::size_t>(f)] = std::move(tape);
  }
  return env;
}

const BoxTape& Environment::tape(const BoxIndex& b) const {
  if (!window_.contains_box(b, grid_.dim)) {
    throw std::out_of_range("Environment: box outside window");
  }
  return *tapes_[static_cast<std::size_t>(window_.flat_index(b, grid_.dim))];
}

int Environment::count(const BoxIndex& b) const { return tape(b).count; }

std::vector<std::pair<Point, int>> realized_box_points(const BoxTape& tape, const BoxIndex& b,
                                                       int dim,
                                                       const std::optional<ThinningSpec>& thinning) {
  std::vector<std::pair<Point, int>> pts;
  pts.reserve(static_cast<std::size_t>(tape.count));
  Point corner;
  for (int i = 0; i < dim; ++i) corner.c[i] = b.c[i] - 0.5;
  for (int k = 0; k < tape.count; ++k) {
    pts.emplace_back(corner + tape.uniforms[static_cast<std::size_t>(k)], k);
  }
  if (!thinning || pts.size() <= 1) return pts;

  // Keep the left-most point per thinning cell (full lexicographic order on
  // ties). Cells are anchored at the box corner, so they nest in the box.
  const double cell = thinning->cell;
  auto cell_key = [&](const Point& p) {
    std::array<std::int64_t, 3> key{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      key[a] = static_cast<std::int64_t>(std::floor((p.c[a] - corner.c[a]) / cell));
    }
    return key;
  };
  std::map<std::array<std::int64_t, 3>, std::size_t> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto [it, inserted] = best.try_emplace(cell_key(pts[i].first), i);
    if (!inserted && lex_less(pts[i].first, pts[it->second].first)) it->second = i;
  }
  std::vector<std::pair<Point, int>> kept;
  kept.reserve(best.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (best.at(cell_key(pts[i].first)) == i) kept.push_back(pts[i]);
  }
  return kept;
}

std::vector<std::pair<Point, int>> Environment::box_points_indexed(const BoxIndex& b) const {
  return realized_box_points(tape(b), b, grid_.dim, thinning_);
}

std::vector<Point> Environment::box_points(const BoxIndex& b) const {
  std::vector<Point> out;
  for (const auto& [p, k] : box_points_indexed(b)) out.push_back(p);
  return out;
}

Environment Environment::thin(const ThinningSpec& spec) const {
  Environment env(*this);
  env.thinning_ = spec;
  env.soup_cache_ = std::make_shared<SoupCache>();
  return env;
}

Environment Environment::flip_bit(const BoxIndex& b, int j, int value) const {
  if (j < 1) throw std::domain_error("flip_bit: bit positions are 1-based");
  if (j > kMaxTapeBits) throw std::out_of_range("flip_bit: position beyond the 128-bit cap");
  const BoxTape& old = tape(b);
  const std::size_t pos = static_cast<std::size_t>(j - 1);
  if (pos < old.bits.size() && old.bits[pos] == static_cast<std::uint8_t>(value)) {
    return *this;  // flipping to the current value changes nothing
  }
  auto next = std::make_shared<BoxTape>(old);
  while (next->bits.size() < static_cast<std::size_t>(j)) {
    next->bits.push_back(stream_bit(*next, next->bits.size()));
  }
  if (next->bits[pos] == static_cast<std::uint8_t>(value)) return *this;
  next->bits[pos] = static_cast<std::uint8_t>(value);
  finalize_tape(*next, grid_.dim);

  Environment env(*this);
  env.tapes_[static_cast<std::size_t>(window_.flat_index(b, grid_.dim))] = std::move(next);
  env.soup_cache_ = std::make_shared<SoupCache>();
  return env;
}

Environment Environment::with_uniform(const BoxIndex& b, int k, const Point& u) const {
  const BoxTape& old = tape(b);
  if (k < 0 || k >= static_cast<int>(old.uniforms.size())) {
    throw std::out_of_range("with_uniform: no such location variable");
  }
  for (int i = 0; i < grid_.dim; ++i) {
    if (u.c[i] < 0.0 || u.c[i] >= 1.0) {
      throw std::domain_error("with_uniform: location must lie in [0,1)^d");
    }
  }
  auto next = std::make_shared<BoxTape>(old);
  next->uniforms[static_cast<std::size_t>(k)] = u;

  Environment env(*this);
  env.tapes_[static_cast<std::size_t>(window_.flat_index(b, grid_.dim))] = std::move(next);
  env.soup_cache_ = std::make_shared<SoupCache>();
  return env;
}

Environment Environment::resample_box(const BoxIndex& b, const MasterSeed& seed,
                                      std::uint64_t tag) const {
  const BoxTape& old = tape(b);
  auto next = std::make_shared<BoxTape>();
  next->has_stream = true;
  next->stream_seed = seed.derive(tag);
  next->stream_replicate = old.has_stream ? old.stream_replicate : 0;
  next->box = b;
  finalize_tape(*next, grid_.dim);

  Environment env(*this);
  env.tapes_[static_cast<std::size_t>(window_.flat_index(b, grid_.dim))] = std::move(next);
  env.soup_cache_ = std::make_shared<SoupCache>();
  return env;
}

void Environment::build_soup(PointSoup& out) const {
  const std::int64_t nbox = window_.box_count(grid_.dim);
  out.box_begin.assign(static_cast<std::size_t>(nbox) + 1, 0);
  out.points.clear();
  out.box_of_point.clear();
  out.index_in_box.clear();
  for (std::int64_t f = 0; f < nbox; ++f) {
    out.box_begin[static_cast<std::size_t>(f)] = static_cast<std::int32_t>(out.points.size());
    const BoxIndex b = window_.box_at(f, grid_.dim);
    for (const auto& [p, k] : box_points_indexed(b)) {
      out.points.push_back(p);
      out.box_of_point.push_back(b);
      out.index_in_box.push_back(k);
    }
  }
  out.box_begin[static_cast<std::size_t>(nbox)] = static_cast<std::int32_t>(out.points.size());
}

const PointSoup& Environment::soup() const {
  std::call_once(soup_cache_->once, [this] { build_soup(soup_cache_->soup); });
  return soup_cache_->soup;
}

std::int64_t Environment::total_points() const {
  return static_cast<std::int64_t>(soup().points.size());
}

void Environment::export_snapshot(std::ostream& os) const {
  os << "efpp-env 1 " << grid_.dim;
  for (int i = 0; i < 3; ++i) os << ' ' << window_.lo[i];
  for (int i = 0; i < 3; ++i) os << ' ' << window_.hi[i];
  if (thinning_) {
    os << " thin " << thinning_->epsilon << ' ' << thinning_->n << ' ';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", thinning_->cell);
    os << buf;
  } else {
    os << " none";
  }
  os << '\n';
  const std::int64_t nbox = window_.box_count(grid_.dim);
  for (std::int64_t f = 0; f < nbox; ++f) {
    const BoxTape& t = *tapes_[static_cast<std::size_t>(f)];
    os << "box " << t.box.c[0] << ' ' << t.box.c[1] << ' ' << t.box.c[2] << ' ';
    for (std::uint8_t bit : t.bits) os << (bit ? '1' : '0');
    if (t.bits.empty()) os << '-';
    os << ' ' << t.uniforms.size();
    char buf[32];
    for (const Point& u : t.uniforms) {
      for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", u.c[c]);
        os << (c == 0 ? " " : ",") << buf;
      }
    }
    os << '\n';
  }
}

Environment Environment::import_snapshot(std::istream& is) {
  std::string magic;
  int version = 0;
  Environment env;
  is >> magic >> version >> env.grid_.dim;
  if (magic != "efpp-env" || version != 1) {
    throw std::runtime_error("import_snapshot: unrecognized header");
  }
  for (int i = 0; i < 3; ++i) is >> env.window_.lo[i];
  for (int i = 0; i < 3; ++i) is >> env.window_.hi[i];
  std::string thin_tag;
  is >> thin_tag;
  if (thin_tag == "thin") {
    ThinningSpec spec;
    is >> spec.epsilon >> spec.n >> spec.cell;
    env.thinning_ = spec;
  } else if (thin_tag != "none") {
    throw std::runtime_error("import_snapshot: malformed thinning field");
  }
  const std::int64_t nbox = env.window_.box_count(env.grid_.dim);
  env.tapes_.resize(static_cast<std::size_t>(nbox));
  for (std::int64_t f = 0; f < nbox; ++f) {
    std::string tag, bitstring;
    auto t = std::make_shared<BoxTape>();
    std::size_t n_uniform = 0;
    is >> tag >> t->box.c[0] >> t->box.c[1] >> t->box.c[2] >> bitstring >> n_uniform;
    if (tag != "box" || !is) throw std::runtime_error("import_snapshot: malformed box record");
    if (bitstring != "-") {
      for (char ch : bitstring) {
        if (ch != '0' && ch != '1') throw std::runtime_error("import_snapshot: malformed bits");
        t->bits.push_back(ch == '1');
      }
    }
    for (std::size_t k = 0; k < n_uniform; ++k) {
      std::string triple;
      is >> triple;
      Point u;
      if (std::sscanf(triple.c_str(), "%lg,%lg,%lg", &u.c[0], &u.c[1], &u.c[2]) != 3) {
        throw std::runtime_error("import_snapshot: malformed uniform record");
      }
      t->uniforms.push_back(u);
    }
    t->has_stream = false;
    finalize_tape(*t, env.grid_.dim);
    if (env.window_.flat_index(t->box, env.grid_.dim) != f) {
      throw std::runtime_error("import_snapshot: box records out of order");
    }
    env.tapes_[static_cast<std::size_t>(f)] = std::move(t);
  }
  return env;
}

Environment sample_environment(const GridSpec& grid, const WindowSpec& window,
                               const MasterSeed& seed, std::uint32_t replicate) {
  return Environment::sample(grid, window, seed, replicate);
}

Environment thin_to_Qn(const Environment& env, const ThinningSpec& spec) { return env.thin(spec); }

BoxTape sample_box_tape(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                        int dim) {
  BoxTape tape;
  tape.has_stream = true;
  tape.stream_seed = seed;
  tape.stream_replicate = replicate;
  tape.box = box;
  finalize_tape(tape, dim);
  return tape;
}

BoxTape flipped_tape(const BoxTape& tape, int j, int value, int dim) {
  if (j < 1) throw std::domain_error("flipped_tape: bit positions are 1-based");
  if (j > kMaxTapeBits) throw std::out_of_range("flipped_tape: position beyond the 128-bit cap");
  BoxTape copy = tape;
  while (copy.bits.size() < static_cast<std::size_t>(j)) {
    copy.bits.push_back(stream_bit(copy, copy.bits.size()));
  }
  copy.bits[static_cast<std::size_t>(j - 1)] = static_cast<std::uint8_t>(value);
  finalize_tape(copy, dim);
  return copy;
}


}  // namespace efpp
