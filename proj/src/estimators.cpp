#include "efpp/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "efpp/experiment.hpp"
#include "efpp/ring_scan.hpp"

namespace efpp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PhiParams ExperimentConfig::phi(double n) const { return PhiParams::make(alpha, h0, h1, n); }

ThinningSpec ExperimentConfig::thinning(double n) const { return ThinningSpec::make(epsilon_k, n); }

int ExperimentConfig::gamma_radius(double n) const {
  return static_cast<int>(std::floor(std::pow(n, 1.0 / (4.0 * alpha))));
}

WindowSpec ExperimentConfig::window(double n) const {
  const double g = gamma_radius(n);
  const double m = (window_margin_x >= 0.0 ? window_margin_x : std::max(10.0, n / 4.0)) *
                   margin_scale;
  const double w = (window_half_width >= 0.0 ? window_half_width : std::max(10.0, n / 2.0)) *
                   margin_scale;
  WindowSpec win;
  win.lo[0] = -static_cast<std::int32_t>(std::ceil(m + g));
  win.hi[0] = static_cast<std::int32_t>(std::ceil(n + m + g));
  for (int i = 1; i < dim; ++i) {
    win.lo[i] = -static_cast<std::int32_t>(std::ceil(w + g));
    win.hi[i] = static_cast<std::int32_t>(std::ceil(w + g));
  }
  return win;
}

std::vector<BoxIndex> ExperimentConfig::gamma_translates(double n) const {
  const int g = gamma_radius(n);
  std::vector<BoxIndex> out;
  const int zlo = (dim == 3) ? -g : 0;
  const int zhi = (dim == 3) ? g : 0;
  for (int x = -g; x <= g; ++x) {
    for (int y = -g; y <= g; ++y) {
      for (int z = zlo; z <= zhi; ++z) out.push_back(make_box(x, y, z));
    }
  }
  return out;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  if (!(alpha > 1.0)) errors.push_back("alpha must exceed 1");
  if (!(h0 >= 1.0)) errors.push_back("h0 must be at least 1");
  if (!(h1 >= h0)) errors.push_back("h1 must be at least h0");
  if (dim != 2 && dim != 3) errors.push_back("dim must be 2 or 3");
  if (epsilon_k <= 0 || epsilon_k % 2 == 0) {
    errors.push_back("epsilon_k must be an odd positive integer");
  }
  if (replicates < 2) errors.push_back("replicates must be at least 2");
  if (n_values.empty()) errors.push_back("n_values must be nonempty");
  for (double n : n_values) {
    if (!(n >= 1.0)) {
      errors.push_back("every n must be at least 1");
      break;
    }
  }
  if (workers < 0) errors.push_back("workers must be nonnegative");
  if (influence_band < 0.0) errors.push_back("influence_band must be nonnegative");
  if (!(margin_scale > 0.0)) errors.push_back("margin_scale must be positive");
  if (errors.empty()) {
    // The window must cover every averaging translate of both endpoints.
    for (double n : n_values) {
      const WindowSpec win = window(n);
      const int g = gamma_radius(n);
      const Point far_lo = make_point(-g, -g, dim == 3 ? -g : 0.0);
      const Point far_hi = make_point(n + g, g, dim == 3 ? g : 0.0);
      if (!win.contains_point(far_lo, dim) || !win.contains_point(far_hi, dim)) {
        errors.push_back("window does not cover the averaging translates");
        break;
      }
    }
  }
  return errors;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

VarianceEstimate summarize_variance(std::span<const double> samples) {
  VarianceEstimate est;
  const int m = static_cast<int>(samples.size());
  est.count = m;
  if (m < 2) throw std::invalid_argument("summarize_variance: need at least 2 samples");
  double s1 = 0.0, s2 = 0.0;
  for (double x : samples) {
    s1 += x;
    s2 += x * x;
  }
  est.mean = s1 / m;
  est.variance = std::max(0.0, (s2 - s1 * s1 / m) / (m - 1));
  if (m >= 3) {
    std::vector<double> loo(static_cast<std::size_t>(m));
    double jk_mean = 0.0;
    for (int i = 0; i < m; ++i) {
      const double x = samples[static_cast<std::size_t>(i)];
      const double s1i = s1 - x;
      const double s2i = s2 - x * x;
      loo[static_cast<std::size_t>(i)] = std::max(0.0, (s2i - s1i * s1i / (m - 1)) / (m - 2));
      jk_mean += loo[static_cast<std::size_t>(i)];
    }
    jk_mean /= m;
    double ss = 0.0;
    for (double v : loo) ss += (v - jk_mean) * (v - jk_mean);
    est.stderr_variance = std::sqrt(ss * (m - 1) / m);
  }
  return est;
}

namespace {

struct ReplicateScene {
  Environment env;      // raw process
  Environment thinned;  // Q_n
  PhiParams phi;
  ThinningSpec spec;
  Point a, b;  // 0 and n e1

  EnvironmentView t_view() const {
    EnvironmentView v;
    v.base = &env;
    v.phi = phi;
    v.cost_mode = CostMode::euclid_power;
    return v;
  }
  EnvironmentView tprime_view() const {
    EnvironmentView v = t_view();
    v.extra_endpoints = {a, b};
    return v;
  }
  EnvironmentView tpp_view() const {
    EnvironmentView v;
    v.base = &thinned;
    v.phi = phi;
    v.cost_mode = CostMode::phi;
    return v;
  }
};

ReplicateScene make_scene(const ExperimentConfig& config, double n, int replicate) {
  ReplicateScene s;
  s.env = Environment::sample(GridSpec{config.dim}, config.window(n), config.seed,
                              static_cast<std::uint32_t>(replicate));
  s.phi = config.phi(n);
  s.spec = config.thinning(n);
  s.thinned = s.env.thin(s.spec);
  s.a = Point{};
  s.b = make_point(n, 0.0);
  return s;
}

double fn_average(const ExperimentConfig& config, const ReplicateScene& s, double n) {
  const auto translates = config.gamma_translates(n);
  const EnvironmentView v = s.tpp_view();
  double acc = 0.0;
  for (const BoxIndex& z : translates) {
    const Point offset = make_point(z.c[0], z.c[1], z.c[2]);
    acc += passage_time(v, offset, offset + make_point(n, 0.0)).passage_time;
  }
  return acc / static_cast<double>(translates.size());
}

}  // namespace

double variance_replicate_value(const ExperimentConfig& config, VarTarget target, double n,
                                int replicate) {
  const ReplicateScene s = make_scene(config, n, replicate);
  switch (target) {
    case VarTarget::T:
      return passage_time(s.t_view(), s.a, s.b).passage_time;
    case VarTarget::T_PRIME:
      return passage_time(s.tprime_view(), s.a, s.b).passage_time;
    case VarTarget::T_PP:
      return passage_time(s.tpp_view(), s.a, s.b).passage_time;
    case VarTarget::F_N:
      return fn_average(config, s, n);
  }
  return 0.0;
}

double tpp_replicate_value(const ExperimentConfig& config, double n, int replicate) {
  return variance_replicate_value(config, VarTarget::T_PP, n, replicate);
}

VarianceEstimate estimate_variance(const ExperimentConfig& config, VarTarget target, double n) {
  if (config.replicates < 2) throw std::invalid_argument("estimate_variance: replicates < 2");
  std::vector<double> samples(static_cast<std::size_t>(config.replicates));
  parallel_for(config.replicates, config.workers, [&](int r) {
    samples[static_cast<std::size_t>(r)] = variance_replicate_value(config, target, n, r);
  });
  return summarize_variance(samples);
}

namespace {

// Band of boxes around the segment [0, n e1] whose resampling influence is
// measured; everything further contributes zero at desk scale.
std::vector<BoxIndex> influence_region(const ExperimentConfig& config, double n) {
  const int band = static_cast<int>(std::floor(config.influence_band));
  const int xlo = -band;
  const int xhi = static_cast<int>(std::ceil(n)) + band;
  std::vector<BoxIndex> out;
  const int zlo = (config.dim == 3) ? -band : 0;
  const int zhi = (config.dim == 3) ? band : 0;
  for (int x = xlo; x <= xhi; ++x) {
    for (int y = -band; y <= band; ++y) {
      for (int z = zlo; z <= zhi; ++z) out.push_back(make_box(x, y, z));
    }
  }
  return out;
}

bool same_points(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == b[i])) return false;
  }
  return true;
}

// Least d(q) + cost(q, p) over vertices q of a solved field; unsettled
// vertices are credited the field threshold, a valid lower bound on their
// distance. Every path into p through old points costs at least this much.
double entry_lower_bound(const SolveWithFieldResult& field, const Environment& thinned,
                         const CostFn& cost, const Point& p,
                         const std::vector<Point>& field_extras) {
  const PointSoup& soup = thinned.soup();
  const WindowSpec& win = thinned.window();
  const int dim = thinned.grid().dim;
  double best = field.threshold;
  for (std::size_t e = 0; e < field_extras.size(); ++e) {
    const std::size_t idx = soup.points.size() + e;
    if (idx < field.dist.size() && field.settled[idx]) {
      best = std::min(best, field.dist[idx] + cost.at(dist(field_extras[e], p)));
    }
  }
  const BoxIndex center = thinned.grid().box_of(p);
  for (int r = 0;; ++r) {
    if (cost.at(static_cast<double>(std::max(0, r - 1))) >= best) break;
    const bool more = visit_ring_boxes(win, dim, center, r, [&](const BoxIndex& b) {
      const std::int64_t flat = win.flat_index(b, dim);
      const auto begin = soup.box_begin[static_cast<std::size_t>(flat)];
      const auto end = soup.box_begin[static_cast<std::size_t>(flat) + 1];
      for (auto i = begin; i < end; ++i) {
        if (!field.settled[static_cast<std::size_t>(i)]) continue;
        const double v = field.dist[static_cast<std::size_t>(i)] +
                         cost.at2(dist2(soup.points[static_cast<std::size_t>(i)], p));
        if (v < best) best = v;
      }
    });
    if (!more) break;
  }
  return best;
}

// True when no path through any of the new points can beat the optimum, so
// the resampled passage time provably equals the original.
bool certified_no_gain(const std::vector<Point>& new_points, const SolveWithFieldResult& fwd,
                       const SolveWithFieldResult& bwd, double optimum, const Environment& thinned,
                       const CostFn& cost, const std::vector<Point>& fwd_extras,
                       const std::vector<Point>& bwd_extras) {
  double enter = kInf, exit = kInf;
  for (const Point& p : new_points) {
    enter = std::min(enter, entry_lower_bound(fwd, thinned, cost, p, fwd_extras));
    exit = std::min(exit, entry_lower_bound(bwd, thinned, cost, p, bwd_extras));
  }
  return enter + exit >= optimum;
}

}  // namespace

std::vector<BoxIndex> influence_region_boxes(const ExperimentConfig& config, double n) {
  return influence_region(config, n);
}

std::vector<double> influence_replicate_row(const ExperimentConfig& config, double n,
                                            int replicate, const std::vector<BoxIndex>& region) {
  const auto translates = config.gamma_translates(n);
  const int r = replicate;
  std::vector<double> result_row;
  {
    const ReplicateScene s = make_scene(config, n, r);
    const EnvironmentView view = s.tpp_view();
    const CostFn cost = view.cost();
    const Point ne1 = make_point(n, 0.0);

    const std::size_t zc = translates.size();
    std::vector<SolveWithFieldResult> fwd(zc), bwd(zc);
    std::vector<GeodesicStats> stats(zc);
    std::vector<Point> za(zc), zb(zc);
    for (std::size_t zi = 0; zi < zc; ++zi) {
      const BoxIndex& z = translates[zi];
      za[zi] = make_point(z.c[0], z.c[1], z.c[2]);
      zb[zi] = za[zi] + ne1;
      fwd[zi] = solve_with_field(view, za[zi], zb[zi]);
      bwd[zi] = solve_with_field(view, zb[zi], za[zi]);
      stats[zi] = geodesic_stats(view, fwd[zi].path);
    }

    std::vector<double>& row = result_row;
    row.assign(region.size(), 0.0);
    for (std::size_t bi = 0; bi < region.size(); ++bi) {
      const BoxIndex& box = region[bi];
      // The tape alone decides whether the surgery changes any points; the
      // resampled environment is only materialized for full recomputes.
      const BoxTape tape2 = sample_box_tape(config.seed.derive(1), static_cast<std::uint32_t>(r),
                                            box, config.dim);
      std::vector<Point> new_points;
      for (const auto& [p, kk] : realized_box_points(tape2, box, config.dim, s.spec)) {
        new_points.push_back(p);
      }
      const std::vector<Point> old_points = s.thinned.box_points(box);
      if (same_points(new_points, old_points)) continue;

      std::optional<Environment> thinned2;
      double delta_sum = 0.0;
      for (std::size_t zi = 0; zi < zc; ++zi) {
        const bool used = stats[zi].uses(box);
        if (!used && new_points.empty()) continue;
        if (!used && certified_no_gain(new_points, fwd[zi], bwd[zi],
                                       fwd[zi].path.passage_time, s.thinned, cost,
                                       {za[zi], zb[zi]}, {zb[zi], za[zi]})) {
          continue;
        }
        if (!thinned2) {
          thinned2 = s.env.resample_box(box, config.seed, 1).thin(s.spec);
        }
        EnvironmentView view2 = view;
        view2.base = &*thinned2;
        const double t2 = passage_time(view2, za[zi], zb[zi]).passage_time;
        delta_sum += t2 - fwd[zi].path.passage_time;
      }
      row[bi] = std::abs(delta_sum / static_cast<double>(zc));
    }
  }
  return result_row;
}

InfluenceReport estimate_influences(const ExperimentConfig& config, double n) {
  const std::vector<BoxIndex> region = influence_region(config, n);
  const int m = config.replicates;
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m));
  parallel_for(m, config.workers, [&](int r) {
    rows[static_cast<std::size_t>(r)] = influence_replicate_row(config, n, r, region);
  });

  InfluenceReport report;
  report.boxes = region;
  report.mean_abs_delta.assign(region.size(), 0.0);
  report.samples.assign(region.size(), m);
  std::vector<double> per_box_sq(region.size(), 0.0);
  std::vector<double> rep_sums(static_cast<std::size_t>(m), 0.0);
  for (int r = 0; r < m; ++r) {
    for (std::size_t bi = 0; bi < region.size(); ++bi) {
      const double v = rows[static_cast<std::size_t>(r)][bi];
      report.mean_abs_delta[bi] += v;
      per_box_sq[bi] += v * v;
      rep_sums[static_cast<std::size_t>(r)] += v;
    }
  }
  for (std::size_t bi = 0; bi < region.size(); ++bi) {
    report.mean_abs_delta[bi] /= m;
  }
  std::size_t arg_max = 0;
  for (std::size_t bi = 0; bi < region.size(); ++bi) {
    report.sum += report.mean_abs_delta[bi];
    if (report.mean_abs_delta[bi] > report.mean_abs_delta[arg_max]) arg_max = bi;
  }
  report.max = report.mean_abs_delta[arg_max];
  if (m >= 2) {
    double s1 = 0.0, s2 = 0.0;
    for (double v : rep_sums) {
      s1 += v;
      s2 += v * v;
    }
    report.sum_stderr = std::sqrt(std::max(0.0, (s2 - s1 * s1 / m) / (m - 1)) / m);
    const double mb = report.mean_abs_delta[arg_max];
    const double var_b =
        std::max(0.0, (per_box_sq[arg_max] - static_cast<double>(m) * mb * mb) / (m - 1));
    report.max_stderr = std::sqrt(var_b / m);
  }
  return report;
}

double entropy_plugin(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("entropy_plugin: no samples");
  double sum = 0.0, sum_xlogx = 0.0;
  for (double x : samples) {
    if (x < 0.0) throw std::invalid_argument("entropy_plugin: negative sample");
    sum += x;
    if (x > 0.0) sum_xlogx += x * std::log(x);
  }
  const double m = static_cast<double>(samples.size());
  const double mean = sum / m;
  if (mean == 0.0) return 0.0;
  return sum_xlogx / m - mean * std::log(mean);
}

std::size_t ProductSpace::total() const {
  std::size_t t = 1;
  for (int s : sizes) t *= static_cast<std::size_t>(s);
  return t;
}

FSReport fs_check_exact(const ProductSpace& space, const std::vector<double>& z_table) {
  if (space.sizes.empty() || space.sizes.size() > 4) {
    throw std::invalid_argument("fs_check_exact: need 1..4 factors");
  }
  for (int s : space.sizes) {
    if (s < 1 || s > 4) throw std::invalid_argument("fs_check_exact: factor sizes must be 1..4");
  }
  const std::size_t total = space.total();
  if (z_table.size() != total) throw std::invalid_argument("fs_check_exact: malformed Z table");

  FSReport report;
  const double inv_total = 1.0 / static_cast<double>(total);
  double mean = 0.0, mean_sq = 0.0;
  for (double z : z_table) {
    mean += z * inv_total;
    mean_sq += z * z * inv_total;
  }
  report.variance = std::max(0.0, mean_sq - mean * mean);

  // Conditional means over prefixes. The first factor varies fastest, so
  // the first i coordinates are the low part of the index:
  //   cond[i][p] = mean over q of Z[p + prefix_i * q].
  const int k = static_cast<int>(space.sizes.size());
  std::vector<std::vector<double>> cond(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) {
    std::size_t prefix = 1;
    for (int j = 0; j < i; ++j) prefix *= static_cast<std::size_t>(space.sizes[static_cast<std::size_t>(j)]);
    const std::size_t suffix = total / prefix;
    std::vector<double> table(prefix, 0.0);
    for (std::size_t p = 0; p < prefix; ++p) {
      double acc = 0.0;
      for (std::size_t q = 0; q < suffix; ++q) acc += z_table[p + prefix * q];
      table[p] = acc / static_cast<double>(suffix);
    }
    cond[static_cast<std::size_t>(i)] = std::move(table);
  }

  for (int i = 1; i <= k; ++i) {
    const std::vector<double>& ei = cond[static_cast<std::size_t>(i)];
    const std::vector<double>& em = cond[static_cast<std::size_t>(i) - 1];
    std::size_t prefix_m = em.size();
    const double inv = 1.0 / static_cast<double>(ei.size());
    double mean_abs = 0.0, mean_v2 = 0.0, mean_v2_log = 0.0;
    for (std::size_t idx = 0; idx < ei.size(); ++idx) {
      const double v = ei[idx] - em[idx % prefix_m];
      const double v2 = v * v;
      mean_abs += std::abs(v) * inv;
      mean_v2 += v2 * inv;
      if (v2 > 0.0) mean_v2_log += v2 * std::log(v2) * inv;
    }
    report.sum_sq_mean_abs += mean_abs * mean_abs;
    if (mean_v2 > 0.0) {
      report.sum_ent_sq += mean_v2_log - mean_v2 * std::log(mean_v2);
    }
  }

  if (report.variance <= 0.0 || report.sum_sq_mean_abs <= 0.0) {
    report.vacuous = true;
    report.lhs = 0.0;
    report.slack = report.sum_ent_sq;
    return report;
  }
  report.lhs = report.variance * std::log(report.variance / report.sum_sq_mean_abs);
  report.slack = report.sum_ent_sq - report.lhs;
  return report;
}

double logsobolev_hypercube_slack(int m, const std::vector<double>& f_table) {
  if (m < 1 || m > 12) throw std::invalid_argument("logsobolev_hypercube_check: m must be 1..12");
  const std::size_t total = std::size_t{1} << m;
  if (f_table.size() != total) {
    throw std::invalid_argument("logsobolev_hypercube_check: table size must be 2^m");
  }
  const double inv = 1.0 / static_cast<double>(total);
  double mean_f2 = 0.0, mean_f2_log = 0.0, rhs = 0.0;
  for (std::size_t x = 0; x < total; ++x) {
    const double f2 = f_table[x] * f_table[x];
    mean_f2 += f2 * inv;
    if (f2 > 0.0) mean_f2_log += f2 * std::log(f2) * inv;
    for (int i = 0; i < m; ++i) {
      const double d = f_table[x | (std::size_t{1} << i)] - f_table[x & ~(std::size_t{1} << i)];
      rhs += d * d * inv;
    }
  }
  const double ent = (mean_f2 > 0.0) ? (mean_f2_log - mean_f2 * std::log(mean_f2)) : 0.0;
  return rhs - ent;
}

bool logsobolev_hypercube_check(int m, const std::vector<double>& f_table) {
  const double slack = logsobolev_hypercube_slack(m, f_table);
  double scale = 1.0;
  for (double v : f_table) scale = std::max(scale, v * v);
  return slack >= -1e-12 * scale * m;
}

std::pair<double, double> derivative_sums_replicate(const ExperimentConfig& config, double n,
                                                    int replicate) {
  const int r = replicate;
  {
    const ReplicateScene s = make_scene(config, n, r);
    const EnvironmentView view = s.tpp_view();
    const CostFn cost = view.cost();
    const SolveWithFieldResult fwd = solve_with_field(view, s.a, s.b);
    const SolveWithFieldResult bwd = solve_with_field(view, s.b, s.a);
    const GeodesicStats stats = geodesic_stats(view, fwd.path);
    const double base = fwd.path.passage_time;

    // Positional gradients vanish off the geodesic, so the lattice-wide sum
    // reduces to the interior path vertices.
    double grad_acc = 0.0;
    const auto& verts = fwd.path.vertices;
    for (std::size_t i = 1; i + 1 < verts.size(); ++i) {
      Point g;
      for (int side : {-1, 1}) {
        const Point& nb = verts[static_cast<std::size_t>(static_cast<long>(i) + side)];
        const std::size_t seg = (side < 0) ? i - 1 : i;
        if (fwd.path.segment_costs[seg] == 0.0) continue;
        const double len = dist(verts[i], nb);
        g = g + (cost.derivative(len) / len) * (verts[i] - nb);
      }
      grad_acc += g.c[0] * g.c[0] + g.c[1] * g.c[1] + g.c[2] * g.c[2];
    }

    // Bernoulli derivatives: flip each decodable bit of each box tape; bits
    // beyond the stabilization depth cannot change the count.
    double bit_acc = 0.0;
    const WindowSpec& win = s.env.window();
    const std::int64_t nbox = win.box_count(config.dim);
    for (std::int64_t f = 0; f < nbox; ++f) {
      const BoxIndex box = win.box_at(f, config.dim);
      const BoxTape& tape = s.env.tape(box);
      const std::vector<Point> old_points = s.thinned.box_points(box);
      for (int j = 1; j <= tape.stable_len; ++j) {
        const int cur = tape.bits[static_cast<std::size_t>(j - 1)];
        const BoxTape tape2 = flipped_tape(tape, j, 1 - cur, config.dim);
        if (tape2.count == tape.count) continue;  // realized points unchanged
        std::vector<Point> new_points;
        for (const auto& [p, kk] : realized_box_points(tape2, box, config.dim, s.spec)) {
          new_points.push_back(p);
        }

        bool skip = false;
        if (new_points.size() < old_points.size()) {
          // Removal: passage time is unchanged unless a removed point is a
          // vertex of the geodesic.
          bool removed_on_path = false;
          for (const Point& p : old_points) {
            bool still = false;
            for (const Point& q : new_points) {
              if (q == p) {
                still = true;
                break;
              }
            }
            if (still) continue;
            for (const Point& v : fwd.path.vertices) {
              if (v == p) {
                removed_on_path = true;
                break;
              }
            }
            if (removed_on_path) break;
          }
          skip = !removed_on_path;
        } else if (new_points.size() > old_points.size()) {
          std::vector<Point> added;
          for (const Point& p : new_points) {
            bool was = false;
            for (const Point& q : old_points) {
              if (q == p) {
                was = true;
                break;
              }
            }
            if (!was) added.push_back(p);
          }
          skip = certified_no_gain(added, fwd, bwd, base, s.thinned, cost, {s.a, s.b},
                                   {s.b, s.a});
        }
        if (skip) continue;

        const Environment thinned2 = s.env.flip_bit(box, j, 1 - cur).thin(s.spec);
        EnvironmentView view2 = view;
        view2.base = &thinned2;
        const double flipped_time = passage_time(view2, s.a, s.b).passage_time;
        const double delta = flipped_time - base;
        bit_acc += delta * delta;
      }
    }
    return {grad_acc, bit_acc};
  }
}

DerivativeSumsReport derivative_sums(const ExperimentConfig& config, double n) {
  const int m = config.replicates;
  std::vector<double> grad_rows(static_cast<std::size_t>(m), 0.0);
  std::vector<double> bit_rows(static_cast<std::size_t>(m), 0.0);
  parallel_for(m, config.workers, [&](int r) {
    const auto [g, b] = derivative_sums_replicate(config, n, r);
    grad_rows[static_cast<std::size_t>(r)] = g;
    bit_rows[static_cast<std::size_t>(r)] = b;
  });

  DerivativeSumsReport report;
  report.replicates = m;
  auto mean_se = [m](const std::vector<double>& xs, double& mean, double& se) {
    double s1 = 0.0, s2 = 0.0;
    for (double x : xs) {
      s1 += x;
      s2 += x * x;
    }
    mean = s1 / m;
    se = (m >= 2) ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / m) / (m - 1)) / m) : 0.0;
  };
  mean_se(grad_rows, report.gradient_sum, report.gradient_sum_stderr);
  mean_se(bit_rows, report.bit_sum, report.bit_sum_stderr);
  return report;
}

std::vector<double> sample_tpp(const ExperimentConfig& config, double n, int count) {
  std::vector<double> samples(static_cast<std::size_t>(count));
  parallel_for(count, config.workers, [&](int r) {
    samples[static_cast<std::size_t>(r)] = tpp_replicate_value(config, n, r);
  });
  return samples;
}

TailReport tail_fit(std::span<const double> samples, double n, double dim, double alpha,
                    double envelope_c1) {
  if (samples.size() < 1000) throw std::invalid_argument("tail_fit: need at least 1000 samples");
  TailReport report;
  report.n = n;
  report.kappa = std::min(1.0, dim / alpha);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const std::size_t idx =
      std::min(m - 1, static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(m))) - 1);
  report.p999 = sorted[idx];
  report.envelope_c1 = (envelope_c1 > 0.0) ? envelope_c1 : report.p999 / n;
  report.within_envelope = report.p999 <= report.envelope_c1 * n * (1.0 + 1e-12);
  const std::size_t stride = std::max<std::size_t>(1, m / 200);
  for (std::size_t i = 0; i < m; i += stride) {
    const double surv = static_cast<double>(m - i) / static_cast<double>(m);
    report.survival_x.push_back(sorted[i]);
    report.survival_logp.push_back(std::log(surv));
  }
  return report;
}

bool equality_replicate(const ExperimentConfig& config, double n, int replicate) {
  const ReplicateScene s = make_scene(config, n, replicate);
  const double tprime = passage_time(s.tprime_view(), s.a, s.b).passage_time;
  const double tpp = passage_time(s.tpp_view(), s.a, s.b).passage_time;
  const double scale = std::max({1.0, std::abs(tprime), std::abs(tpp)});
  return std::abs(tprime - tpp) <= 1e-9 * scale;
}

double equality_rate(const ExperimentConfig& config, double n) {
  const int m = config.replicates;
  std::vector<std::uint8_t> equal(static_cast<std::size_t>(m), 0);
  parallel_for(m, config.workers, [&](int r) {
    equal[static_cast<std::size_t>(r)] = equality_replicate(config, n, r);
  });
  double acc = 0.0;
  for (auto e : equal) acc += e;
  return acc / static_cast<double>(m);
}

}  // namespace efpp
