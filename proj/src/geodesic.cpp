#include "efpp/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "efpp/ring_scan.hpp"

namespace efpp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CostFn CostFn::power(double alpha) {
  CostFn f;
  f.alpha = alpha;
  f.cutoff = kInf;
  f.cutoff2 = kInf;
  f.value_at_cutoff = kInf;
  f.slope = 0.0;
  return f;
}

CostFn CostFn::phi(const PhiParams& params) {
  CostFn f;
  f.alpha = params.alpha;
  f.cutoff = params.h_n;
  f.cutoff2 = params.h_n * params.h_n;
  f.value_at_cutoff = std::pow(params.h_n, params.alpha);
  f.slope = params.alpha * std::pow(params.h_n, params.alpha - 1.0);
  return f;
}

double CostFn::at(double t) const {
  if (t <= cutoff) return (alpha == 2.0) ? t * t : std::pow(t, alpha);
  return value_at_cutoff + slope * (t - cutoff);
}

double CostFn::at2(double t2) const {
  if (t2 <= cutoff2) return (alpha == 2.0) ? t2 : std::pow(t2, 0.5 * alpha);
  return value_at_cutoff + slope * (std::sqrt(t2) - cutoff);
}

double CostFn::derivative(double t) const {
  if (t < cutoff) return alpha * std::pow(t, alpha - 1.0);
  return slope;
}

CostFn EnvironmentView::cost() const {
  return cost_mode == CostMode::euclid_power ? CostFn::power(phi.alpha) : CostFn::phi(phi);
}

namespace {

Point clamp_to_box(const Point& p, const BoxIndex& b, int dim) {
  Point q = p;
  for (int i = 0; i < dim; ++i) {
    q.c[i] = std::clamp(p.c[i], b.c[i] - 0.5, b.c[i] + 0.5);
  }
  return q;
}

struct HeapEntry {
  double key;
  std::int32_t vertex;
  std::int32_t ring;  // -1: label pop; >= 0: ring-expansion token

  bool operator>(const HeapEntry& o) const {
    if (key != o.key) return key > o.key;
    if (vertex != o.vertex) return vertex > o.vertex;
    return ring > o.ring;
  }
};

class Solver {
 public:
  Solver(const EnvironmentView& view, const EngineOptions& opts)
      : view_(view),
        env_(*view.base),
        soup_(env_.soup()),
        grid_(env_.grid()),
        win_(env_.window()),
        cost_(view.cost()),
        opts_(opts) {
    extras_ = view.extra_endpoints;
    if (view.emptied_box) {
      if (!win_.contains_box(*view.emptied_box, grid_.dim)) {
        throw std::invalid_argument("EnvironmentView: emptied box outside window");
      }
      emptied_flat_ = win_.flat_index(*view.emptied_box, grid_.dim);
    }
    if (view.free_box) {
      if (!win_.contains_box(*view.free_box, grid_.dim)) {
        throw std::invalid_argument("EnvironmentView: free box outside window");
      }
      free_box_ = *view.free_box;
      free_flat_ = win_.flat_index(free_box_, grid_.dim);
      if (emptied_flat_ == free_flat_) {
        throw std::invalid_argument("EnvironmentView: box cannot be both emptied and free");
      }
      has_super_ = true;
    }
  }

  // Registers a query endpoint as a vertex. Power-cost views with no
  // declared extra endpoints route through the nearest realized point.
  int resolve_endpoint(const Point& p, bool implicit_insert) {
    if (!win_.contains_point(p, grid_.dim)) {
      throw std::invalid_argument("passage_time: endpoint outside the sampled window");
    }
    for (std::size_t i = 0; i < extras_.size(); ++i) {
      if (extras_[i] == p) return point_count() + static_cast<int>(i);
    }
    if (implicit_insert) {
      extras_.push_back(p);
      return point_count() + static_cast<int>(extras_.size()) - 1;
    }
    const Point q = nearest_usable(p);
    const int idx = find_point_index(q);
    if (idx >= 0) return idx;
    extras_.push_back(q);
    return point_count() + static_cast<int>(extras_.size()) - 1;
  }

  int point_count() const { return static_cast<int>(soup_.points.size()); }
  int extra_count() const { return static_cast<int>(extras_.size()); }
  int vertex_count() const { return point_count() + extra_count() + (has_super_ ? 1 : 0); }
  int super_id() const { return point_count() + extra_count(); }
  bool is_super(int v) const { return has_super_ && v == super_id(); }

  Point position(int v) const {
    if (v < point_count()) return soup_.points[static_cast<std::size_t>(v)];
    return extras_[static_cast<std::size_t>(v - point_count())];
  }

  bool usable_point(int i) const {
    if (emptied_flat_ < 0) return true;
    return win_.flat_index(soup_.box_of_point[static_cast<std::size_t>(i)], grid_.dim) !=
           emptied_flat_;
  }

  // Label-setting search from s. In target mode the run stops once t
  // settles; labels and tokens at key >= UB are dropped, which is sound
  // because UB is always the cost of a realized path.
  void run(int s, int t) {
    const int n = vertex_count();
    dist_.assign(static_cast<std::size_t>(n), kInf);
    pred_.assign(static_cast<std::size_t>(n), -1);
    settled_.assign(static_cast<std::size_t>(n), 0);
    ring_done_.assign(static_cast<std::size_t>(n), 0);
    unsettled_in_box_.assign(static_cast<std::size_t>(win_.box_count(grid_.dim)), 0);
    for (int i = 0; i < point_count(); ++i) {
      if (usable_point(i)) {
        ++unsettled_in_box_[static_cast<std::size_t>(
            win_.flat_index(soup_.box_of_point[static_cast<std::size_t>(i)], grid_.dim))];
      }
    }
    target_ = t;
    ub_ = kInf;
    if (t >= 0) seed_greedy_bound(s, t);

    heap_ = {};
    dist_[static_cast<std::size_t>(s)] = 0.0;
    heap_.push({0.0, static_cast<std::int32_t>(s), -1});
    while (!heap_.empty()) {
      const HeapEntry e = heap_.top();
      heap_.pop();
      if (e.key >= upper_bound()) break;
      const int u = e.vertex;
      if (e.ring >= 0) {
        expand_ring(u, e.ring);
        continue;
      }
      if (settled_[static_cast<std::size_t>(u)]) continue;
      if (e.key > dist_[static_cast<std::size_t>(u)]) continue;
      settle(u);
      if (u == t) break;
    }
  }

  double upper_bound() const {
    if (target_ < 0) return kInf;
    return std::min(ub_, dist_[static_cast<std::size_t>(target_)]);
  }

  // The optimum path; falls back to the greedy seed when the search proved
  // it unbeatable.
  std::vector<int> best_sequence(int s, int t) const {
    const double dt = dist_[static_cast<std::size_t>(t)];
    if (!(dt < kInf) && !(ub_ < kInf)) {
      throw std::runtime_error("passage_time: target unreachable");
    }
    if (dt <= ub_) {
      std::vector<int> seq;
      for (int v = t; v >= 0; v = pred_[static_cast<std::size_t>(v)]) seq.push_back(v);
      std::reverse(seq.begin(), seq.end());
      if (seq.front() != s) throw std::runtime_error("passage_time: broken predecessor chain");
      return seq;
    }
    return greedy_seq_;
  }

  PathResult make_result(const std::vector<int>& ids) const {
    PathResult out;
    std::vector<std::pair<Point, bool>> verts;  // (point, reached by free transit)
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int v = ids[i];
      if (!is_super(v)) {
        verts.emplace_back(position(v), false);
        continue;
      }
      const Point prev = position(ids[i - 1]);
      const Point next = position(ids[i + 1]);
      if (free_box_point_count() > 0) {
        verts.emplace_back(next, true);
        ++i;
      } else {
        verts.emplace_back(clamp_to_box(prev, free_box_, grid_.dim), false);
        verts.emplace_back(clamp_to_box(next, free_box_, grid_.dim), true);
      }
    }
    for (std::size_t i = 0; i < verts.size(); ++i) {
      out.vertices.push_back(verts[i].first);
      if (i == 0) continue;
      const double len = dist(verts[i - 1].first, verts[i].first);
      const double c = verts[i].second ? 0.0 : cost_.at(len);
      out.segment_lengths.push_back(len);
      out.segment_costs.push_back(c);
      out.passage_time += c;
      out.l_max = std::max(out.l_max, len);
    }
    return out;
  }

  const std::vector<double>& distances() const { return dist_; }
  const std::vector<std::uint8_t>& settled_flags() const { return settled_; }

  Point nearest_usable(const Point& x) const {
    const BoxIndex center = grid_.box_of(x);
    double best2 = kInf;
    const Point* best = nullptr;
    for (int r = 0;; ++r) {
      if (best != nullptr && r >= 2 &&
          static_cast<double>(r - 1) * static_cast<double>(r - 1) > best2) {
        break;
      }
      const bool more = visit_ring_boxes(win_, grid_.dim, center, r, [&](const BoxIndex& b) {
        const std::int64_t flat = win_.flat_index(b, grid_.dim);
        if (flat == emptied_flat_) return;
        const auto begin = soup_.box_begin[static_cast<std::size_t>(flat)];
        const auto end = soup_.box_begin[static_cast<std::size_t>(flat) + 1];
        for (auto i = begin; i < end; ++i) {
          const Point& cand = soup_.points[static_cast<std::size_t>(i)];
          const double d2 = dist2(x, cand);
          if (d2 < best2 || (d2 == best2 && best != nullptr && lex_less(cand, *best))) {
            best2 = d2;
            best = &cand;
          }
        }
      });
      if (!more) break;
    }
    if (best == nullptr) throw std::runtime_error("nearest_point: environment has no points");
    return *best;
  }

  int find_point_index(const Point& q) const {
    const BoxIndex b = grid_.box_of(q);
    if (!win_.contains_box(b, grid_.dim)) return -1;
    const std::int64_t flat = win_.flat_index(b, grid_.dim);
    const auto begin = soup_.box_begin[static_cast<std::size_t>(flat)];
    const auto end = soup_.box_begin[static_cast<std::size_t>(flat) + 1];
    for (auto i = begin; i < end; ++i) {
      if (soup_.points[static_cast<std::size_t>(i)] == q) return static_cast<int>(i);
    }
    return -1;
  }

  int free_box_point_count() const {
    if (!has_super_) return 0;
    const auto begin = soup_.box_begin[static_cast<std::size_t>(free_flat_)];
    const auto end = soup_.box_begin[static_cast<std::size_t>(free_flat_) + 1];
    return static_cast<int>(end - begin);
  }

  const CostFn& cost() const { return cost_; }
  const GridSpec& grid() const { return grid_; }

 private:
  void settle(int u) {
    settled_[static_cast<std::size_t>(u)] = 1;
    const double du = dist_[static_cast<std::size_t>(u)];
    if (u < point_count()) {
      --unsettled_in_box_[static_cast<std::size_t>(
          win_.flat_index(soup_.box_of_point[static_cast<std::size_t>(u)], grid_.dim))];
    }
    if (!is_super(u)) {
      for (int e = 0; e < extra_count(); ++e) {
        const int v = point_count() + e;
        if (v == u || settled_[static_cast<std::size_t>(v)]) continue;
        relax(v, du + cost_.at2(dist2(position(u), extras_[static_cast<std::size_t>(e)])), u);
      }
      if (has_super_ && !settled_[static_cast<std::size_t>(super_id())]) {
        relax_supernode_from(u, du);
      }
    } else {
      relax_from_supernode(du);
    }
    expand_ring(u, 0);
    expand_ring(u, 1);
    push_token(u, 2, du);
  }

  void relax_supernode_from(int u, double du) {
    const Point pu = position(u);
    const int s = super_id();
    if (grid_.box_of(pu) == free_box_) {
      relax(s, du, u);
      return;
    }
    if (free_box_point_count() == 0) {
      relax(s, du + cost_.at(grid_.dist_to_box(pu, free_box_)), u);
    }
  }

  void relax_from_supernode(double du) {
    const int s = super_id();
    for (int e = 0; e < extra_count(); ++e) {
      const int v = point_count() + e;
      if (settled_[static_cast<std::size_t>(v)]) continue;
      const Point pe = extras_[static_cast<std::size_t>(e)];
      if (grid_.box_of(pe) == free_box_) {
        relax(v, du, s);
      } else if (free_box_point_count() == 0) {
        relax(v, du + cost_.at(grid_.dist_to_box(pe, free_box_)), s);
      }
    }
  }

  // Ring-r candidates for u. Tokens keep the search exact: ring r of u is
  // examined once the frontier reaches key dist(u) + cost(max(0, r-1)), a
  // lower bound for every edge from u into ring r or beyond.
  void expand_ring(int u, int r) {
    if (ring_done_[static_cast<std::size_t>(u)]) return;
    const double du = dist_[static_cast<std::size_t>(u)];
    const BoxIndex center = ring_center(u);
    const bool from_super = is_super(u);
    const Point pu = from_super ? Point{} : position(u);
    const bool super_connects_everywhere = from_super && free_box_point_count() == 0;
    const bool more = visit_ring_boxes(win_, grid_.dim, center, r, [&](const BoxIndex& b) {
      const std::int64_t flat = win_.flat_index(b, grid_.dim);
      if (flat == emptied_flat_) return;
      if (from_super && !super_connects_everywhere && flat != free_flat_) return;
      if (unsettled_in_box_[static_cast<std::size_t>(flat)] == 0) return;
      const auto begin = soup_.box_begin[static_cast<std::size_t>(flat)];
      const auto end = soup_.box_begin[static_cast<std::size_t>(flat) + 1];
      for (auto i = begin; i < end; ++i) {
        const int v = static_cast<int>(i);
        if (v == u || settled_[static_cast<std::size_t>(i)]) continue;
        double nd;
        if (from_super) {
          nd = (flat == free_flat_)
                   ? du
                   : du + cost_.at(grid_.dist_to_box(soup_.points[static_cast<std::size_t>(i)],
                                                     free_box_));
        } else {
          const double t2 = dist2(pu, soup_.points[static_cast<std::size_t>(i)]);
          if (opts_.w_region_pruning && t2 > 4.0 &&
              has_strict_improver(pu, soup_.points[static_cast<std::size_t>(i)], t2)) {
            continue;
          }
          nd = du + cost_.at2(t2);
        }
        relax(v, nd, u);
      }
    });
    if (!more) {
      ring_done_[static_cast<std::size_t>(u)] = 1;
      return;
    }
    if (r >= 2) push_token(u, r + 1, du);
  }

  BoxIndex ring_center(int u) const {
    if (is_super(u)) return free_box_;
    if (u < point_count()) return soup_.box_of_point[static_cast<std::size_t>(u)];
    return grid_.box_of(extras_[static_cast<std::size_t>(u - point_count())]);
  }

  void push_token(int u, int r, double du) {
    if (ring_done_[static_cast<std::size_t>(u)]) return;
    const double key = du + cost_.at(static_cast<double>(std::max(0, r - 1)));
    if (key >= upper_bound()) return;
    heap_.push({key, static_cast<std::int32_t>(u), static_cast<std::int32_t>(r)});
  }

  // Optional sound pruning: an edge with a strictly improving interior
  // point near its midpoint is never on an optimal path.
  bool has_strict_improver(const Point& a, const Point& b, double t2) const {
    const double direct = cost_.at2(t2);
    const Point mid = 0.5 * (a + b);
    const BoxIndex mb = grid_.box_of(mid);
    for (int r = 0; r <= 1; ++r) {
      bool found = false;
      visit_ring_boxes(win_, grid_.dim, mb, r, [&](const BoxIndex& bx) {
        if (found) return;
        const std::int64_t flat = win_.flat_index(bx, grid_.dim);
        if (flat == emptied_flat_) return;
        const auto begin = soup_.box_begin[static_cast<std::size_t>(flat)];
        const auto end = soup_.box_begin[static_cast<std::size_t>(flat) + 1];
        for (auto i = begin; i < end; ++i) {
          const Point& w = soup_.points[static_cast<std::size_t>(i)];
          if (w == a || w == b) continue;
          if (cost_.at2(dist2(a, w)) + cost_.at2(dist2(w, b)) < direct) {
            found = true;
            return;
          }
        }
      });
      if (found) return true;
    }
    return false;
  }

  void relax(int v, double nd, int from) {
    if (nd >= upper_bound() && v != target_) return;
    double& dv = dist_[static_cast<std::size_t>(v)];
    if (nd < dv) {
      dv = nd;
      pred_[static_cast<std::size_t>(v)] = from;
      heap_.push({nd, static_cast<std::int32_t>(v), -1});
    } else if (nd == dv && pred_[static_cast<std::size_t>(v)] >= 0 &&
               pred_[static_cast<std::size_t>(v)] != from) {
      // Exact tie: keep the lexicographically smaller vertex sequence.
      if (tie_prefers(from, pred_[static_cast<std::size_t>(v)], v)) {
        pred_[static_cast<std::size_t>(v)] = from;
      }
    }
  }

  bool tie_prefers(int challenger, int incumbent, int v) const {
    std::vector<Point> a = chain_points(challenger);
    std::vector<Point> b = chain_points(incumbent);
    a.push_back(is_super(v) ? grid_.box_center(free_box_) : position(v));
    b.push_back(a.back());
    return std::lexicographical_compare(
        a.begin(), a.end(), b.begin(), b.end(),
        [](const Point& x, const Point& y) { return lex_less(x, y); });
  }

  std::vector<Point> chain_points(int v) const {
    std::vector<Point> pts;
    for (int w = v; w >= 0; w = pred_[static_cast<std::size_t>(w)]) {
      pts.push_back(is_super(w) ? grid_.box_center(free_box_) : position(w));
    }
    std::reverse(pts.begin(), pts.end());
    return pts;
  }

  // A feasible path from greedy forward hops; its cost seeds the upper
  // bound so ring expansion stays local from the first settle on.
  void seed_greedy_bound(int s, int t) {
    const Point pt = position(t);
    Point cur = position(s);
    int cur_id = s;
    std::vector<int> seq{s};
    double total = 0.0;
    const double guide = 1.5 * cost_.at(1.0);
    int hops = static_cast<int>(dist(cur, pt) * 4.0) + 16;
    while (hops-- > 0) {
      const double remaining = dist(cur, pt);
      if (remaining <= 1.5) break;
      int best = -1;
      double best_score = kInf;
      const BoxIndex cb = grid_.box_of(cur);
      for (int r = 0; r <= 2; ++r) {
        visit_ring_boxes(win_, grid_.dim, cb, r, [&](const BoxIndex& b) {
          const std::int64_t flat = win_.flat_index(b, grid_.dim);
          if (flat == emptied_flat_) return;
          const auto begin = soup_.box_begin[static_cast<std::size_t>(flat)];
          const auto end = soup_.box_begin[static_cast<std::size_t>(flat) + 1];
          for (auto i = begin; i < end; ++i) {
            if (static_cast<int>(i) == cur_id) continue;
            const Point& p = soup_.points[static_cast<std::size_t>(i)];
            const double to_t = dist(p, pt);
            if (to_t > remaining - 0.25) continue;
            const double score = cost_.at2(dist2(cur, p)) + guide * to_t;
            if (score < best_score) {
              best_score = score;
              best = static_cast<int>(i);
            }
          }
        });
      }
      if (best < 0) break;
      total += cost_.at2(dist2(cur, soup_.points[static_cast<std::size_t>(best)]));
      cur = soup_.points[static_cast<std::size_t>(best)];
      cur_id = best;
      seq.push_back(best);
    }
    if (cur_id != t) {
      total += cost_.at2(dist2(cur, pt));
      seq.push_back(t);
    }
    ub_ = total;
    greedy_seq_ = std::move(seq);
  }

  const EnvironmentView& view_;
  const Environment& env_;
  const PointSoup& soup_;
  GridSpec grid_;
  WindowSpec win_;
  CostFn cost_;
  EngineOptions opts_;

  std::vector<Point> extras_;
  std::int64_t emptied_flat_ = -1;
  std::int64_t free_flat_ = -1;
  BoxIndex free_box_;
  bool has_super_ = false;

  int target_ = -1;
  double ub_ = kInf;
  std::vector<int> greedy_seq_;
  std::vector<double> dist_;
  std::vector<std::int32_t> pred_;
  std::vector<std::uint8_t> settled_;
  std::vector<std::uint8_t> ring_done_;
  std::vector<std::int32_t> unsettled_in_box_;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap_;

  friend class BruteForce;
};

PathResult single_vertex_result(const Point& a) {
  PathResult r;
  r.vertices = {a};
  return r;
}

bool endpoints_inserted(const EnvironmentView& view) {
  return view.cost_mode == CostMode::phi || !view.extra_endpoints.empty();
}

// Depth-first enumeration of all simple vertex sequences. Revisits never
// help: dropping a loop only removes nonnegative terms.
class BruteForce {
 public:
  BruteForce(const EnvironmentView& view, Solver& solver) : view_(view), solver_(solver) {
    for (int i = 0; i < solver.point_count(); ++i) {
      if (solver.usable_point(i)) interior_.push_back(i);
    }
    if (interior_.size() > 8) {
      throw std::invalid_argument("brute_force_passage_time: more than 8 usable points");
    }
    if (view.free_box) interior_.push_back(solver.super_id());
  }

  std::vector<int> solve(int s, int t) {
    seq_ = {s};
    used_.assign(interior_.size(), false);
    for (std::size_t i = 0; i < interior_.size(); ++i) {
      if (interior_[i] == s || interior_[i] == t) used_[i] = true;
    }
    best_cost_ = kInf;
    best_seq_.clear();
    extend(s, 0.0, t);
    return best_seq_;
  }

 private:
  double edge_cost(int u, int v) const {
    const bool su = solver_.is_super(u);
    const bool sv = solver_.is_super(v);
    if (su || sv) {
      const int other = su ? v : u;
      const Point p = solver_.position(other);
      const GridSpec& grid = solver_.grid();
      if (grid.box_of(p) == *view_.free_box) return 0.0;
      if (solver_.free_box_point_count() == 0) {
        return solver_.cost().at(grid.dist_to_box(p, *view_.free_box));
      }
      return kInf;  // nonempty free box connects only through its points
    }
    return solver_.cost().at2(dist2(solver_.position(u), solver_.position(v)));
  }

  void extend(int u, double acc, int t) {
    const double finish = edge_cost(u, t);
    if (finish < kInf) consider(acc + finish, t);
    if (acc >= best_cost_) return;
    for (std::size_t i = 0; i < interior_.size(); ++i) {
      if (used_[i] || interior_[i] == u) continue;
      const double c = edge_cost(u, interior_[i]);
      if (c == kInf || acc + c > best_cost_) continue;
      used_[i] = true;
      seq_.push_back(interior_[i]);
      extend(interior_[i], acc + c, t);
      seq_.pop_back();
      used_[i] = false;
    }
  }

  void consider(double total, int t) {
    seq_.push_back(t);
    bool better = total < best_cost_;
    if (!better && total == best_cost_) {
      const std::vector<Point> cand = to_points(seq_);
      const std::vector<Point> inc = to_points(best_seq_);
      better = std::lexicographical_compare(
          cand.begin(), cand.end(), inc.begin(), inc.end(),
          [](const Point& x, const Point& y) { return lex_less(x, y); });
    }
    if (better) {
      best_cost_ = total;
      best_seq_ = seq_;
    }
    seq_.pop_back();
  }

  std::vector<Point> to_points(const std::vector<int>& ids) const {
    std::vector<Point> pts;
    for (int v : ids) {
      pts.push_back(solver_.is_super(v) ? solver_.grid().box_center(*view_.free_box)
                                        : solver_.position(v));
    }
    return pts;
  }

  const EnvironmentView& view_;
  Solver& solver_;
  std::vector<int> interior_;
  std::vector<bool> used_;
  std::vector<int> seq_;
  std::vector<int> best_seq_;
  double best_cost_ = kInf;
};

}  // namespace

Point nearest_point(const Environment& env, const Point& x) {
  EnvironmentView view;
  view.base = &env;
  view.cost_mode = CostMode::euclid_power;
  Solver solver(view, {});
  return solver.nearest_usable(x);
}

PathResult passage_time(const EnvironmentView& view, const Point& a, const Point& b,
                        const EngineOptions& opts) {
  if (view.base == nullptr) throw std::invalid_argument("passage_time: view has no environment");
  if (a == b) return single_vertex_result(a);
  Solver solver(view, opts);
  const bool insert = endpoints_inserted(view);
  const int s = solver.resolve_endpoint(a, insert);
  const int t = solver.resolve_endpoint(b, insert);
  if (s == t) return single_vertex_result(solver.position(s));
  solver.run(s, t);
  return solver.make_result(solver.best_sequence(s, t));
}

SolveWithFieldResult solve_with_field(const EnvironmentView& view, const Point& a, const Point& b,
                                      const EngineOptions& opts) {
  if (view.base == nullptr) {
    throw std::invalid_argument("solve_with_field: view has no environment");
  }
  Solver solver(view, opts);
  const bool insert = endpoints_inserted(view);
  SolveWithFieldResult out;
  if (a == b) {
    out.path = single_vertex_result(a);
    out.dist.assign(static_cast<std::size_t>(solver.vertex_count()), 0.0);
    out.settled.assign(out.dist.size(), 0);
    return out;
  }
  const int s = solver.resolve_endpoint(a, insert);
  const int t = solver.resolve_endpoint(b, insert);
  solver.run(s, t);
  out.path = solver.make_result(solver.best_sequence(s, t));
  out.threshold = out.path.passage_time;
  out.dist = solver.distances();
  out.settled = solver.settled_flags();
  return out;
}

double modified_passage_time(const Environment& env, const PhiParams& params,
                             const ThinningSpec& spec, const BoxIndex& box, BoxMode mode,
                             const EngineOptions& opts) {
  if (!env.window().contains_box(box, env.grid().dim)) {
    throw std::invalid_argument("modified_passage_time: box outside window");
  }
  const Environment thinned = env.thin(spec);
  EnvironmentView view;
  view.base = &thinned;
  view.phi = params;
  view.cost_mode = CostMode::phi;
  if (mode == BoxMode::empty_box) {
    view.emptied_box = box;
  } else {
    view.free_box = box;
  }
  return passage_time(view, Point{}, make_point(params.n, 0.0), opts).passage_time;
}

PathResult brute_force_passage_time(const EnvironmentView& view, const Point& a, const Point& b) {
  if (view.base == nullptr) throw std::invalid_argument("brute_force: view has no environment");
  if (a == b) return single_vertex_result(a);
  Solver solver(view, {});
  const bool insert = endpoints_inserted(view);
  const int s = solver.resolve_endpoint(a, insert);
  const int t = solver.resolve_endpoint(b, insert);
  if (s == t) return single_vertex_result(solver.position(s));
  BruteForce bf(view, solver);
  return solver.make_result(bf.solve(s, t));
}

GeodesicStats geodesic_stats(const EnvironmentView& view, const PathResult& path) {
  GeodesicStats stats;
  const GridSpec& grid = view.base->grid();
  std::unordered_map<BoxIndex, bool, BoxIndexHash> seen;
  if (path.vertices.size() == 1) {
    const BoxIndex b = grid.box_of(path.vertices[0]);
    seen.emplace(b, true);
    stats.boxes_touched.push_back(b);
  }
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    for (const BoxIndex& b : traverse_segment(grid, path.vertices[i], path.vertices[i + 1])) {
      if (seen.emplace(b, true).second) stats.boxes_touched.push_back(b);
    }
  }
  for (std::size_t i = 0; i < path.vertices.size(); ++i) {
    const Point& v = path.vertices[i];
    const BoxIndex b = grid.box_of(v);
    auto [it, fresh] = stats.usage.try_emplace(b);
    if (fresh) {
      stats.boxes_used.push_back(b);
      it->second.s_minus = v;
      it->second.r_minus = (i == 0) ? v : path.vertices[i - 1];
    }
    it->second.s_plus = v;
    it->second.r_plus = (i + 1 == path.vertices.size()) ? v : path.vertices[i + 1];
  }
  return stats;
}

Point grad_wrt_point(const EnvironmentView& view, const PathResult& path, const BoxIndex& box,
                     int k) {
  const Environment& env = *view.base;
  const BoxTape& tape = env.tape(box);
  if (k < 0 || k >= tape.count) {
    throw std::out_of_range("grad_wrt_point: point index exceeds box count");
  }
  Point corner;
  for (int i = 0; i < env.grid().dim; ++i) corner.c[i] = box.c[i] - 0.5;
  const Point target = corner + tape.uniforms[static_cast<std::size_t>(k)];

  Point grad;
  const CostFn cost = view.cost();
  for (std::size_t i = 0; i < path.vertices.size(); ++i) {
    if (!(path.vertices[i] == target)) continue;
    if (i > 0 && path.segment_costs[i - 1] > 0.0) {
      const Point& nb = path.vertices[i - 1];
      const double len = dist(target, nb);
      grad = grad + (cost.derivative(len) / len) * (target - nb);
    }
    if (i + 1 < path.vertices.size() && path.segment_costs[i] > 0.0) {
      const Point& nb = path.vertices[i + 1];
      const double len = dist(target, nb);
      grad = grad + (cost.derivative(len) / len) * (target - nb);
    }
    break;
  }
  return grad;
}

}  // namespace efpp
