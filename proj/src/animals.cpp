#include "efpp/animals.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace efpp {
namespace {

std::vector<BoxIndex> face_neighbors(const BoxIndex& b, int d) {
  std::vector<BoxIndex> out;
  out.reserve(static_cast<std::size_t>(2 * d));
  for (int axis = 0; axis < d; ++axis) {
    for (int step : {-1, 1}) {
      BoxIndex n = b;
      n.c[axis] += step;
      out.push_back(n);
    }
  }
  return out;
}

void check_enumeration_args(int d, int m) {
  if (d != 2) throw std::invalid_argument("enumerate_animals: exact enumeration supports d = 2");
  if (m < 1 || m > 8) throw std::invalid_argument("enumerate_animals: m must be in 1..8");
}

// Connected-subgraph enumeration with a forbidden set: each candidate may
// only be added by the branch that first exposed it, so every animal is
// produced exactly once.
void grow(std::vector<BoxIndex>& cells, std::set<BoxIndex>& in_set,
          std::vector<BoxIndex> frontier, std::set<BoxIndex> forbidden, int m, int d,
          const std::function<void(const std::vector<BoxIndex>&)>& emit) {
  if (static_cast<int>(cells.size()) == m) {
    emit(cells);
    return;
  }
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const BoxIndex cand = frontier[i];
    cells.push_back(cand);
    in_set.insert(cand);
    std::vector<BoxIndex> frontier_next(frontier.begin() + static_cast<long>(i) + 1,
                                        frontier.end());
    for (const BoxIndex& nb : face_neighbors(cand, d)) {
      if (in_set.count(nb) || forbidden.count(nb)) continue;
      bool dup = false;
      for (const BoxIndex& f : frontier_next) {
        if (f == nb) {
          dup = true;
          break;
        }
      }
      if (!dup) frontier_next.push_back(nb);
    }
    grow(cells, in_set, std::move(frontier_next), forbidden, m, d, emit);
    forbidden.insert(cand);  // later branches may never re-add this box
    in_set.erase(cand);
    cells.pop_back();
  }
}

}  // namespace

bool animal_is_connected(const LatticeAnimal& animal) {
  if (animal.empty()) return false;
  std::set<BoxIndex> remaining(animal.begin(), animal.end());
  std::vector<BoxIndex> stack{animal.front()};
  remaining.erase(animal.front());
  int d = 3;
  while (!stack.empty()) {
    const BoxIndex cur = stack.back();
    stack.pop_back();
    for (const BoxIndex& nb : face_neighbors(cur, d)) {
      auto it = remaining.find(nb);
      if (it != remaining.end()) {
        stack.push_back(nb);
        remaining.erase(it);
      }
    }
  }
  return remaining.empty();
}

std::vector<LatticeAnimal> enumerate_animals(int d, int m) {
  check_enumeration_args(d, m);
  std::vector<LatticeAnimal> out;
  std::vector<BoxIndex> cells{make_box(0, 0)};
  std::set<BoxIndex> in_set{make_box(0, 0)};
  const auto emit = [&](const std::vector<BoxIndex>& a) {
    LatticeAnimal canon = a;
    std::sort(canon.begin(), canon.end());
    out.push_back(std::move(canon));
  };
  if (m == 1) {
    emit(cells);
  } else {
    grow(cells, in_set, face_neighbors(make_box(0, 0), d), {}, m, d, emit);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Counts fixed polyominoes of size m via lattice-site backtracking over a
// canonical ordering, then rescales: each fixed shape of m cells has m
// translates containing the origin box.
std::int64_t count_fixed(int d, int m) {
  if (d != 2) throw std::invalid_argument("count_animals_redelmeier: d = 2 only");
  // Redelmeier's scheme: sites are numbered in reading order on a half
  // plane; growth may only use sites numbered above the first cell.
  const int width = 2 * m + 1;
  auto site_id = [&](const BoxIndex& b) { return b.c[1] * width + b.c[0]; };
  std::int64_t count = 0;
  std::set<BoxIndex> occupied;
  std::function<void(std::vector<BoxIndex>&, std::size_t, int)> rec =
      [&](std::vector<BoxIndex>& untried, std::size_t start, int size) {
        for (std::size_t i = start; i < untried.size(); ++i) {
          const BoxIndex cell = untried[i];
          if (size + 1 == m) {
            ++count;
            continue;
          }
          occupied.insert(cell);
          std::vector<BoxIndex> next = untried;
          next.erase(next.begin() + static_cast<long>(i));
          const std::size_t next_start = i;
          for (const BoxIndex& nb : face_neighbors(cell, 2)) {
            if (site_id(nb) <= 0) continue;  // below the root in reading order
            if (occupied.count(nb)) continue;
            bool present = false;
            for (const BoxIndex& u : next) {
              if (u == nb) {
                present = true;
                break;
              }
            }
            if (!present) next.push_back(nb);
          }
          rec(next, next_start, size + 1);
          occupied.erase(cell);
        }
      };
  if (m == 1) {
    count = 1;
  } else {
    std::vector<BoxIndex> untried;
    occupied.insert(make_box(0, 0));
    for (const BoxIndex& nb : face_neighbors(make_box(0, 0), 2)) {
      if (site_id(nb) > 0) untried.push_back(nb);
    }
    rec(untried, 0, 1);
  }
  return count;
}

}  // namespace

std::int64_t count_animals_redelmeier(int d, int m) {
  check_enumeration_args(d, m);
  return count_fixed(d, m) * static_cast<std::int64_t>(m);
}

std::pair<double, LatticeAnimal> animal_max_exact(const AnimalWeights& weights, int m, int d) {
  const std::vector<LatticeAnimal> all = enumerate_animals(d, m);
  double best = -1.0;
  const LatticeAnimal* arg = nullptr;
  for (const LatticeAnimal& a : all) {
    double w = 0.0;
    for (const BoxIndex& b : a) w += weights(b);
    if (w > best || arg == nullptr) {
      best = w;
      arg = &a;
    }
    // Enumeration is sorted, so the first attaining animal is the
    // lexicographically least.
  }
  return {best, *arg};
}

std::pair<double, LatticeAnimal> animal_max_greedy(const AnimalWeights& weights, int m, int d) {
  if (m < 1) throw std::invalid_argument("animal_max_greedy: m must be >= 1");
  LatticeAnimal cells{BoxIndex{}};
  std::set<BoxIndex> in_set{BoxIndex{}};
  std::set<BoxIndex> frontier;
  for (const BoxIndex& nb : face_neighbors(BoxIndex{}, d)) frontier.insert(nb);
  double total = weights(BoxIndex{});
  for (int step = 1; step < m; ++step) {
    const BoxIndex* pick = nullptr;
    double best = -1.0;
    for (const BoxIndex& cand : frontier) {
      const double w = weights(cand);
      if (pick == nullptr || w > best) {
        best = w;
        pick = &cand;
      }
    }
    const BoxIndex chosen = *pick;
    total += best;
    cells.push_back(chosen);
    in_set.insert(chosen);
    frontier.erase(chosen);
    for (const BoxIndex& nb : face_neighbors(chosen, d)) {
      if (!in_set.count(nb)) frontier.insert(nb);
    }
  }
  std::sort(cells.begin(), cells.end());
  return {total, cells};
}

}  // namespace efpp
