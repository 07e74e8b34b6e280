#pragma once

#include <functional>
#include <vector>

#include "efpp/geometry.hpp"

namespace efpp {

/// A face-connected set of unit boxes containing the origin box, kept in
/// sorted order as its canonical form.
using LatticeAnimal = std::vector<BoxIndex>;

bool animal_is_connected(const LatticeAnimal& animal);

/// Nonnegative box weights; boxes outside the map weigh zero.
using AnimalWeights = std::function<double(const BoxIndex&)>;

/// All origin-containing animals of exactly m boxes in d = 2, each once.
std::vector<LatticeAnimal> enumerate_animals(int d, int m);

/// Independent count of origin-containing animals of size m (free-growth
/// backtracking in the style of Redelmeier); oracle for the enumeration.
std::int64_t count_animals_redelmeier(int d, int m);

/// Exact maximum weight sum over origin animals of size m (d = 2, m <= 8),
/// with the lexicographically least attaining animal.
std::pair<double, LatticeAnimal> animal_max_exact(const AnimalWeights& weights, int m, int d = 2);

/// Greedy frontier expansion: always absorb the heaviest boundary box
/// (ties by box order). A lower bound for the exact maximum; any d, any m.
std::pair<double, LatticeAnimal> animal_max_greedy(const AnimalWeights& weights, int m, int d = 2);

}  // namespace efpp
