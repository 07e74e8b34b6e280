#include <doctest.h>

#include "efpp/animals.hpp"

using namespace efpp;

TEST_CASE("enumeration counts and structure") {
  CHECK(enumerate_animals(2, 1).size() == 1);
  CHECK(enumerate_animals(2, 2).size() == 4);
  CHECK(enumerate_animals(2, 3).size() == 18);
  CHECK(enumerate_animals(2, 4).size() == 76);
  CHECK(count_animals_redelmeier(2, 5) == 315);
  for (const LatticeAnimal& a : enumerate_animals(2, 4)) {
    CHECK(animal_is_connected(a));
    bool origin = false;
    for (const BoxIndex& b : a) origin |= (b == BoxIndex{});
    CHECK(origin);
  }
  CHECK_THROWS_AS(enumerate_animals(2, 9), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_animals(3, 3), std::invalid_argument);
}

TEST_CASE("exact maximum on simple weight fields") {
  const AnimalWeights ones = [](const BoxIndex&) { return 1.0; };
  const auto [v, a] = animal_max_exact(ones, 3);
  CHECK(v == 3.0);
  CHECK(a.size() == 3);

  // One heavy neighbor: the size-2 maximum picks it.
  const AnimalWeights heavy = [](const BoxIndex& b) {
    return b == make_box(1, 0) ? 9.0 : (b == BoxIndex{} ? 0.0 : 0.0);
  };
  const auto [v2, a2] = animal_max_exact(heavy, 2);
  CHECK(v2 == 9.0);
  CHECK(a2 == LatticeAnimal{BoxIndex{}, make_box(1, 0)});
}

TEST_CASE("greedy growth is feasible and tie-deterministic") {
  const AnimalWeights ones = [](const BoxIndex&) { return 1.0; };
  const auto [v, a] = animal_max_greedy(ones, 5);
  CHECK(v == 5.0);  // all-equal weights make greedy optimal
  CHECK(animal_is_connected(a));
  const auto [v2, a2] = animal_max_greedy(ones, 5);
  CHECK(a == a2);

  std::uint64_t state = 0x1234;
  const AnimalWeights noisy = [&state](const BoxIndex& b) {
    std::uint64_t h = state;
    for (int i = 0; i < 3; ++i) h = h * 6364136223846793005ULL + static_cast<std::uint64_t>(b.c[i]);
    return static_cast<double>(h % 97) / 97.0;
  };
  for (int m = 2; m <= 6; ++m) {
    const double exact = animal_max_exact(noisy, m).first;
    const double greedy = animal_max_greedy(noisy, m).first;
    CHECK(greedy <= exact + 1e-12);
  }
}

TEST_CASE("exact maximum grows with m") {
  const AnimalWeights w = [](const BoxIndex& b) {
    return 1.0 / (1.0 + std::abs(b.c[0]) + std::abs(b.c[1]));
  };
  double prev = 0.0;
  for (int m = 1; m <= 6; ++m) {
    const double v = animal_max_exact(w, m).first;
    CHECK(v >= prev);
    prev = v;
  }
}
