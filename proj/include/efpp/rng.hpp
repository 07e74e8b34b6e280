#pragma once

#include <cstdint>

#include "efpp/geometry.hpp"

namespace efpp {

/// Root of all randomness. Every random value in the project is a pure
/// function of (seed, replicate, box, tape kind, element index, component),
/// so results do not depend on scheduling or worker count.
struct MasterSeed {
  std::uint64_t value = 0;

  // Derives an independent stream, e.g. for box resampling tags.
  MasterSeed derive(std::uint64_t tag) const;
};

enum class TapeKind : std::uint32_t { count_bits = 0, uniforms = 1 };

std::uint64_t substream_u64(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                            TapeKind kind, std::uint32_t index, std::uint32_t component);

// Uniform in [0, 1), 53 bits.
double substream_unit(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                      TapeKind kind, std::uint32_t index, std::uint32_t component);

// Fair bit.
int substream_bit(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                  TapeKind kind, std::uint32_t index);

// Plain keyed counter stream, for utility draws outside the tape layout.
std::uint64_t counter_u64(std::uint64_t key, std::uint64_t counter);
double counter_unit(std::uint64_t key, std::uint64_t counter);

}  // namespace efpp
