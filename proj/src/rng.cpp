#include "efpp/rng.hpp"

#include <array>
#include <stdexcept>

namespace efpp {
namespace {

// Philox 4x32-10 (Salmon et al., SC 2011).
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, ctr[0], hi0, lo0);
    mul_hi_lo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Injective packing of box coordinates into 63 bits; 21 bits per axis.
constexpr std::int32_t kBoxCoordLimit = 1 << 20;

std::uint64_t pack_box(const BoxIndex& box) {
  std::uint64_t packed = 0;
  for (int i = 0; i < 3; ++i) {
    const std::int32_t c = box.c[i];
    if (c <= -kBoxCoordLimit || c >= kBoxCoordLimit) {
      throw std::out_of_range("substream: box coordinate out of packable range");
    }
    packed |= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c + kBoxCoordLimit) &
                                         0x1FFFFFu)
              << (21 * i);
  }
  return packed;
}

}  // namespace

MasterSeed MasterSeed::derive(std::uint64_t tag) const {
  return MasterSeed{splitmix64(value ^ splitmix64(tag + 0x51ED2701A1B2C3D4ULL))};
}

std::uint64_t substream_u64(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                            TapeKind kind, std::uint32_t index, std::uint32_t component) {
  if (replicate >= (1u << 24)) throw std::out_of_range("substream: replicate index too large");
  const std::uint64_t packed = pack_box(box);
  const std::array<std::uint32_t, 4> ctr = {
      index,
      static_cast<std::uint32_t>(packed),
      static_cast<std::uint32_t>(packed >> 32),
      (static_cast<std::uint32_t>(kind) << 28) | ((component & 0xFu) << 24) | replicate,
  };
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed.value),
                                            static_cast<std::uint32_t>(seed.value >> 32)};
  const auto out = philox4x32(ctr, key);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double substream_unit(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                      TapeKind kind, std::uint32_t index, std::uint32_t component) {
  return static_cast<double>(substream_u64(seed, replicate, box, kind, index, component) >> 11) *
         0x1.0p-53;
}

int substream_bit(const MasterSeed& seed, std::uint32_t replicate, const BoxIndex& box,
                  TapeKind kind, std::uint32_t index) {
  return static_cast<int>(substream_u64(seed, replicate, box, kind, index, 0) >> 63);
}

std::uint64_t counter_u64(std::uint64_t key, std::uint64_t counter) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), 0u, 0u};
  const std::array<std::uint32_t, 2> k = {static_cast<std::uint32_t>(key),
                                          static_cast<std::uint32_t>(key >> 32)};
  const auto out = philox4x32(ctr, k);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double counter_unit(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(counter_u64(key, counter) >> 11) * 0x1.0p-53;
}

}  // namespace efpp
