#pragma once

// Portable, counter-based random numbers.
//
// Every random value in the toolkit is a pure function of a 64-bit key and
// a 64-bit block counter, so results do not depend on call order, thread
// count, or the standard library's distribution implementations.
//
// Recipe (part of the reproducibility contract, see README):
//   block(key, n)  = Philox4x32-10 with counter {lo32(n), hi32(n), 0, 0}
//                    and key {lo32(key), hi32(key)}  ->  words w0..w3
//   a = w1:w0, b = w3:w2                               (64-bit each)
//   u(x) = ((x >> 12) + 0.5) * 2^-52                   in (0, 1)
//   r = sqrt(-2 ln u(a)),  phi = 2 pi u(b)
//   gaussian pair = (r cos phi, r sin phi)             (Box-Muller)

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>

namespace gmner::rng {

using Block = std::array<std::uint32_t, 4>;

inline Block philox4x32_10(Block ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

inline Block block(std::uint64_t key, std::uint64_t counter) {
  return philox4x32_10(
      {static_cast<std::uint32_t>(counter),
       static_cast<std::uint32_t>(counter >> 32), 0u, 0u},
      {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
}

// Maps 64 random bits to the open interval (0, 1).
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Two independent standard normal draws from one Philox block.
inline std::pair<double, double> gaussian_pair(std::uint64_t key,
                                               std::uint64_t counter) {
  const Block w = block(key, counter);
  const std::uint64_t a = (std::uint64_t{w[1]} << 32) | w[0];
  const std::uint64_t b = (std::uint64_t{w[3]} << 32) | w[2];
  const double r = std::sqrt(-2.0 * std::log(open_unit(a)));
  const double phi = 2.0 * std::numbers::pi * open_unit(b);
  return {r * std::cos(phi), r * std::sin(phi)};
}

// Sequential view over the counter space of one key.
class Stream {
 public:
  explicit Stream(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  double uniform() {
    const Block w = block(key_, counter_++);
    return open_unit((std::uint64_t{w[1]} << 32) | w[0]);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t bits() {
    const Block w = block(key_, counter_++);
    return (std::uint64_t{w[1]} << 32) | w[0];
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Stable per-record seed: independent of dataset order and worker count.
inline std::uint64_t record_seed(std::uint64_t base_seed, std::string_view id,
                                 std::uint64_t index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ fnv1a64(id));
  return splitmix64(h ^ index);
}

}  // namespace gmner::rng
