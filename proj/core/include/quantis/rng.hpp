#ifndef QUANTIS_RNG_HPP
#define QUANTIS_RNG_HPP

#include <array>
#include <cstdint>

#include "quantis/normal.hpp"

namespace quantis {

// Philox 4x32-10 counter-based generator. A draw is addressed purely by
// (seed, sample, step, component), so any sample's stream can be produced
// in isolation: parallel loops need no shared generator state and the
// output is independent of scheduling.
namespace philox {

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace philox

// 64 uniform bits for the addressed draw.
inline std::uint64_t rng_bits(std::uint64_t seed, std::uint64_t sample,
                              std::uint64_t step, std::uint32_t component) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(sample),
      static_cast<std::uint32_t>(sample >> 32),
      static_cast<std::uint32_t>(step),
      component};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto out = philox::block(ctr, key);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Uniform draw strictly inside (0,1): (k + 0.5) * 2^-53 for k in [0, 2^53).
inline double rng_uniform(std::uint64_t seed, std::uint64_t sample,
                          std::uint64_t step, std::uint32_t component) {
  const std::uint64_t bits = rng_bits(seed, sample, step, component) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal draw by inverse CDF; never returns an infinity because
// the uniform is bounded away from 0 and 1.
inline double rng_normal(std::uint64_t seed, std::uint64_t sample,
                         std::uint64_t step, std::uint32_t component) {
  return norm_inv_cdf(rng_uniform(seed, sample, step, component));
}

}  // namespace quantis

#endif
