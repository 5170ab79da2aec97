#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, particle, draw_index), so a
// simulation's noise is fixed by its seed alone: thread count, chunking and
// replay cannot change it.  The generator is the Philox 4x32-10 block cipher
// (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC'11) keyed
// by the 64-bit seed, with the counter words
//
//   c = { lo32(draw), hi32(draw), particle, stream }
//
// Uniform variates use the top 53 bits of the first two words.  Normal
// variates apply Wichura's AS241 inverse normal CDF to the same 53-bit
// uniform: one block per draw, and the map stays strictly increasing in the
// uniform, which keeps common-random-number comparisons monotone.  Streams
// separate purposes (X noise, Y noise, initial sampling, reference sampling)
// so no counter is ever reused.

#include <array>
#include <cmath>
#include <cstdint>

namespace mvsde::rng {

inline constexpr std::uint32_t kStreamNoiseX = 0;
inline constexpr std::uint32_t kStreamNoiseY = 1;
inline constexpr std::uint32_t kStreamInitX = 2;
inline constexpr std::uint32_t kStreamInitY = 3;
inline constexpr std::uint32_t kStreamReference = 4;
inline constexpr std::uint32_t kStreamScratch = 5;

inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed, std::array<std::uint32_t, 4> c) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  std::uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  // Scalar state with a forced full unroll: the ten rounds stay in registers.
#define MVSDE_PHILOX_ROUND                                                                  \
  do {                                                                                      \
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c0;                           \
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c2;                           \
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);                         \
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);                               \
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);                         \
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);                               \
    c0 = hi1 ^ c1 ^ k0;                                                                     \
    c1 = lo1;                                                                               \
    c2 = hi0 ^ c3 ^ k1;                                                                     \
    c3 = lo0;                                                                               \
    k0 += W0;                                                                               \
    k1 += W1;                                                                               \
  } while (0)
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
  MVSDE_PHILOX_ROUND;
#undef MVSDE_PHILOX_ROUND
  return {c0, c1, c2, c3};
}

inline std::array<std::uint32_t, 4> block_at(std::uint64_t seed, std::uint32_t stream,
                                             std::uint64_t particle, std::uint64_t draw) {
  return philox4x32(seed, {static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                           static_cast<std::uint32_t>(particle), stream});
}

// Uniform in (0,1); never returns an endpoint.
inline double uniform_at(std::uint64_t seed, std::uint32_t stream, std::uint64_t particle,
                         std::uint64_t draw) {
  const auto w = block_at(seed, stream, particle, draw);
  const std::uint64_t m = (static_cast<std::uint64_t>(w[0]) << 21) | (w[1] >> 11);
  return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

// Inverse standard normal CDF, Wichura's algorithm AS241 (PPND16): relative
// error below 1e-15 over the full open interval.  The central branch covers
// |p - 1/2| <= 0.425 with a single rational polynomial and no transcendental
// calls, which is what makes the normal draws cheap.
inline double normal_quantile(double p) {
  const double q = p - 0.5;
  if (q >= -0.425 && q <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -v : v;
}

// Standard normal from a single block.
inline double normal_at(std::uint64_t seed, std::uint32_t stream, std::uint64_t particle,
                        std::uint64_t draw) {
  return normal_quantile(uniform_at(seed, stream, particle, draw));
}

}  // namespace mvsde::rng
