// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "canopy/types.hpp"

namespace canopy {

// Deterministic random number scheme "splitmix64-v1".
//
// Every stochastic stage of the pipeline draws from a RandomStream, a
// SplitMix64 generator identified by its 64-bit seed.  Streams are derived,
// never shared: a parent stream can split() children by tag without touching
// its own state, so adding draws to one stage (e.g. launching more rays)
// never shifts the values seen by another stage.  The derivation formulas
// below are part of the output contract; changing them changes every seeded
// result.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer applied to (x + golden gamma).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += kGoldenGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Child-stream seed for a (seed, tag) pair: mix64(seed ^ mix64(tag)).
constexpr std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

// Stage tags. Each realization owns one stream per stage so the stages stay
// independent of each other's consumption.
inline constexpr std::uint64_t kEnvelopeStage = 1;
inline constexpr std::uint64_t kFillStage = 2;
inline constexpr std::uint64_t kRayStage = 3;

class RandomStream {
 public:
  RandomStream() : RandomStream(0) {}
  explicit RandomStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Derive an independent child stream; does not advance this stream.
  RandomStream split(std::uint64_t tag) const {
    return RandomStream(derive_stream_seed(seed_, tag));
  }

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per draw.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Isotropic 3D Gaussian displacement with standard deviation sigma.
  Vec3d normal3(double sigma) {
    const double x = normal();
    const double y = normal();
    const double z = normal();
    return Vec3d(sigma * x, sigma * y, sigma * z);
  }

  /// Uniform direction on the unit sphere.
  Vec3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = 2.0 * std::numbers::pi * uniform01();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3d(r * std::cos(phi), r * std::sin(phi), z);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace canopy
