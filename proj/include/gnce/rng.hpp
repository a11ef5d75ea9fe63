// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace gnce {

/// Mixes a master seed and a stream index into an independent 64-bit seed
/// (splitmix64 finalizer). Used to give every sample / block its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64 is fully specified by the standard, but the std::*
/// distributions are not, so the transforms below are written out to keep
/// datasets byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}; n must be > 0.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal (Box-Muller, caching the second variate).
  double normal();

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace gnce
