// SPDX-License-Identifier: Apache-2.0
#include "gnce/rng.hpp"

#include <cmath>
#include <numbers>

namespace gnce {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::uniform_index(std::size_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::complex<double> Rng::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

}  // namespace gnce
