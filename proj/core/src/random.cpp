#include "emots/random.hpp"

#include <cmath>
#include <numbers>

namespace emots {

double RandomStream::normal(double mean, double stddev) {
  if (has_cached_) {
    has_cached_ = false;
    return mean + stddev * cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return mean + stddev * (r * std::cos(theta));
}

std::size_t RandomStream::index(std::size_t n) {
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<std::size_t>(x % n);
}

RandomStream RandomStream::fork(std::uint64_t salt) {
  // splitmix64 of (next draw ^ salt); keeps child streams decorrelated.
  std::uint64_t z = next_u64() ^ (salt + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return RandomStream(z);
}

}  // namespace emots
