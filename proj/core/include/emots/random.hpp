#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace emots {

// Deterministic random stream. Distributions are implemented by hand on top
// of mt19937_64 so that identical seeds produce identical bytes regardless of
// the standard library's distribution internals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; caches the second variate.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Uniform integer in [0, n), n >= 1.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  // Independent child stream; distinct salts give distinct streams.
  RandomStream fork(std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace emots
