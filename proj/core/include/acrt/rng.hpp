#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace acrt {

// Portable seeded randomness. std::mt19937_64 output is fixed by the standard;
// the standard distributions are not, so every draw goes through the helpers
// below to keep runs bit-identical across standard libraries.
std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from (seed, stream). Used for per-trial
// and per-run sub-seeds so results do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; caches the second variate.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // k distinct values drawn uniformly from [lo, hi], in draw order.
  std::vector<int> sample_without_replacement(int lo, int hi, int k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace acrt
