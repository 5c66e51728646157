#pragma once

#include <cstdint>
#include <random>

namespace texc {

/// Seeded RNG stream. Each training loop / data worker owns its own Rng.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  float uniform(float lo = 0.0f, float hi = 1.0f) {
    return std::uniform_real_distribution<float>(lo, hi)(engine_);
  }

  float normal(float mean = 0.0f, float stddev = 1.0f) {
    return std::normal_distribution<float>(mean, stddev)(engine_);
  }

  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  /// Either -1 or +1 with equal probability.
  float sign() { return bernoulli(0.5) ? 1.0f : -1.0f; }

  std::uint64_t next_seed() {
    return std::uniform_int_distribution<std::uint64_t>()(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace texc
