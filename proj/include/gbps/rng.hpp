#pragma once

#include <cstdint>
#include <random>

namespace gbps {

// splitmix64 mix; used to derive independent child streams from a master
// seed so per-particle draws are reproducible regardless of evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic seeded generator. All stochastic operations in the library
// take an explicit Rng (or a seed); nothing draws from global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed, 0)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform on [0, 1).
  double uniform() { return unit_(engine_); }

  // Standard normal draw.
  double normal() { return normal_(engine_); }

  // Gamma(shape, 1), shape > 0.
  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Child stream keyed by one draw from this generator; lets callers hand
  // out per-item streams (one parent draw total, any evaluation order).
  std::uint64_t stream_base() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gbps
