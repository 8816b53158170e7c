#pragma once

#include "cguide/types.hpp"

#include <cstdint>
#include <random>

namespace cguide {

/// splitmix64 finalizer; used to derive independent per-trajectory seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed stream: hash(run_seed, index).
constexpr std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t index) {
  return mix64(mix64(run_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  Vector normal_vector(Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  /// Index drawn proportional to non-negative weights.
  template <typename Weights>
  size_t categorical(const Weights& w) {
    double total = 0.0;
    for (auto x : w) total += x;
    double u = uniform() * total;
    size_t k = 0;
    for (auto x : w) {
      if (u < x) return k;
      u -= x;
      ++k;
    }
    return k - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace cguide
