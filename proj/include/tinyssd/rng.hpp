#pragma once

#include <cstdint>
#include <random>

namespace tinyssd {

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for an independent stream keyed by (seed, index, epoch). Used so that
// per-sample augmentation streams are reproducible regardless of scheduling.
inline uint64_t derive_seed(uint64_t seed, uint64_t index, uint64_t epoch = 0) {
  uint64_t h = mix64(seed);
  h = mix64(h ^ index);
  h = mix64(h ^ epoch);
  return h;
}

// Uniform draws built directly on mt19937_64 output. std:: distributions are
// implementation-defined, so rolling our own keeps results identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); n > 0
  int uniform_int(int n) { return int(eng_() % uint64_t(n)); }

  // standard normal, Box-Muller
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tinyssd
