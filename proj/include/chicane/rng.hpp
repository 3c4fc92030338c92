#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace chicane {

// Deterministic random source. std::mt19937_64's raw output sequence is fixed
// by the standard, and the distribution transforms below are written out by
// hand, so a given seed produces the same draws on every platform/compiler.
// (std::normal_distribution et al. are implementation-defined; avoid them.)
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0. Modulo bias is ~2^-53 * n;
  // irrelevant at the scales used here (particle counts, cell counts).
  int uniform_int(int n) {
    int i = static_cast<int>(uniform() * n);
    return i < n ? i : n - 1;
  }

  // Box-Muller, with the paired draw cached for the next call.
  double normal(double mu, double sigma) {
    if (has_spare_) {
      has_spare_ = false;
      return mu + sigma * spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]; log stays finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 2.0 * 3.141592653589793 * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return mu + sigma * r * std::cos(phi);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 step; used to derive independent per-subsystem seeds from one
// root seed without the streams overlapping.
inline uint64_t mix_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace chicane
