#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace clpt {

// splitmix64; used only to spread user seeds into per-run streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream for run `run_index` under ensemble seed `base`. Distinct indices
// give decorrelated streams; identical (base, index) reproduces a run.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run_index) {
  return splitmix64(splitmix64(base) ^ splitmix64(run_index + 1));
}

// mt19937_64 with explicit output transforms. std::uniform_real_distribution
// and std::normal_distribution are implementation-defined, so the mapping
// from raw 64-bit draws to doubles is spelled out here and never changes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Uniform integer in [0, n). n is small here (protocol sites, runs), so
  // the scaling bias of ~n/2^53 is irrelevant; determinism is what matters.
  std::uint32_t index(std::uint32_t n) {
    auto k = static_cast<std::uint32_t>(u01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  // Standard normal, Box-Muller with cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - u01();  // (0, 1]: keeps log() finite
    double u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace clpt
