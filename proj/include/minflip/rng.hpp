#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace minflip {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic stream seed for run j of round n. Rounds and runs get
// pairwise decorrelated streams from one base seed, so campaigns replay
// exactly and runs can execute in any order.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, int round, int run) {
  std::uint64_t s = splitmix64(base_seed);
  s = splitmix64(s ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(round)));
  s = splitmix64(s ^ (0xC2B2AE3D27D4EB4Full * static_cast<std::uint64_t>(run)));
  return s;
}

// Private random stream owned by a single run (or caller). All draws are
// reproducible from the seed.
class RunRng {
 public:
  explicit RunRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform draw in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform draw in [lo, hi). The upper bound is exclusive even after
  // rounding.
  double uniform(double lo, double hi) {
    double v = lo + (hi - lo) * uniform01();
    if (v >= hi) v = std::nextafter(hi, lo);
    return v;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform index in [0, n). Multiply-shift keeps the draw platform-stable.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace minflip
