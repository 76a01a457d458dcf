#ifndef THESEUS_RNG_HPP
#define THESEUS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace theseus {

// Named sub-streams of a trial's random state. Each (base seed, trial,
// stream) triple seeds an independent generator, so trials can run in any
// order or in parallel without changing a single draw.
enum class Stream : std::uint64_t {
  Population = 1,
  Truths = 2,
  Noise = 3,
  References = 4,
  Baseline = 5,
  Thresholds = 6,
};

// splitmix64 finalizer; full-period bit mixer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial,
                                 Stream stream) {
  std::uint64_t h = mix64(base ^ mix64(trial + 1));
  return mix64(h ^ mix64(static_cast<std::uint64_t>(stream) << 32));
}

// mt19937_64 wrapper with explicit draw formulas, so that a fixed seed
// yields the same sequence on every build of this project.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform index in {0, ..., n-1}, rejection sampled to avoid modulo bias.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  // Box-Muller; the second deviate of each pair is cached.
  double normal(double mean, double stddev) {
    if (has_cached_) {
      has_cached_ = false;
      return mean + stddev * cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return mean + stddev * r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace theseus

#endif  // THESEUS_RNG_HPP
