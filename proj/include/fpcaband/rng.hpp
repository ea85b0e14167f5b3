#pragma once

// Deterministic random streams. One master seed is split into independent
// substreams keyed by (replication index, stream label, chunk index) through
// a splitmix64 chain; each substream drives its own mt19937_64. Uniform and
// normal variates are mapped by hand from raw engine output, so draws are
// bit-identical across standard libraries and across worker counts.

#include <cmath>
#include <cstdint>
#include <random>

namespace fpcaband::rng {

// Stream labels. Data draws and quantile-simulation draws never share a
// stream, so changing the number of quantile draws cannot shift the data.
inline constexpr std::uint64_t kReplicationStream = 0x01;
inline constexpr std::uint64_t kCurveStream = 0x02;
inline constexpr std::uint64_t kNoiseStream = 0x03;
inline constexpr std::uint64_t kQuantileStream = 0x04;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(splitmix64(seed) ^ key);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key1,
                                    std::uint64_t key2) {
  return derive_seed(derive_seed(seed, key1), key2);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key1,
                                    std::uint64_t key2, std::uint64_t key3) {
  return derive_seed(derive_seed(seed, key1, key2), key3);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53 mantissa bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Standard normal via the Marsaglia polar method; pairs are cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double chi_squared1() {
    const double z = normal();
    return z * z;
  }

  double chi_squared(int dof) {
    double sum = 0.0;
    for (int k = 0; k < dof; ++k) sum += chi_squared1();
    return sum;
  }

 private:
  std::mt19937_64 engine_;
  double spare_{0.0};
  bool has_spare_{false};
};

}  // namespace fpcaband::rng
