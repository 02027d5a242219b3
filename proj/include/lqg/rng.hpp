#pragma once

#include <cmath>
#include <cstdint>

namespace lqg {

/// Counter-free splittable randomness: independent streams are derived by
/// hashing (seed, stream) into the generator state, so replica k of a run is
/// reproducible no matter which worker executes it.

struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

/// xoshiro256++ seeded via SplitMix64 from a (seed, stream) pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    SplitMix64 sm{seed ^ (0x9E3779B97F4A7C15ull * (stream + 0x632BE59BD9B4E019ull))};
    for (auto& w : s_) w = sm.next();
    // All-zero state is invalid for xoshiro; SplitMix64 cannot emit four
    // consecutive zeros, but keep the guard explicit.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1) with 53 random bits.
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0,1]; safe as a log() argument.
  double u01_open() { return 1.0 - u01(); }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via a 256-layer ziggurat.
  double normal() {
    const ZigTables& zt = tables();
    for (;;) {
      const std::uint64_t u = next_u64();
      const int i = static_cast<int>(u & 255);
      const std::int64_t h = static_cast<std::int64_t>(u) >> 12;  // signed 52-bit
      const double z = static_cast<double>(h) * 0x1.0p-51 * zt.x[i + 1];
      if (std::fabs(z) < zt.x[i]) return z;
      if (i == 255) return tail_normal(z > 0.0);
      const double az = std::fabs(z);
      if (zt.y[i + 1] + u01() * (zt.y[i] - zt.y[i + 1]) < std::exp(-0.5 * az * az))
        return z;
    }
  }

 private:
  struct ZigTables {
    double x[257];
    double y[257];
    ZigTables() {
      const double r = 3.6541528853610088;     // right edge of layer 255
      const double v = 0.00492867323399;       // common layer area
      x[256] = v / std::exp(-0.5 * r * r);
      x[255] = r;
      for (int i = 254; i >= 1; --i)
        x[i] = std::sqrt(-2.0 * std::log(v / x[i + 1] + std::exp(-0.5 * x[i + 1] * x[i + 1])));
      x[0] = 0.0;
      for (int i = 0; i <= 256; ++i) y[i] = std::exp(-0.5 * x[i] * x[i]);
    }
  };

  static const ZigTables& tables() {
    static const ZigTables zt;
    return zt;
  }

  double tail_normal(bool positive) {
    const double r = 3.6541528853610088;
    double xx, yy;
    do {
      xx = -std::log(u01_open()) / r;
      yy = -std::log(u01_open());
    } while (yy + yy < xx * xx);
    return positive ? r + xx : -(r + xx);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace lqg
