#pragma once

#include <cmath>
#include <cstdint>

namespace aniso {

// Counter-based random streams. Every draw is a pure function of
// (base_seed, path_index, channel, counter), so path simulations are
// reproducible under any parallel schedule.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Fully mixed stream key; computed once per (path, channel).
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t path,
                                std::uint64_t channel) {
  std::uint64_t k = mix64(seed + kGolden);
  k = mix64(k ^ ((path + 1) * 0xD6E8FEB86659FD93ull));
  k = mix64(k ^ ((channel + 1) * 0xA2F79D58C42EB9F1ull));
  return k;
}

enum Channel : std::uint64_t {
  kTimes = 0,
  kAxes = 1,
  kMagnitudes = 2,
  kSigns = 3,
  kThinning = 4,
  kGaussian = 5,
};

// One independent stream: splitmix64 seeded by the stream key.
class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t seed, std::uint64_t path, std::uint64_t channel)
      : state_(stream_key(seed, path, channel)) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform on (0,1); never returns 0 or 1.
  double next_unit() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1p-53;
  }

  double next_exp() { return -std::log(next_unit()); }

  // Index uniform on {0,...,n-1} via fixed-point multiply.
  std::uint32_t next_index(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool next_sign_negative() { return (next_u64() >> 63) != 0; }

  // Standard normal, Box-Muller. Consumes two uniforms per pair; the
  // spare is cached so consecutive calls cost one pair per two normals.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  // Exact Poisson variate. Inversion for small means, PTRD rejection
  // (Hormann) otherwise; both consume a variable number of uniforms.
  std::uint64_t next_poisson(double mean);

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::uint64_t Stream::next_poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 12.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = next_unit();
    while (prod > limit) {
      ++k;
      prod *= next_unit();
    }
    return k;
  }
  // PTRD: transformed rejection with squeeze (W. Hormann, 1993).
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u;
    double v = next_unit();
    if (v <= 0.86 * vr) {
      u = v / vr - 0.43;
      return static_cast<std::uint64_t>(
          std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + mean + 0.445));
    }
    if (v >= vr) {
      u = next_unit() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = ((u < 0.0) ? -0.5 : 0.5) - u;
      v = next_unit() * vr;
    }
    const double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.445);
    v = v * inv_alpha / (a / (us * us) + b);
    const double log_sqrt_2pi = 0.91893853320467274178;
    if (k >= 10.0) {
      const double t = (k + 0.5) * std::log(mean / k) - mean -
                       log_sqrt_2pi + k -
                       (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * k * k)) / (k * k)) / k;
      if (std::log(v * smu) <= t) return static_cast<std::uint64_t>(k);
    } else if (k >= 0.0) {
      const double lgk = std::lgamma(k + 1.0);
      if (std::log(v) <= k * std::log(mean) - mean - lgk)
        return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace rng
}  // namespace aniso
