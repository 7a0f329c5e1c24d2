#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace actbench {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-trial seed derivation: a pure function of (master seed, experiment id,
// draw index, init index) so trials can run on any worker in any order.
inline std::uint64_t mix_seed(std::uint64_t master, std::string_view experiment_id,
                              std::uint64_t draw_index, std::uint64_t init_index) {
  std::uint64_t s = master;
  s ^= splitmix64(s) + fnv1a64(experiment_id);
  s ^= splitmix64(s) + (draw_index + 1) * 0x9e3779b97f4a7c15ULL;
  s ^= splitmix64(s) + (init_index + 1) * 0xbf58476d1ce4e5b9ULL;
  return splitmix64(s);
}

// xoshiro256++, seeded via splitmix64.  One portable generator for every
// sampled value in the project: hyperparameters, weights, masks, shuffles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], both ends inclusive.
  long uniform_int(long lo, long hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(next_u64() % span);
  }

  // Box-Muller; always consumes exactly two uniforms so the stream position
  // stays independent of past draws.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Normal clipped by rejection to |z| <= 2 standard deviations.
  double truncated_normal(double mean, double stddev) {
    for (;;) {
      const double z = normal(0.0, 1.0);
      if (std::abs(z) <= 2.0) return mean + stddev * z;
    }
  }

  // Fisher-Yates over [0, n).
  template <typename Vec>
  void shuffle(Vec& v) {
    for (long i = static_cast<long>(v.size()) - 1; i > 0; --i) {
      const long j = uniform_int(0, i);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace actbench
