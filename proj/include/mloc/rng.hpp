#pragma once

#include <cmath>
#include <cstdint>

namespace mloc {

// Deterministic, platform-independent generator (splitmix64 core).
// std::mt19937 is portable but the standard distributions are
// implementation-defined, which would break byte-identical reruns
// across toolchains, so sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive bounds.
  int uniform_int(int lo, int hi) {
    double u = uniform() * (static_cast<double>(hi) - static_cast<double>(lo) + 1.0);
    int v = lo + static_cast<int>(u);
    return v > hi ? hi : v;
  }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  int sign() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Independent child stream: hashing keeps sibling streams uncorrelated even
// for small consecutive master seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  Rng r(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  r.next_u64();
  return r.next_u64();
}

}  // namespace mloc
