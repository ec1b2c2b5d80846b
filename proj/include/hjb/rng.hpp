#pragma once
// Deterministic RNG used by every sampled check. splitmix64 keeps the
// stream identical across platforms and standard-library versions, which
// the byte-identical-output contract relies on.

#include <cmath>
#include <cstdint>
#include <vector>

namespace hjb {

inline constexpr std::uint64_t kDefaultSeed = 1729;

class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) %
           (n == 0 ? 1 : n);
  }

  // Unit vector sampled from the cube, rejecting near-degenerate draws.
  std::vector<double> unit_vector(int dim) {
    for (;;) {
      std::vector<double> v(dim);
      double norm2 = 0;
      for (int i = 0; i < dim; ++i) {
        v[i] = uniform(-1.0, 1.0);
        norm2 += v[i] * v[i];
      }
      if (norm2 > 1e-6) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& c : v) c *= inv;
        return v;
      }
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace hjb
