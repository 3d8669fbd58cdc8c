#pragma once

#include <cmath>
#include <cstdint>

#include "morphkit/geometry.hpp"

namespace morphkit {

// Seeded splitmix64 stream with platform-independent integer state.
// Used wherever reproducibility is part of the contract; std::random
// distributions are implementation-defined and deliberately avoided.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller on two fresh uniforms
    double u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  Vec3 normal_vec3() {
    const double x = normal(), y = normal(), z = normal();
    return Vec3(x, y, z);
  }

  Vec3 unit_vector() {
    Vec3 v = normal_vec3();
    while (v.norm() < 1e-12) v = normal_vec3();
    return v.normalized();
  }

  // Independent derived stream; forks with distinct tags never collide.
  Rng fork(std::uint64_t tag) const {
    Rng child(state_ ^ (0x5851f42d4c957f2dull * (tag + 1)));
    child.next_u64();
    return child;
  }

private:
  std::uint64_t state_;
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace morphkit
