#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ordlab/errors.hpp"

namespace ordlab {

// splitmix64 finalizer
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Named-stream derivation. All randomness in a run flows from the master seed
// through these, so results are independent of scheduling.
constexpr uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  return mix64(seed + 0x9e3779b97f4a7c15ull * fnv1a(tag));
}
constexpr uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t a) {
  return mix64(derive_seed(seed, tag) + 0x9e3779b97f4a7c15ull * (a + 1));
}
constexpr uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b) {
  return mix64(derive_seed(seed, tag, a) + 0x9e3779b97f4a7c15ull * (b + 1));
}

// splitmix64 stream. State is a single u64, cheap to snapshot into checkpoints.
class Rng {
 public:
  Rng() = default;
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [0, n); Lemire reduction, deterministic across platforms
  uint64_t uniform_index(uint64_t n) {
    if (n == 0) fail(ErrorKind::invalid_argument, "uniform_index: empty range");
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Marsaglia-Tsang; alpha < 1 boosted through Gamma(alpha + 1)
  double gamma(double alpha) {
    if (alpha <= 0.0) fail(ErrorKind::invalid_argument, "gamma: alpha must be > 0");
    if (alpha < 1.0) {
      double u = 1.0 - uniform();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = 1.0 - uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_ = 0;
};

}  // namespace ordlab
