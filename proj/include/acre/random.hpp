#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace acre {

// Deterministic random stream: one mt19937_64 engine, with all derived draws
// (uniform doubles, Box-Muller normals, unbiased bounded ints) implemented
// here rather than through std distributions. std's distributions carry
// hidden cached state (normal_distribution keeps a spare variate) that would
// break bit-exact checkpoint resume; this class keeps the engine the only
// state, so serializing it captures everything.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : eng_(seed) {}

  // Documented splitting rule: stream k of root seed s is seeded with
  // splitmix64 applied to s + k (distinct, well-mixed seeds per worker).
  static RandomStream split(uint64_t root_seed, uint64_t stream_index) {
    return RandomStream(splitmix64(root_seed + 0x9e3779b97f4a7c15ull * (stream_index + 1)));
  }

  uint64_t bits() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, a fresh pair of uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Unbiased integer in [0, n) by rejection.
  int uniform_int(int n) {
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

  static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace acre
