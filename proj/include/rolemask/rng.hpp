#ifndef ROLEMASK_RNG_HPP
#define ROLEMASK_RNG_HPP

#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

namespace rolemask {

// Deterministic 64-bit generator (splitmix64). The standard <random>
// distributions are implementation-defined, so every draw that feeds a
// reproducible artifact goes through this helper instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Modulo bias is irrelevant for n << 2^64.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Uniform in [0, 1).
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; no state beyond the integer stream.
  double normal() {
    double u1 = uniform_real();
    double u2 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform_real() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, used for content hashes in manifests and seeded OOV vectors.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace rolemask

#endif
