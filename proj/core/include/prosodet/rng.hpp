// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random streams. std::mt19937_64 is bit-exact across
// platforms, but the standard distributions are not, so the mappings from
// raw bits to doubles live here. Every consumer derives its own stream from
// the run seed plus a purpose tag; streams never alias.
#ifndef PROSODET_RNG_HPP
#define PROSODET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace prosodet::rng {

inline uint64_t mix(uint64_t z) {
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_str(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named sub-stream of a run, e.g. derive(seed, "stage1/shuffle", epoch).
inline uint64_t derive(uint64_t base, std::string_view purpose, uint64_t k = 0) {
  return mix(base ^ mix(hash_str(purpose)) ^ mix(k * 0x9e3779b97f4a7c15ULL + 1));
}

class Stream {
 public:
  explicit Stream(uint64_t seed) : eng_(seed) {}

  uint64_t bits() { return eng_(); }

  // [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian() {
    // Box-Muller; two fresh uniforms per draw keeps the stream stateless.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // uniform integer in [0, n)
  size_t index(size_t n) {
    return n == 0 ? 0 : static_cast<size_t>(eng_() % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index() so the permutation is portable
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace prosodet::rng

#endif  // PROSODET_RNG_HPP
