#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace rlpart {

// xoshiro256** seeded through splitmix64. Self-contained so that seeded runs
// are reproducible across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0
  std::uint64_t uniform_int(std::uint64_t n) {
    // rejection-free multiply-shift; bias is negligible for n << 2^64 but we
    // reject to keep draws exactly uniform and reproducible
    std::uint64_t x, r;
    do {
      x = next_u64();
      r = x % n;
    } while (x - r > std::uint64_t(-1) - (n - 1));
    return r;
  }

  int uniform_index(int n) { return static_cast<int>(uniform_int(static_cast<std::uint64_t>(n))); }

  // Fisher-Yates permutation of 0..n-1
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(p[i], p[uniform_index(i + 1)]);
    return p;
  }

  // Independent deterministic substream.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t x = s_[0] ^ rotl(stream + 0x9e3779b97f4a7c15ULL, 31);
    return Rng(x ^ s_[3]);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
};

}  // namespace rlpart
