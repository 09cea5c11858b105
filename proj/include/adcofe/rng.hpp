#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace adcofe {

// mt19937_64 with hand-rolled draw helpers. std::shuffle and the standard
// distributions are implementation-defined, which would break byte-identical
// artifacts across toolchains; the raw engine stream is pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, n), n > 0
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  // uniform double in [0, 1) with 53 bits
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform double in [-scale, scale)
  double next_symmetric(double scale) { return (2.0 * next_unit() - 1.0) * scale; }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; derives independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace adcofe
