#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace saliensim {

// Deterministic random stream. Every randomized operation in the toolkit
// draws through this wrapper so outputs are reproducible from a seed alone;
// the draw-to-value mappings are fixed here rather than delegated to
// std::uniform_*_distribution, whose sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) by rejection sampling; n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a master seed and a string key,
// so per-cell results do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ master;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

}  // namespace saliensim
