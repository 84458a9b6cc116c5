#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace iwv {

// Deterministic 64-bit generator (splitmix64). Used for every random draw in
// the toolkit so results are bit-identical across runs and platforms;
// std::random distributions are avoided because their output is not pinned
// by the standard.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n), n > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

// Derive an independent stream from a seed and a string key. Two streams
// with different keys (or seeds) are decorrelated by an extra mixing step.
inline SplitMix64 keyed_stream(std::uint64_t seed, std::string_view key) {
  return SplitMix64(SplitMix64(seed ^ fnv1a64(key)).next_u64());
}

inline SplitMix64 keyed_stream(std::uint64_t seed, std::string_view key, std::uint64_t a,
                               std::uint64_t b = 0) {
  SplitMix64 outer(seed ^ fnv1a64(key));
  std::uint64_t s = outer.next_u64();
  s ^= SplitMix64(a ^ 0x6A09E667F3BCC909ull).next_u64();
  s ^= SplitMix64(b ^ 0xBB67AE8584CAA73Bull).next_u64();
  return SplitMix64(SplitMix64(s).next_u64());
}

// Fisher-Yates with a caller-owned stream.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.next_below(i)]);
  }
}

}  // namespace iwv
