#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace geomean {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Seeded random stream with named and indexed substreams. A substream depends
// only on the parent's seed and the key, never on how much of the parent has
// been consumed, so experiments can be re-run piecewise.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(detail::splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  RngStream substream(std::string_view name) const {
    return RngStream(detail::splitmix64(seed_ ^ detail::fnv1a(name)));
  }
  RngStream substream(std::uint64_t index) const {
    return RngStream(detail::splitmix64(detail::splitmix64(seed_) + 0x632be59bd9b4e019ULL * (index + 1)));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace geomean
