#pragma once

#include <cstdint>
#include <random>

namespace attnet {

// splitmix64; used to derive independent sub-seeds from one master seed so
// that e.g. per-epoch shuffles and per-layer initializers never share a
// stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  return splitmix64(master ^ splitmix64(salt));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t salt) {
  return std::mt19937_64(derive_seed(master, salt));
}

}  // namespace attnet
