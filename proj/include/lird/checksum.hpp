#pragma once

#include <cstdint>
#include <cstring>
#include <span>

namespace lird {

/// FNV-1a over raw bytes, chainable through `seed`.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                           std::uint64_t seed = 1469598103934665603ULL) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::span<const double> values,
                           std::uint64_t seed = 1469598103934665603ULL) {
  return fnv1a(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(values.data()),
                                              values.size_bytes()),
               seed);
}

}  // namespace lird
