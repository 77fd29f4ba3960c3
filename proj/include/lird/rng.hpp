#pragma once

#include <cstdint>
#include <random>

namespace lird {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; used to fan a master seed out into independent
/// per-stage and per-session streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix_seed(mix_seed(master ^ mix_seed(stream)) + index);
}

namespace seed_stream {
inline constexpr std::uint64_t kGenerate = 1;
inline constexpr std::uint64_t kEmbed = 2;
inline constexpr std::uint64_t kTrain = 3;
inline constexpr std::uint64_t kEval = 4;
inline constexpr std::uint64_t kNetInit = 5;
inline constexpr std::uint64_t kBaseline = 6;
}  // namespace seed_stream

}  // namespace lird
