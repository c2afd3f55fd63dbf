// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace eulab {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` derived from `master`. Every random draw in the
/// library starts from a generator seeded this way, so results depend only on
/// the master seed and the stream index.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

}  // namespace eulab
