#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace atl {

/// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Child seed for a path of stream identifiers below `master`. Distinct paths give
/// statistically independent streams; the mapping is platform independent.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Uniform on [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace atl
