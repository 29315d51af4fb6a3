#pragma once

#include <cstdint>
#include <random>

namespace eyring {

/// Independent, replayable generator keyed by (seed, stream, index). Used
/// wherever work items are enumerated by index so results do not depend on
/// how the items are scheduled.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

// Stream tags keep the different consumers of a single seed apart.
namespace streams {
inline constexpr std::uint64_t interior_starts = 1;
inline constexpr std::uint64_t boundary_starts = 2;
inline constexpr std::uint64_t samples = 3;
inline constexpr std::uint64_t trajectories = 4;
inline constexpr std::uint64_t residual_points = 5;
inline constexpr std::uint64_t bridge_tests = 6;
}  // namespace streams

}  // namespace eyring
