#pragma once

#include <cstdint>
#include <random>

namespace regkit {

using Engine = std::mt19937_64;

/// Engine for an independent work item such as one ensemble member.
/// Depends only on (seed, stream), never on evaluation order.
inline Engine substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

inline Engine make_engine(std::uint64_t seed) { return substream(seed, 0); }

} // namespace regkit
