#pragma once

#include <cstdint>
#include <random>

namespace stablab {

using Rng = std::mt19937_64;

/// Named streams for the hierarchical seed scheme. Every random quantity in an
/// experiment is reached as derive_seed(master, stream, index), so replicas are
/// reproducible individually and independent of scheduling order.
enum class SeedStream : std::uint64_t {
  Dataset = 1,
  Path = 2,
  FreshSample = 3,
  HeldOut = 4,
  LabelNoise = 5,
  Probe = 6,
  Constants = 7,
  Init = 8,
};

std::uint64_t splitmix64(std::uint64_t& state);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

}  // namespace stablab
