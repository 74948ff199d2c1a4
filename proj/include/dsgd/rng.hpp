#pragma once

#include <cstddef>
#include <cstdint>

namespace dsgd {

/// SplitMix64 finalizer (Steele, Lea, Flood); full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based draw h(seed, t, i). Pure function of its arguments, so two
/// runs with the same seed see the same draws whatever their parameters are.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step, std::uint64_t node) noexcept {
  return mix64(mix64(mix64(seed) ^ step) ^ (node * 0xd6e8feb86659fd93ULL));
}

/// Local sample index j_t(i) in [0, n).
constexpr std::size_t sample_index(std::uint64_t seed, std::uint64_t step, std::uint64_t node, std::size_t n) noexcept {
  return static_cast<std::size_t>(counter_hash(seed, step, node) % n);
}

/// Independent child seed for trial/position streams.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(base ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace dsgd
