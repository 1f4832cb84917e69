#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mtlchoice {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a parent seed and a stream id
/// (splitmix64 finalizer over the combined words).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Standard Gumbel(0, 1) draw by inversion.
double draw_gumbel(Rng& rng);

}  // namespace mtlchoice
