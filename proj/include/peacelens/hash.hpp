#pragma once

#include <cstdint>
#include <string_view>

namespace peacelens {

// MurmurHash64A (Austin Appleby). Stable across platforms; the local
// embedder's bucket assignment depends on it, so it must never change.
std::uint64_t murmur64a(std::string_view data, std::uint64_t seed) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace peacelens
