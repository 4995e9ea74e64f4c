#include "peacelens/hash.hpp"

#include <cstring>

namespace peacelens {

std::uint64_t murmur64a(std::string_view data, std::uint64_t seed) noexcept {
    constexpr std::uint64_t m = 0xc6a4a7935bd1e995ULL;
    constexpr int r = 47;

    const auto len = data.size();
    std::uint64_t h = seed ^ (len * m);

    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    const std::size_t blocks = len / 8;
    for (std::size_t i = 0; i < blocks; ++i, p += 8) {
        // little-endian load regardless of host order
        std::uint64_t k = 0;
        for (int b = 7; b >= 0; --b) k = (k << 8) | p[b];

        k *= m;
        k ^= k >> r;
        k *= m;

        h ^= k;
        h *= m;
    }

    switch (len & 7) {
        case 7: h ^= std::uint64_t(p[6]) << 48; [[fallthrough]];
        case 6: h ^= std::uint64_t(p[5]) << 40; [[fallthrough]];
        case 5: h ^= std::uint64_t(p[4]) << 32; [[fallthrough]];
        case 4: h ^= std::uint64_t(p[3]) << 24; [[fallthrough]];
        case 3: h ^= std::uint64_t(p[2]) << 16; [[fallthrough]];
        case 2: h ^= std::uint64_t(p[1]) << 8; [[fallthrough]];
        case 1:
            h ^= std::uint64_t(p[0]);
            h *= m;
    }

    h ^= h >> r;
    h *= m;
    h ^= h >> r;
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace peacelens
