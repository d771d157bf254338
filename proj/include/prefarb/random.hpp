#pragma once

#include <cstdint>
#include <random>

namespace prefarb {

// SplitMix64 finalizer. Used to derive independent stream seeds from a
// master seed and a counter so that parallel work is reproducible no matter
// which worker handles which item.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
    return Rng{stream_seed(master, index)};
}

inline constexpr std::uint64_t kDefaultSeed = 20200101ULL;

}  // namespace prefarb
