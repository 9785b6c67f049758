#pragma once

// Deterministic seed derivation. Every random decision in the pipeline is
// seeded from one experiment seed through named/indexed streams, so results
// do not depend on evaluation order or thread scheduling.

#include <cstdint>
#include <random>
#include <string_view>

namespace ecgcnn {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from (base, index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull);
    splitmix64(s);
    return splitmix64(s);
}

/// Derive an independent stream seed from (base, tag), e.g. per pipeline stage.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    // FNV-1a over the tag, mixed with the base seed.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag) {
        h ^= std::uint8_t(c);
        h *= 0x100000001b3ull;
    }
    return derive_seed(base, h);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace ecgcnn
