#pragma once

#include <cstdint>
#include <random>

namespace bpgwsp {

// SplitMix64 step; used to derive well-separated seeds for worker streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic seed for stream (a, b, c), e.g. (master, setting, rep).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(a);
    s = splitmix64(s ^ (b + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (c + 0xd1b54a32d192ed03ULL));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Uniform draw on the open interval (0, 1); safe as input to inverse CDFs.
inline double uniform01_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace bpgwsp
