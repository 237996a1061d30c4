#ifndef QSHARE_RNG_H
#define QSHARE_RNG_H

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace qshare {

// Counter-based randomness. Every random decision in the simulator and the
// attack harnesses is a pure function of (seed, shot, purpose, indices), so
// results do not depend on evaluation order or thread count.

inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> words) {
    uint64_t h = mix64(seed);
    for (uint64_t w : words) {
        h = mix64(h ^ w);
    }
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform(uint64_t seed, std::initializer_list<uint64_t> words) {
    return to_unit(derive(seed, words));
}

/// FNV-1a over the bytes of `s`, used to turn names into seed offsets.
inline uint64_t hash_name(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return mix64(h);
}

/// Purpose tags keep streams for different decisions disjoint.
enum RngTag : uint64_t {
    kTagCrosstalk = 0x11,
    kTagMeasure = 0x12,
    kTagResidual = 0x13,
    kTagSense = 0x14,
    kTagReadout = 0x15,
    kTagSecret = 0x21,
    kTagTrial = 0x22,
    kTagJitter = 0x23,
    kTagWorkload = 0x24,
    kTagCircuit = 0x25,
};

}  // namespace qshare

#endif
