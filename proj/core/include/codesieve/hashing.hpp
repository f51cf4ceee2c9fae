// SPDX-License-Identifier: Apache-2.0
//
// Deterministic, platform-stable hashing and shuffling primitives.
// Every order- or sample-sensitive result in the pipeline must be a pure
// function of (seed, stable id), so std::hash and std::shuffle (both
// implementation-defined) are off limits here.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a64(std::string_view data, uint64_t h = kFnvOffset) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(uint64_t value, uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (i * 8)) & 0xFFu;
        h *= kFnvPrime;
    }
    return h;
}

// splitmix64 finalizer; good avalanche, cheap, stable everywhere.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Combine a seed with an index or sub-key into a fresh 64-bit stream seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t key) {
    return mix64(seed ^ mix64(key));
}

inline uint64_t derive_seed(uint64_t seed, std::string_view key) {
    return derive_seed(seed, fnv1a64(key));
}

// 128-bit content hash as two independent FNV streams. Used where hash
// equality stands in for content equality (exact dedup, manifests).
struct Hash128 {
    uint64_t lo = 0;
    uint64_t hi = 0;

    bool operator==(const Hash128&) const = default;
    auto operator<=>(const Hash128&) const = default;
};

inline Hash128 hash128(std::string_view data) {
    Hash128 h;
    h.lo = fnv1a64(data);
    h.hi = fnv1a64(data, 0x6C62272E07BB0142ULL);
    return h;
}

inline std::string to_hex(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

inline std::string to_hex(const Hash128& value) {
    return to_hex(value.hi) + to_hex(value.lo);
}

// Minimal deterministic RNG (splitmix64 sequence).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) by rejection; bound must be > 0.
    uint64_t next_below(uint64_t bound) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % bound;
    }

    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    uint64_t state_;
};

// Fisher-Yates with SplitMix64: identical permutation on every platform.
template <typename T>
void stable_shuffle(std::vector<T>& items, uint64_t seed) {
    SplitMix64 rng(seed);
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace codesieve
