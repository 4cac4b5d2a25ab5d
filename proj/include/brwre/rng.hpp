#pragma once
#include <array>
#include <cmath>
#include <cstdint>

namespace brwre {

// SplitMix64, used for seeding and as a counter-based hash.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    inline std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

inline std::uint64_t splitmix_hash(std::uint64_t x) {
    SplitMix64 sm(x);
    return sm.next();
}

// xoshiro256** — fast sequential engine for per-replica streams.
struct Xoshiro256ss {
    std::array<std::uint64_t, 4> s{1, 2, 3, 4};

    Xoshiro256ss() = default;
    explicit Xoshiro256ss(std::uint64_t seed) { seed_with_u64(seed); }

    void seed_with_u64(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s) w = sm.next();
        if ((s[0] | s[1] | s[2] | s[3]) == 0) s[0] = 1;
    }

    static inline std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    inline std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s[1] * 5ULL, 7) * 9ULL;
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform in [0,1), 53-bit resolution
    inline double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0,1], safe to feed into log()
    inline double uniform01_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    inline double exponential(double rate) {
        return -std::log(uniform01_open()) / rate;
    }

    inline std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
    }

    inline bool coin() { return (next_u64() >> 63) != 0; }
};

// Stage tags keep replica streams of different pipeline stages disjoint.
enum class Stage : std::uint64_t {
    EnvDraw = 0x11,
    Estimate = 0x22,
    Tail = 0x33,
    Diagnose = 0x44,
    Verify = 0x55,
    Simulate = 0x66,
    Bench = 0x77,
};

// Counter-based stream derivation: the stream key is a pure function of
// (seed, stage, replica, role), so scheduling order cannot matter.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stage,
                                std::uint64_t replica, std::uint64_t role = 0) {
    std::uint64_t k = splitmix_hash(seed ^ 0xA3C59AC2ULL);
    k = splitmix_hash(k ^ (stage * 0xD6E8FEB86659FD93ULL));
    k = splitmix_hash(k ^ (replica * 0xCA5A826395121157ULL));
    k = splitmix_hash(k ^ (role * 0x9E6C63D0876A9A5DULL));
    return k;
}

inline Xoshiro256ss make_replica_rng(std::uint64_t seed, Stage stage,
                                     std::uint64_t replica, std::uint64_t role = 0) {
    return Xoshiro256ss(derive_key(seed, static_cast<std::uint64_t>(stage), replica, role));
}

}  // namespace brwre
