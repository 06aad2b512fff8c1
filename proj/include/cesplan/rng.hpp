// rng.hpp
//
// Counter-based deterministic random numbers.
//
// Scenario sampling draws one uniform per (stream, quantity, m, u, t) tuple
// by hashing the tuple together with the case seed, so the result does not
// depend on loop order and serial/parallel runs agree bit for bit.  The
// k-means seeding uses a small sequential substream derived the same way.

#pragma once

#include <cstdint>
#include <initializer_list>

namespace cesplan::rng {

// splitmix64 finalizer: a well-mixed 64-bit permutation.
inline constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Combine a seed with a sequence of tags/indices into a single hash.
inline constexpr std::uint64_t combine(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = mix(seed);
    for (std::uint64_t p : parts) h = mix(h ^ p);
    return h;
}

// Map a hash to a double in [0, 1) using the top 53 bits.
inline constexpr double unit_double(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// One uniform in [0,1) for an indexed draw; order-independent.
inline constexpr double uniform_at(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    return unit_double(combine(seed, parts));
}

// Sequential substream for algorithms that need an ordered supply of
// uniforms (k-means++ seeding).  Counter-based, so copying the stream
// state is cheap and replay is exact.
class Substream {
public:
    explicit Substream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix(key_ ^ (0x9e3779b97f4a7c15ULL * ++counter_)); }
    double next_unit() { return unit_double(next_u64()); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stream tags keeping the training draws, out-of-sample draws and k-means
// seeding disjoint from one another.
inline constexpr std::uint64_t kStreamTraining = 0x5ce0a9d1u;
inline constexpr std::uint64_t kStreamOutOfSample = 0x00517e44u;
inline constexpr std::uint64_t kStreamKmeans = 0x6b6d6e73u;

}  // namespace cesplan::rng
