#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vcnet {

// Splitmix64 finalizer; used both as a bit mixer and for seed derivation.
std::uint64_t mix64(std::uint64_t x);

// All randomness in the project flows from one user-facing seed. Derived
// streams are keyed by a tag string plus an index:
//   derive_seed(seed, tag, index) = mix64(seed ^ mix64(fnv1a(tag) + index))
// The formula is part of the reproducibility contract (same seed, same files).
std::uint64_t fnv1a(std::string_view s);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// Deterministic random source. The engine (std::mt19937_64) is fully specified
// by the standard; the value mappings below are ours, so sequences do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform();
    // Uniform on [lo,hi).
    double uniform(double lo, double hi);
    // Uniform integer in [lo,hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller (no cached spare, one value per call pair).
    double gaussian();
    double gaussian(double mean, double sigma);
    // Bernoulli with probability p.
    bool chance(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace vcnet
