#include "vcnet/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace vcnet {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    return mix64(base ^ mix64(fnv1a(tag) + index));
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64()); // full 64-bit range
    // Rejection-free would bias tiny spans negligibly; use rejection to stay exact.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span + 1) % span;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return lo + static_cast<std::int64_t>(x % span);
}

double Rng::gaussian() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

double Rng::gaussian(double mean, double sigma) {
    return mean + sigma * gaussian();
}

} // namespace vcnet
