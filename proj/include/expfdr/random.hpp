#pragma once

// Reproducible random streams.
//
// A Stream is keyed by (master seed, purpose tag, index). Child streams are
// derived from the key, never from the generator state, so the draws a
// consumer sees do not depend on how many draws other consumers made or on
// the order in which work is scheduled.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

#include "expfdr/error.hpp"

namespace expfdr {

namespace detail {

inline constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

class Stream {
public:
    explicit Stream(std::uint64_t seed) : Stream(detail::splitmix64(seed), 0) {}

    Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index)
        : Stream(Stream(seed).derive(tag, index)) {}

    /// Independent child stream for (tag, index) under this stream's key.
    Stream derive(std::string_view tag, std::uint64_t index = 0) const {
        const std::uint64_t h = detail::splitmix64(key_ ^ detail::fnv1a(tag));
        return Stream(detail::splitmix64(h + detail::splitmix64(index)), 0);
    }

    std::uint64_t key() const noexcept { return key_; }

    std::uint64_t next() { return engine_(); }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        detail::require(n > 0, "Stream::below: n must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r = next();
        while (r >= limit) r = next();
        return r % n;
    }

private:
    Stream(std::uint64_t key, int) : key_(key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t key_;
    std::mt19937_64 engine_;
};

/// Inverse-CDF exponential draw: -mean * log(U).
inline double sample_exponential(double mean, Stream& stream) {
    detail::require(mean > 0.0 && std::isfinite(mean), "sample_exponential: mean must be positive");
    return -mean * std::log(stream.uniform());
}

/// Exponential(mean) conditioned on (lo, hi); hi may be +infinity.
/// With lo = 0 and hi = inf this consumes the stream exactly like sample_exponential.
inline double sample_truncated_exponential(double mean, double lo, double hi, Stream& stream) {
    detail::require(mean > 0.0 && std::isfinite(mean), "sample_truncated_exponential: mean must be positive");
    detail::require(lo >= 0.0 && lo < hi, "sample_truncated_exponential: need 0 <= lo < hi");
    // Survival S(x) = exp(-x / mean) is uniform on (S(hi), S(lo)) under truncation.
    const double s_lo = std::exp(-lo / mean);
    const double s_hi = std::isinf(hi) ? 0.0 : std::exp(-hi / mean);
    const double u = stream.uniform();
    double x = -mean * std::log(s_hi + u * (s_lo - s_hi));
    if (!(x > lo)) x = std::nextafter(lo, hi);
    if (!(x < hi)) x = std::nextafter(hi, lo);
    return x;
}

}  // namespace expfdr
