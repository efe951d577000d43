#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace rsc {

/// Counter-based SplitMix64 generator.
///
/// Output n of a stream with key `seed` is splitmix64_mix(seed + (n+1) * golden_gamma).
/// Every derived quantity (uniform doubles, normals, bounded integers) is computed
/// with explicit integer/IEEE arithmetic, so a given seed yields the same sequence
/// on every platform and standard library. Independent streams are obtained with
/// split(), which hashes a purpose tag into a fresh key.
class Rng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

    explicit Rng(std::uint64_t seed = 0) noexcept : key_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix(key_ + counter_ * kGoldenGamma);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Standard normal via Box-Muller (one variate per two uniforms).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent stream for a named purpose ("graph", "features", "sampling", ...).
    Rng split(std::string_view purpose) const noexcept {
        std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
        for (unsigned char c : purpose) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        return Rng(mix(key_ ^ mix(h)));
    }

    Rng split(std::uint64_t index) const noexcept { return Rng(mix(key_ ^ mix(index + kGoldenGamma))); }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by Rng::below (std::shuffle is not portable across libraries).
template <typename Container>
void shuffle(Container& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace rsc
