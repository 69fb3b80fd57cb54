#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace snowpipe {

// xoshiro256++ seeded through splitmix64. The generator, the seeding and the
// derived distributions below are part of the reproducibility contract: model
// files and synthetic scenes are pure functions of their seeds on any IEEE-754
// platform, so none of this may be swapped for <random> engines or
// distributions (whose outputs are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

    // Independent substream `stream` of `seed`. Stream 0 is the plain seed.
    Rng(std::uint64_t seed, std::uint64_t stream)
    {
        std::uint64_t sm = seed ^ (stream * 0xD1B54A32D192ED03ULL);
        for (auto& word : state_) {
            word = splitmix64(sm);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t& x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n), Lemire's multiply-and-reject.
    std::uint64_t below(std::uint64_t n)
    {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; the second variate is discarded.
    double normal()
    {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape)
    {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(1.0 - u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = 0.0;
            double v = 0.0;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = 1.0 - uniform();
            if (u < 1.0 - 0.0331 * (x * x) * (x * x)) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

    // Fisher-Yates, walking from the back.
    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
};

// Substream ids. Changing any of these changes every derived artifact.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kValidationSplit = 2;
inline constexpr std::uint64_t kBatchOrder = 3;
inline constexpr std::uint64_t kHoldout = 4;
inline constexpr std::uint64_t kTerrain = 10;
inline constexpr std::uint64_t kVegetation = 11;
inline constexpr std::uint64_t kSnowNoise = 20;
inline constexpr std::uint64_t kIncrements = 21;
inline constexpr std::uint64_t kPhaseNoise = 22;
inline constexpr std::uint64_t kSpeckle = 23;
} // namespace stream

} // namespace snowpipe
