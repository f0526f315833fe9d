#pragma once

#include <cstdint>
#include <limits>

namespace glassyqpe {

/// SplitMix64 finalizer; used to turn (seed, index) pairs into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t &state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    constexpr explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto &word : state_) {
            word = splitmix64(sm);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    friend constexpr bool operator==(const Xoshiro256 &, const Xoshiro256 &) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
};

/// Independent stream for one (master seed, index) pair. Every Monte Carlo trial
/// draws from its own stream, so results do not depend on how trials are
/// partitioned across workers.
constexpr Xoshiro256 trial_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t mix = seed;
    const std::uint64_t a = splitmix64(mix);
    std::uint64_t mix2 = index ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(mix2);
    return Xoshiro256(a ^ (b * 0xFF51AFD7ED558CCDULL));
}

/// Uniform double in [0, 1) from the top 53 bits. Bit-portable, unlike
/// std::uniform_real_distribution.
template <class Gen>
double uniform01(Gen &gen) {
    static_assert(Gen::max() == std::numeric_limits<std::uint64_t>::max() && Gen::min() == 0,
                  "uniform01 expects a full-range 64-bit generator");
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace glassyqpe
