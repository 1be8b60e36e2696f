#pragma once

#include <cstdint>
#include <initializer_list>

namespace rcgs {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a sequence of words. Stable across platforms and runs.
inline std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept
{
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
    return h;
}

/// Named sub-streams of a reservoir seed.
enum class Stream : std::uint64_t {
    kAdjacency = 1,
    kInputMatrix = 2,
    kInitialState = 3,
    kDriver = 4,
    kAuxiliary = 5,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) noexcept
{
    return hash_words({seed, static_cast<std::uint64_t>(s)});
}

/// xoshiro256** generator with explicit, portable real-number conversion.
/// std::uniform_real_distribution is implementation-defined, so it is not used
/// anywhere results must be bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept
    {
        std::uint64_t x = seed;
        for (auto& s : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            s = mix64(x);
        }
    }

    std::uint64_t next() noexcept
    {
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

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace rcgs
