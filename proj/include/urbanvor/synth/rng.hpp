#pragma once

// splitmix64 for seeding and xoshiro256** for streams, both as published by
// Vigna. Portable and reproducible across languages.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace urbanvor::synth {

class SplitMix64
{
public:
    explicit SplitMix64(std::uint64_t seed) : m_state(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (m_state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t m_state;
};

class Xoshiro256StarStar
{
public:
    explicit Xoshiro256StarStar(std::array<std::uint64_t, 4> state) : m_s(state) {}

    /// State filled from four splitmix64 outputs, the recommended seeding.
    static Xoshiro256StarStar from_seed(std::uint64_t seed)
    {
        SplitMix64 sm(seed);
        return Xoshiro256StarStar({sm.next(), sm.next(), sm.next(), sm.next()});
    }

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(m_s[1] * 5, 7) * 9;
        const std::uint64_t t = m_s[1] << 17;
        m_s[2] ^= m_s[0];
        m_s[3] ^= m_s[1];
        m_s[1] ^= m_s[2];
        m_s[0] ^= m_s[3];
        m_s[2] ^= t;
        m_s[3] = rotl(m_s[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal by Box-Muller; one draw per call, the sine branch is
    /// discarded so the stream is trivially reproducible elsewhere.
    double normal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> m_s;
};

/// Independent stream for one user, so generation order never matters.
inline Xoshiro256StarStar user_stream(std::uint64_t seed, std::uint64_t user)
{
    SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ull * (user + 1)));
    return Xoshiro256StarStar::from_seed(mix.next());
}

} // namespace urbanvor::synth
