#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace skewnet
{
    inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Counter-based random stream. The n-th output depends only on (key, n), so
    // each source in a simulation can own a stream that no other consumer perturbs.
    class Stream
    {
    public:
        using result_type = std::uint64_t;

        Stream() = default;
        explicit Stream(std::uint64_t key) noexcept : key_(key) {}

        // Stream `index` of family `family` under a master seed.
        static Stream derive(std::uint64_t master_seed, std::uint64_t family, std::uint64_t index) noexcept
        {
            const std::uint64_t k = splitmix64(splitmix64(master_seed ^ 0x5ca1ab1e0ddba11ULL) + family);
            return Stream(splitmix64(k ^ splitmix64(index + 0x243f6a8885a308d3ULL)));
        }

        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

        result_type operator()() noexcept { return splitmix64(key_ + 0x6a09e667f3bcc909ULL * ++counter_); }

        // Uniform on [0, 1) with 53 random bits.
        double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

        // Uniform integer on [0, n). n must be positive.
        std::uint64_t below(std::uint64_t n) noexcept
        {
            return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
        }

        // Exponential with the given rate (> 0).
        double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

        std::uint64_t counter() const noexcept { return counter_; }

    private:
        std::uint64_t key_ = 0;
        std::uint64_t counter_ = 0;
    };

    // Stream families used across the library.
    namespace streams
    {
        inline constexpr std::uint64_t arrivals = 1;
        inline constexpr std::uint64_t departures = 2;
        inline constexpr std::uint64_t selection = 3;
        inline constexpr std::uint64_t graph = 4;
        inline constexpr std::uint64_t thinning = 5;
    }
}
