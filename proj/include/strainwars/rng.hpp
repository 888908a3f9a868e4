#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace strainwars {

/// One step of the splitmix64 sequence.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of replicate stream `index` under `master_seed`: the (index + 1)-th
/// output of splitmix64 started at master_seed. Streams depend only on
/// (master_seed, index), never on which worker runs them.
constexpr std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t index) noexcept
{
    std::uint64_t state = master_seed + index * 0x9E3779B97F4A7C15ULL;
    return splitmix64(state);
}

/// Derives an independent seed for a named sub-purpose (initial
/// configuration, escalation round, ...) of an existing seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) noexcept
{
    std::uint64_t state = seed ^ (purpose * 0xD1B54A32D192ED03ULL);
    splitmix64(state);
    return splitmix64(state);
}

/// mt19937_64 with platform-independent conversions. The std distributions
/// are implementation-defined, which would break bit reproducibility.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential waiting time with the given rate (> 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Unbiased integer in [0, bound), bound > 0 (Lemire's multiply-shift
    /// with rejection).
    std::uint64_t below(std::uint64_t bound)
    {
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound)
        {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold)
            {
                m = static_cast<unsigned __int128>(engine_()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace strainwars
