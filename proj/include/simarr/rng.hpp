#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace simarr {

/// Seeded 64-bit generator. A (seed, stream) pair identifies an independent
/// stream; the same pair always reproduces the same sequence bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
        engine_.seed(seq);
    }

    /// Uniform on (0, 1], 53 bits.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace simarr
