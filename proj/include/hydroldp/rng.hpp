#pragma once

#include <array>
#include <cstdint>

namespace hydroldp {

// Philox4x32-10 block cipher. Keyed streams make every Brownian increment a pure
// function of (seed, path, step, mode), independent of thread scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

    // Standard normal for (step, mode).
    double normal(std::uint64_t step, std::uint32_t mode) const;
    std::uint64_t seed() const { return seed_; }
    std::uint64_t path() const { return path_; }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
};

}  // namespace hydroldp
