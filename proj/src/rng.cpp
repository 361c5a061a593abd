#include "hydroldp/rng.hpp"

#include <cmath>
#include <numbers>

namespace hydroldp {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t mode) const {
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(step), mode, static_cast<std::uint32_t>(path_),
                                           static_cast<std::uint32_t>(path_ >> 32)};
    // The high half of the step index goes into the key so long runs never wrap.
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32) ^ static_cast<std::uint32_t>(step >> 32)};
    const auto x = philox4x32(ctr, key);
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = ((static_cast<std::uint64_t>(x[0]) << 21 ^ (x[1] >> 11)) + 0.5) * scale;
    const double u2 = ((static_cast<std::uint64_t>(x[2]) << 21 ^ (x[3] >> 11)) + 0.5) * scale;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace hydroldp
