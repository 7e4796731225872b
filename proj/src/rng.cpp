#include "qgbsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace qgbsde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // 52 random bits shifted by half a step; with 53 the top value rounds to 1.
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

void standard_normals(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                      std::span<double> out) noexcept {
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    std::uint32_t chunk = 0;
    for (std::size_t j = 0; j < out.size(); j += 2, ++chunk) {
        const auto r = Philox4x32::block(
            {step, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), chunk},
            key);
        // Box-Muller on two 64-bit uniforms.
        const double u1 = uniform_open(r[0], r[1]);
        const double u2 = uniform_open(r[2], r[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[j] = radius * std::cos(angle);
        if (j + 1 < out.size()) out[j + 1] = radius * std::sin(angle);
    }
}

}  // namespace qgbsde
