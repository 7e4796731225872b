#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace qgbsde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011). Output is a
/// pure function of (key, counter), so any path can be generated independently
/// of scheduling.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// Fills `out` with independent standard normals keyed by (seed, path, step).
/// Every (seed, path, step) triple owns a disjoint counter range.
void standard_normals(std::uint64_t seed, std::uint64_t path, std::uint32_t step,
                      std::span<double> out) noexcept;

/// Uniform in the open interval (0, 1) built from 64 random bits.
double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept;

}  // namespace qgbsde
