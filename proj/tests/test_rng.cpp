#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qgbsde/rng.hpp"

using namespace qgbsde;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswerZero) {
    const auto r = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto r = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const auto r = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, UniformOpenInterval) {
    EXPECT_GT(uniform_open(0, 0), 0.0);
    EXPECT_LT(uniform_open(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(Normals, DeterministicAndAddressable) {
    std::vector<double> a(5), b(5), c(5);
    standard_normals(7, 123, 4, a);
    standard_normals(7, 123, 4, b);
    standard_normals(7, 124, 4, c);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    std::vector<double> d(5);
    standard_normals(8, 123, 4, d);
    EXPECT_NE(a, d);
}

TEST(Normals, Moments) {
    const std::size_t n = 200000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    std::vector<double> z(2);
    for (std::size_t p = 0; p < n / 2; ++p) {
        standard_normals(1, p, 0, z);
        for (double v : z) {
            s += v;
            s2 += v * v;
            s4 += v * v * v * v;
        }
    }
    EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(double(n)));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}
