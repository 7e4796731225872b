#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/truncation.hpp"

using namespace qgbsde;

TEST(Truncation, KnownValues) {
    EXPECT_DOUBLE_EQ(h(5, 3.0), 3.0);
    EXPECT_DOUBLE_EQ(h(5, 6.0), 5.75);
    EXPECT_DOUBLE_EQ(h(5, 10.0), 6.0);
    EXPECT_DOUBLE_EQ(h_prime(5, 6.0), 0.5);
    EXPECT_DOUBLE_EQ(h(5, -6.0), -5.75);
    EXPECT_DOUBLE_EQ(h_prime(5, -6.0), 0.5);
}

TEST(Truncation, KnotContinuity) {
    for (unsigned n : {1u, 2u, 5u, 16u}) {
        const double nd = n;
        for (double knot : {nd, nd + 2.0, -nd, -(nd + 2.0)}) {
            const double eps = 1e-13;
            EXPECT_NEAR(h(n, knot - eps), h(n, knot + eps), 1e-12) << n << " " << knot;
            EXPECT_NEAR(h_prime(n, knot - eps), h_prime(n, knot + eps), 1e-12) << n << " " << knot;
        }
    }
}

TEST(Truncation, BoundsOnRandomPoints) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    std::uniform_int_distribution<unsigned> lv(1, 10);
    for (int i = 0; i < 1000000; ++i) {
        const unsigned n = lv(rng);
        const double z = u(rng);
        const double v = h(n, z);
        ASSERT_LE(std::abs(v), std::min(std::abs(z), n + 1.0) + 1e-15);
        ASSERT_LE(std::abs(h_prime(n, z)), 1.0);
        ASSERT_GE(h_prime(n, z), 0.0);
    }
}

TEST(Truncation, VectorMatchesScalar) {
    const std::vector<double> z{-9.0, -5.5, 0.25, 4.0, 6.5};
    const auto out = h_vec(4, z);
    for (std::size_t j = 0; j < z.size(); ++j) EXPECT_EQ(out[j], h(4, z[j]));
}

TEST(Truncation, DriverWrappingAppliesChainRule) {
    const ModelSpec base = catalog::canonical_quadratic(1.0);
    const ModelSpec t = truncate_driver(base, 2);
    EXPECT_FALSE(t.quadratic_in_z);
    ASSERT_TRUE(t.truncation_level.has_value());
    EXPECT_EQ(*t.truncation_level, 2u);
    ASSERT_TRUE(t.z_lipschitz.has_value());
    EXPECT_DOUBLE_EQ(*t.z_lipschitz, base.growth_M * 7.0);

    const std::vector<double> x{0.3};
    for (double zv : {0.5, 2.5, 3.5, 10.0}) {
        const std::vector<double> z{zv};
        const double hz = h(2, zv);
        EXPECT_DOUBLE_EQ(t.driver(0.1, x, 0.0, z), 0.5 * hz * hz);
        std::vector<double> gz(1);
        t.driver_grad_z(0.1, x, 0.0, z, gz);
        EXPECT_DOUBLE_EQ(gz[0], hz * h_prime(2, zv));
    }
}

TEST(Truncation, IdentityInsideLevel) {
    const ModelSpec base = catalog::canonical_quadratic(1.0);
    const ModelSpec t = truncate_driver(base, 3);
    const std::vector<double> x{0.0};
    for (double zv : {-2.9, -1.0, 0.0, 1.7, 3.0}) {
        const std::vector<double> z{zv};
        EXPECT_EQ(t.driver(0.0, x, 0.2, z), base.driver(0.0, x, 0.2, z));
    }
}
