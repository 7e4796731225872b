#include <gtest/gtest.h>

#include <cmath>

#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/quadrature.hpp"
#include "qgbsde/truncation.hpp"

using namespace qgbsde;

// Cole-Hopf value of the canonical model (gamma = 1, g = tanh, x = 0, T = 1),
// log of the Gaussian integral of exp(tanh), from adaptive quadrature in double
// precision and checked against an independent adaptive integrator.
constexpr double kCanonicalY0 = 0.188926058970391;

TEST(Quadrature, OddTerminalIsZeroAtOrigin) {
    const ModelSpec m = catalog::brownian_tanh();
    const GridSolution s = solve_quadrature_1d(m, {}, Partition::uniform(1.0, 32));
    EXPECT_LE(std::abs(s.y_at(0, 0.0)), 1e-6);
}

// The scheme is implicit Euler in y: y_i = y_{i+1} / (1 + r h) exactly,
// so the grid value is the discrete product rather than exp(-r T).
TEST(Quadrature, DiscountMatchesDiscreteProduct) {
    const ModelSpec m = catalog::discount(0.1);
    const std::size_t N = 64;
    const GridSolution s = solve_quadrature_1d(m, {}, Partition::uniform(1.0, N), {32, 8, 1e-6});
    const double product = std::pow(1.0 + 0.1 / N, -static_cast<double>(N));
    for (double x : {-3.0, 0.0, 2.5}) {
        EXPECT_NEAR(s.y_at(0, x), product, 1e-10);
        EXPECT_NEAR(s.y_at(0, x), std::exp(-0.1), 1e-4);
    }
}

TEST(Quadrature, CanonicalAgainstColeHopf) {
    const ModelSpec m = truncate_driver(catalog::canonical_quadratic(), 6);
    const GridSolution s = solve_quadrature_1d(m, {-8.0, 8.0, 128}, Partition::uniform(1.0, 128));
    EXPECT_NEAR(s.y_at(0, 0.0), kCanonicalY0, 1e-4);
}

TEST(Quadrature, DomainTooSmall) {
    const ModelSpec m = catalog::brownian_identity();
    EXPECT_THROW(solve_quadrature_1d(m, {-1.0, 1.0, 64}, Partition::uniform(1.0, 8)), DomainTooSmall);
}

TEST(Quadrature, RejectsMultidimensionalModels) {
    catalog::ModelChoice c = catalog::preset("brownian_identity");
    c.dim_state = 2;
    c.dim_noise = 2;
    c.initial_state = {0.0, 0.0};
    const ModelSpec m = catalog::build_model(c);
    EXPECT_THROW(solve_quadrature_1d(m, {}, Partition::uniform(1.0, 8)), InvalidModel);
}
