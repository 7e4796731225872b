#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/diagnostics.hpp"
#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/regression.hpp"
#include "qgbsde/sde_engine.hpp"
#include "qgbsde/truncation.hpp"

using namespace qgbsde;

namespace {

SolverOptions linear_basis() {
    SolverOptions o;
    o.basis = RegressionBasis::global_polynomial(1);
    return o;
}

}  // namespace

TEST(Regression, RecoversLinearFunctionExactly) {
    const std::size_t P = 5000;
    std::vector<double> x(P), y(P);
    for (std::size_t p = 0; p < P; ++p) {
        x[p] = -3.0 + 6.0 * p / (P - 1);
        y[p] = 2.0 - 0.5 * x[p];
    }
    for (const auto& basis : {RegressionBasis::global_polynomial(1), RegressionBasis::local_partition(10, 1)}) {
        const Projector proj(x, 1, basis, {});
        const auto fit = proj.project(y);
        for (std::size_t p = 0; p < P; ++p) EXPECT_NEAR(fit[p], y[p], 1e-9);
    }
}

TEST(Regression, ConstantRegressorFallsBackToMean) {
    std::vector<double> x(100, 0.5), y(100);
    for (std::size_t p = 0; p < 100; ++p) y[p] = static_cast<double>(p);
    const Projector proj(x, 1, RegressionBasis::global_polynomial(3), {});
    for (double v : proj.project(y)) EXPECT_NEAR(v, 49.5, 1e-11);
}

TEST(Regression, InvalidBasis) {
    RegressionBasis b = RegressionBasis::local_partition(0, 1);
    EXPECT_THROW(b.validate(), InvalidParameters);
}

TEST(Solver, BrownianIdentity) {
    const ModelSpec m = catalog::brownian_identity();
    const std::size_t P = 100000, N = 16;
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, N), P, 2);
    const BackwardSolution s = solve_backward_regression(m, e, linear_basis());
    double worst_y = 0.0, sz = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
        double sy = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            const double d = s.y(p, i) - e.state(p, i)[0];
            sy += d * d;
        }
        worst_y = std::max(worst_y, std::sqrt(sy / P));
    }
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < N; ++i) sz += (s.z(p, i)[0] - 1.0) * (s.z(p, i)[0] - 1.0);
    EXPECT_LE(worst_y, 3e-2);
    EXPECT_LE(std::sqrt(sz / (P * N)), 5e-2);
}

TEST(Solver, DiscountN32) {
    const ModelSpec m = catalog::discount(0.1);
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 32), 100000, 3);
    const BackwardSolution s = solve_backward_regression(m, e);
    EXPECT_NEAR(s.y0(), std::exp(-0.1), 5e-3);
    EXPECT_NEAR(s.z0()[0], 0.0, 1e-6);
}

TEST(Solver, ConstantTerminalHasZeroControl) {
    catalog::ModelChoice c = catalog::preset("brownian_identity");
    c.terminal = {"constant", {0.7}};
    const ModelSpec m = catalog::build_model(c);
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 8), 10000, 3);
    const BackwardSolution s = solve_backward_regression(m, e);
    for (double y : s.Y) EXPECT_NEAR(y, 0.7, 1e-12);
    for (double z : s.Z) EXPECT_NEAR(z, 0.0, 1e-12);
}

TEST(Solver, RejectsUntruncatedQuadraticDriver) {
    const ModelSpec m = catalog::canonical_quadratic();
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 4), 1000, 1);
    EXPECT_THROW(solve_backward_regression(m, e), RejectedModel);
    EXPECT_NO_THROW(solve_backward_regression(truncate_driver(m, 6), e));
}

TEST(Solver, WorkerCountDoesNotChangeBits) {
    const ModelSpec m = truncate_driver(catalog::canonical_quadratic(), 4);
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 8), 3 * 4096 + 5, 8);
    SolverOptions a, b;
    a.regression.workers = 1;
    b.regression.workers = 4;
    const BackwardSolution sa = solve_backward_regression(m, e, a);
    const BackwardSolution sb = solve_backward_regression(m, e, b);
    EXPECT_EQ(sa.Y, sb.Y);
    EXPECT_EQ(sa.Z, sb.Z);
}

TEST(Solver, ClampBoundsY) {
    const ModelSpec m = catalog::brownian_identity();
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 8), 5000, 1);
    SolverOptions o;
    o.y_clamp = 0.5;
    const BackwardSolution s = solve_backward_regression(m, e, o);
    // the terminal node keeps g(X_N)
    for (std::size_t p = 0; p < 5000; ++p)
        for (std::size_t i = 0; i < 8; ++i) EXPECT_LE(std::abs(s.y(p, i)), 0.5);
}

TEST(Zbar, ConstantZ) {
    const ModelSpec m = catalog::brownian_identity();
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 8), 20000, 4);
    BackwardSolution s(e.partition, e.n_paths, 1);
    std::fill(s.Z.begin(), s.Z.end(), 0.37);
    s = compute_zbar(std::move(s), e, RegressionBasis::local_partition(20));
    for (double v : s.Zbar) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Zbar, MeasurableZIsReproduced) {
    const ModelSpec m = catalog::brownian_identity();
    const std::size_t P = 100000, N = 8;
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, N), P, 4);
    BackwardSolution s(e.partition, P, 1);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < N; ++i) s.Z[p * N + i] = e.state(p, i)[0];
    s = compute_zbar(std::move(s), e, RegressionBasis::global_polynomial(1));
    double sq = 0.0;
    for (std::size_t k = 0; k < s.Z.size(); ++k) sq += (s.Zbar[k] - s.Z[k]) * (s.Zbar[k] - s.Z[k]);
    EXPECT_LE(std::sqrt(sq / s.Z.size()), 2e-2);
}

TEST(Zbar, WindowProjectionBeatsLeftEndpoint) {
    const ModelSpec m = truncate_driver(catalog::canonical_quadratic(), 6);
    const Partition coarse = Partition::uniform(1.0, 8);
    const Partition fine = coarse.refined(4);
    const PathEnsemble e = simulate_forward(m, fine, 50000, 6);
    SolverOptions o;
    o.basis = RegressionBasis::global_polynomial(5);
    const BackwardSolution s = solve_backward_regression(m, e, o);
    const auto zbar = project_window_average(s, e, coarse, o.basis);
    const double proj = z_l2_regularity(coarse, zbar, s).value;
    const double left = left_endpoint_regularity(coarse, s).value;
    EXPECT_LE(proj, 1.05 * left);
    EXPECT_THROW(project_window_average(s, e, Partition::uniform(1.0, 3), o.basis), GridMismatch);
}
