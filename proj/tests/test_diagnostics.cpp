#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/diagnostics.hpp"
#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/sde_engine.hpp"
#include "qgbsde/truncation.hpp"

using namespace qgbsde;

namespace {

SolverOptions poly(unsigned degree) {
    SolverOptions o;
    o.basis = RegressionBasis::global_polynomial(degree);
    return o;
}

BackwardSolution solve_on(const ModelSpec& m, const Partition& grid, std::size_t P, const SolverOptions& o,
                          PathEnsemble* out = nullptr) {
    PathEnsemble e = simulate_forward(m, grid, P, 31);
    BackwardSolution s = solve_backward_regression(m, e, o);
    if (out) *out = std::move(e);
    return s;
}

}  // namespace

TEST(FitOrder, ExactLinear) {
    const std::vector<std::pair<double, double>> pts{{1, 2}, {0.5, 1}, {0.25, 0.5}};
    const FittedOrder f = fit_convergence_order(pts);
    EXPECT_NEAR(f.slope, 1.0, 1e-14);
    EXPECT_NEAR(f.intercept, std::log(2.0), 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_TRUE(f.conclusive());
}

TEST(FitOrder, SquareRoot) {
    const std::vector<std::pair<double, double>> pts{{1, 1}, {0.25, 0.5}, {0.0625, 0.25}};
    EXPECT_NEAR(fit_convergence_order(pts).slope, 0.5, 1e-14);
}

TEST(FitOrder, InvalidPoints) {
    const std::vector<std::pair<double, double>> two{{1, 1}, {0.5, 0.5}};
    EXPECT_THROW(fit_convergence_order(two), InvalidPoints);
    const std::vector<std::pair<double, double>> neg{{1, 1}, {0.5, 0.0}, {0.25, 0.1}};
    EXPECT_THROW(fit_convergence_order(neg), InvalidPoints);
}

TEST(YIncrement, BrownianRatio) {
    const Partition coarse = Partition::uniform(1.0, 8);
    const BackwardSolution fine = solve_on(catalog::brownian_identity(), coarse.refined(4), 100000, poly(1));
    const double ratio = y_increment_stat(coarse, fine).value / coarse.mesh();
    EXPECT_GE(ratio, 0.7);
    EXPECT_LE(ratio, 1.3);
}

TEST(YIncrement, ConstantSolution) {
    catalog::ModelChoice c = catalog::preset("brownian_identity");
    c.terminal = {"constant", {2.0}};
    const Partition coarse = Partition::uniform(1.0, 4);
    const BackwardSolution fine = solve_on(catalog::build_model(c), coarse.refined(4), 10000, {});
    EXPECT_LE(y_increment_stat(coarse, fine).value, 1e-4);
    EXPECT_THROW(y_increment_stat(Partition::uniform(1.0, 3), fine), GridMismatch);
}

TEST(YIncrement, HalvesWithMesh) {
    const ModelSpec m = truncate_driver(catalog::canonical_quadratic(), 6);
    std::vector<double> stat;
    for (std::size_t n : {8u, 16u}) {
        const Partition coarse = Partition::uniform(1.0, n);
        stat.push_back(y_increment_stat(coarse, solve_on(m, coarse.refined(4), 50000, poly(5))).value);
    }
    const double r = stat[1] / stat[0];
    EXPECT_GE(r, 0.35);
    EXPECT_LE(r, 0.65);
}

TEST(ZRegularity, ConstantZ) {
    const Partition coarse = Partition::uniform(1.0, 4);
    PathEnsemble e = simulate_forward(catalog::brownian_identity(), coarse.refined(4), 20000, 2);
    const BackwardSolution fine = solve_backward_regression(catalog::brownian_identity(), e, poly(1));
    const auto zbar = project_window_average(fine, e, coarse, RegressionBasis::global_polynomial(1));
    EXPECT_LE(z_l2_regularity(coarse, zbar, fine).value, 1e-3);
}

TEST(ZRegularity, TanhTerminalSlope) {
    const ModelSpec m = catalog::brownian_tanh();
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n : {8u, 16u, 32u}) {
        const Partition coarse = Partition::uniform(1.0, n);
        PathEnsemble e(coarse, 1, 1, 1, 0);
        const BackwardSolution fine = solve_on(m, coarse.refined(4), 50000, poly(5), &e);
        const auto zbar = project_window_average(fine, e, coarse, RegressionBasis::global_polynomial(5));
        pts.emplace_back(coarse.mesh(), z_l2_regularity(coarse, zbar, fine).value);
        EXPECT_LE(pts.back().second, 1.05 * left_endpoint_regularity(coarse, fine).value);
    }
    const FittedOrder f = fit_convergence_order(pts);
    EXPECT_GE(f.slope, 0.8);
    EXPECT_GE(f.r_squared, 0.9);
}

TEST(ZRegularity, GridMismatch) {
    const Partition coarse = Partition::uniform(1.0, 4);
    const BackwardSolution fine = solve_on(catalog::brownian_identity(), coarse.refined(2), 1000, {});
    std::vector<double> zbar(1000 * 3, 0.0);
    EXPECT_THROW(z_l2_regularity(Partition::uniform(1.0, 3), zbar, fine), GridMismatch);
}

TEST(Bmo, ZeroControl) {
    catalog::ModelChoice c = catalog::preset("brownian_identity");
    c.terminal = {"constant", {1.0}};
    PathEnsemble e(Partition::uniform(1.0, 1), 1, 1, 1, 0);
    const BackwardSolution s = solve_on(catalog::build_model(c), Partition::uniform(1.0, 8), 10000, {}, &e);
    const BmoEstimate b = bmo_estimate(s, e, RegressionBasis::local_partition(20));
    EXPECT_NEAR(b.regression_max, 0.0, 1e-12);
    EXPECT_NEAR(b.mean_max, 0.0, 1e-12);
}

TEST(Bmo, UnitControlGivesHorizon) {
    PathEnsemble e(Partition::uniform(1.0, 1), 1, 1, 1, 0);
    const BackwardSolution s =
        solve_on(catalog::brownian_identity(), Partition::uniform(1.0, 16), 100000, poly(1), &e);
    const BmoEstimate b = bmo_estimate(s, e, RegressionBasis::global_polynomial(1));
    EXPECT_NEAR(b.regression_max, 1.0, 0.1);
    EXPECT_NEAR(b.mean_max, 1.0, 0.1);
}

TEST(ZIncrementProxy, ConstantAndBrownian) {
    const BackwardSolution s = solve_on(catalog::brownian_identity(), Partition::uniform(1.0, 8), 50000, poly(1));
    EXPECT_LE(z_increment_proxy(s).value, 1e-3);
}

TEST(TruncationCurve, CanonicalAtFloorAboveRealizedRange) {
    const ModelSpec m = catalog::canonical_quadratic();
    TruncationStudyConfig cfg{Partition::uniform(1.0, 16), 20000, 3, {}, std::nullopt, 2};
    const std::vector<unsigned> levels{1, 2, 3, 4, 6, 8};
    const TruncationStudy st = truncation_error_curve(m, levels, cfg);
    EXPECT_EQ(st.reference_level, 16u);
    ASSERT_EQ(st.curve.size(), levels.size());
    const double floor = 1e-6 * st.reference_y0 * st.reference_y0;
    for (std::size_t k = 0; k < st.curve.size(); ++k) {
        if (st.curve[k].level > st.reference_max_abs_z) {
            EXPECT_LE(st.curve[k].err_y.value, floor);
            EXPECT_LE(st.curve[k].err_z.value, floor);
        }
        if (k) {
            EXPECT_LE(st.curve[k].err_y.value, 1.1 * st.curve[k - 1].err_y.value + floor);
        }
    }
}

TEST(TruncationCurve, SteepTerminalDecays) {
    const ModelSpec m = catalog::build_model(catalog::preset("steep_quadratic"));
    TruncationStudyConfig cfg{Partition::uniform(1.0, 16), 20000, 3, {}, std::nullopt, 2};
    const std::vector<unsigned> levels{1, 2, 3, 4, 6, 8};
    const TruncationStudy st = truncation_error_curve(m, levels, cfg);
    EXPECT_GT(st.curve[0].err_y.value, st.curve[2].err_y.value);
    const FittedOrder f = truncation_decay(st, 1e-6 * st.reference_y0 * st.reference_y0);
    EXPECT_LE(f.slope, -1.0);
}

TEST(TruncationCurve, RejectsUnorderedLevels) {
    const ModelSpec m = catalog::canonical_quadratic();
    TruncationStudyConfig cfg{Partition::uniform(1.0, 4), 1000, 3, {}, std::nullopt, 1};
    const std::vector<unsigned> levels{2, 1};
    EXPECT_THROW(truncation_error_curve(m, levels, cfg), InvalidParameters);
}
