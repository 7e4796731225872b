#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qgbsde/diagnostics.hpp"
#include "qgbsde/ensemble_io.hpp"
#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/sde_engine.hpp"

using namespace qgbsde;

namespace {

ModelSpec custom(catalog::CoefficientChoice drift, catalog::CoefficientChoice diffusion,
                 double x0 = 0.0) {
    catalog::ModelChoice c;
    c.drift = std::move(drift);
    c.diffusion = std::move(diffusion);
    c.initial_state = {x0};
    return catalog::build_model(c);
}

}  // namespace

TEST(Simulate, AdditiveNoiseIsExact) {
    const ModelSpec m = catalog::brownian_identity();
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 10), 50, 3);
    for (std::size_t p = 0; p < 50; ++p) {
        double w = 0.0;
        EXPECT_EQ(e.state(p, 0)[0], 0.0);
        for (std::size_t i = 0; i < 10; ++i) {
            w += e.increment(p, i)[0];
            EXPECT_EQ(e.state(p, i + 1)[0], w);
        }
    }
}

TEST(Simulate, ZeroNoiseIsDeterministic) {
    const ModelSpec m = custom({"constant", {1.0}}, {"constant", {0.0}});
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 4), 20, 9);
    for (std::size_t p = 0; p < 20; ++p) EXPECT_DOUBLE_EQ(e.state(p, 4)[0], 1.0);
}

TEST(Simulate, IncrementMoments) {
    const Partition grid = Partition::uniform(1.0, 4);
    const std::size_t P = 100000;
    const PathEnsemble e = simulate_forward(catalog::brownian_identity(), grid, P, 11);
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            const double dw = e.increment(p, i)[0];
            s += dw;
            s2 += dw * dw;
        }
        const double h = grid.step_size(i);
        EXPECT_NEAR(s / P, 0.0, 5.0 * std::sqrt(h / P));
        EXPECT_NEAR(s2 / P / h, 1.0, 5.0 * std::sqrt(2.0 / P));
    }
}

TEST(Simulate, WorkerCountDoesNotChangeBits) {
    const ModelSpec m = catalog::geometric();
    const Partition grid = Partition::uniform(1.0, 16);
    const std::size_t P = 3 * 4096 + 17;
    const PathEnsemble a = simulate_forward(m, grid, P, 5, 1);
    const PathEnsemble b = simulate_forward(m, grid, P, 5, 4);
    EXPECT_EQ(a.increments, b.increments);
    EXPECT_EQ(a.states, b.states);
    const PathEnsemble fa = simulate_variational(m, a, {FlowInverseMethod::LinearSolve, 1e12, 1});
    const PathEnsemble fb = simulate_variational(m, b, {FlowInverseMethod::LinearSolve, 1e12, 3});
    EXPECT_EQ(fa.flow, fb.flow);
    EXPECT_EQ(fa.flow_inverse, fb.flow_inverse);
}

TEST(Simulate, BlowupIsReported) {
    const ModelSpec m = custom({"linear", {1e200}}, {"constant", {0.0}}, 1e200);
    EXPECT_THROW(simulate_forward(m, Partition::uniform(1.0, 4), 4, 1), NumericalBlowup);
}

// Euler strong error on GBM against exp((mu - s^2/2) T + s W_T) on the same increments.
TEST(Simulate, GbmStrongOrderHalf) {
    const double mu = 0.05, s = 0.2;
    const ModelSpec m = catalog::geometric(mu, s);
    const std::size_t P = 100000;
    const PathEnsemble fine = simulate_forward(m, Partition::uniform(1.0, 256), P, 21);
    std::vector<std::pair<double, double>> points;
    for (std::size_t n = 8; n <= 256; n *= 2) {
        const PathEnsemble e = coarsen(m, fine, Partition::uniform(1.0, n));
        double sq = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double w = 0.0;
            for (std::size_t i = 0; i < n; ++i) w += e.increment(p, i)[0];
            const double exact = std::exp((mu - 0.5 * s * s) + s * w);
            const double d = e.state(p, n)[0] - exact;
            sq += d * d;
        }
        points.emplace_back(1.0 / n, std::sqrt(sq / P));
    }
    const FittedOrder f = fit_convergence_order(points);
    EXPECT_NEAR(f.slope, 0.5, 0.15);
    EXPECT_GE(f.r_squared, 0.95);
}

TEST(Variational, ConstantCoefficientsGiveIdentity) {
    const ModelSpec m = catalog::brownian_identity();
    const PathEnsemble e = simulate_variational(m, simulate_forward(m, Partition::uniform(1.0, 8), 10, 1));
    for (double v : e.flow) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(flow_identity_error(e), 0.0);
}

TEST(Variational, DeterministicLinearProduct) {
    const ModelSpec m = catalog::build_model(catalog::preset("deterministic_linear"));
    for (std::size_t n : {8u, 32u, 128u}) {
        const PathEnsemble e =
            simulate_variational(m, simulate_forward(m, Partition::uniform(1.0, n), 3, 1));
        const double expect = std::pow(1.0 + 0.3 / n, static_cast<double>(n));
        EXPECT_NEAR(e.flow_at(1, n)[0], expect, 1e-13);
        EXPECT_LE(std::abs(e.flow_at(1, n)[0] - std::exp(0.3)), 0.3 * 0.3 * std::exp(0.3) / n);
    }
}

TEST(Variational, FlowIdentityLinearSolve) {
    const ModelSpec m = catalog::geometric(0.05, 0.4);
    const PathEnsemble e =
        simulate_variational(m, simulate_forward(m, Partition::uniform(1.0, 32), 2000, 4));
    EXPECT_LE(flow_identity_error(e), 1e-8);
}

TEST(Variational, InverseSdeAgreesWithLinearSolve) {
    const ModelSpec m = catalog::geometric(0.05, 0.2);
    const PathEnsemble base = simulate_forward(m, Partition::uniform(1.0, 512), 500, 4);
    const PathEnsemble a = simulate_variational(m, base, {FlowInverseMethod::LinearSolve, 1e12, 1});
    const PathEnsemble b = simulate_variational(m, base, {FlowInverseMethod::InverseSde, 1e12, 1});
    double rms = 0.0;
    for (std::size_t p = 0; p < 500; ++p) {
        const double d = a.flow_inverse_at(p, 512)[0] - b.flow_inverse_at(p, 512)[0];
        rms += d * d;
    }
    EXPECT_LE(std::sqrt(rms / 500), 2e-2);
    EXPECT_LE(flow_identity_error(b), 5e-2);
}

TEST(Variational, MissingJacobians) {
    ModelSpec m = catalog::brownian_identity();
    m.drift_jacobian = nullptr;
    m.assumption_level = AssumptionLevel::HX0Y0;
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 4), 10, 1);
    EXPECT_THROW(simulate_variational(m, e), AssumptionLevelTooLow);
}

TEST(Variational, SingularFlow) {
    // b(x) = -x / h drives grad X to exactly zero after the first step
    const ModelSpec m = custom({"linear", {-4.0}}, {"constant", {1.0}});
    const PathEnsemble e = simulate_forward(m, Partition::uniform(1.0, 4), 10, 1);
    EXPECT_THROW(simulate_variational(m, e), SingularFlow);
}

TEST(EnsembleIo, RoundTrip) {
    const ModelSpec m = catalog::geometric();
    const Partition grid = Partition::uniform(1.0, 6);
    const PathEnsemble e = simulate_forward(m, grid, 37, 99);
    const auto file = std::filesystem::temp_directory_path() / "qgbsde_roundtrip.bin";
    write_ensemble(file, e);
    const PathEnsemble r = read_ensemble(file, grid);
    EXPECT_EQ(r.seed, 99u);
    EXPECT_EQ(r.n_paths, 37u);
    EXPECT_EQ(r.increments, e.increments);
    EXPECT_EQ(r.states, e.states);
    EXPECT_EQ(std::filesystem::file_size(file), 4 + 5 * 8 + (37 * 6 + 37 * 7) * 8u);
    EXPECT_THROW(read_ensemble(file, Partition::uniform(1.0, 5)), EnsembleFormatError);
    {
        std::ofstream out(file, std::ios::binary | std::ios::app);
        out << 'x';
    }
    EXPECT_THROW(read_ensemble(file, grid), EnsembleFormatError);
    std::filesystem::remove(file);
}
