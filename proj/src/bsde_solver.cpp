#include "qgbsde/bsde_solver.hpp"

#include <algorithm>
#include <cmath>

#include "qgbsde/errors.hpp"
#include "qgbsde/parallel.hpp"

namespace qgbsde {

namespace {

double rms_difference(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) s += (a[p] - b[p]) * (a[p] - b[p]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

BackwardSolution::BackwardSolution(Partition grid, std::size_t paths, std::size_t d)
    : partition(std::move(grid)), n_paths(paths), dim_noise(d),
      Y(paths * (partition.steps() + 1), 0.0), Z(paths * partition.steps() * d, 0.0) {}

double BackwardSolution::y0() const {
    double s = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) s += y(p, 0);
    return s / static_cast<double>(n_paths);
}

std::vector<double> BackwardSolution::z0() const {
    std::vector<double> out(dim_noise, 0.0);
    for (std::size_t p = 0; p < n_paths; ++p)
        for (std::size_t j = 0; j < dim_noise; ++j) out[j] += z(p, 0)[j];
    for (double& v : out) v /= static_cast<double>(n_paths);
    return out;
}

BackwardSolution solve_backward_regression(const ModelSpec& model, const PathEnsemble& ens,
                                           const SolverOptions& options) {
    if (model.quadratic_in_z && !model.truncation_level)
        throw RejectedModel("driver '" + model.name +
                            "' grows quadratically in z; truncate it before solving");
    if (!model.driver || !model.terminal) throw InvalidModel("driver and terminal must be set");
    if (options.picard_iters < 1) throw InvalidParameters("picard_iters must be at least 1");
    options.basis.validate();

    const std::size_t P = ens.n_paths;
    const std::size_t N = ens.steps();
    const std::size_t d = ens.dim_noise;
    const std::size_t m = ens.dim_state;
    const unsigned workers = options.regression.workers;

    BackwardSolution sol(ens.partition, P, d);
    sol.meta.basis = options.basis.describe();
    sol.meta.picard_iters = options.picard_iters;
    sol.meta.steps.resize(N);

    auto clamp = [&](double v) {
        return options.y_clamp ? std::clamp(v, -*options.y_clamp, *options.y_clamp) : v;
    };

    for (std::size_t p = 0; p < P; ++p) {
        const double g = model.terminal(ens.state(p, N));
        if (!std::isfinite(g)) throw NumericalBlowup(p, N, "terminal condition");
        sol.Y[p * (N + 1) + N] = g;
    }

    std::vector<double> next(P), expected(P), target(P), fitted(P), current(P), previous(P);
    for (std::size_t step = N; step-- > 0;) {
        const double t = ens.partition.time(step);
        const double h = ens.partition.step_size(step);
        const auto samples = ens.states_at(step);
        const Projector proj(samples, m, options.basis, options.regression, step);
        StepDiagnostics& diag = sol.meta.steps[step];
        diag.fallback_cells = proj.fallback_cells();

        for (std::size_t p = 0; p < P; ++p) next[p] = sol.Y[p * (N + 1) + step + 1];
        proj.project(next, expected);
        diag.y_residual_rms = rms_difference(next, expected);

        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < P; ++p)
                target[p] = (next[p] - expected[p]) * ens.increment(p, step)[j] / h;
            proj.project(target, fitted);
            if (j == 0) diag.z_residual_rms = rms_difference(target, fitted);
            for (std::size_t p = 0; p < P; ++p) sol.Z[(p * N + step) * d + j] = fitted[p];
        }

        // Picard passes: implicit in Y, explicit in Z.
        current = expected;
        double last_residual = 0.0;
        for (unsigned pass = 1; pass <= options.picard_iters; ++pass) {
            previous.swap(current);
            for_each_block(P, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t p = begin; p < end; ++p) {
                    const double f = model.driver(t, ens.state(p, step), previous[p], sol.z(p, step));
                    current[p] = clamp(expected[p] + h * f);
                }
            });
            double residual = 0.0;
            double scale = 1.0;
            for (std::size_t p = 0; p < P; ++p) {
                if (!std::isfinite(current[p])) throw NumericalBlowup(p, step, "Y");
                residual = std::max(residual, std::abs(current[p] - previous[p]));
                scale = std::max(scale, std::abs(current[p]));
            }
            if (pass >= 2 && residual > last_residual * (1.0 + 1e-6) && residual > 1e-13 * scale)
                throw PicardDivergence(step, "Picard residual grew from " +
                                                 std::to_string(last_residual) + " to " +
                                                 std::to_string(residual));
            last_residual = residual;
            diag.picard_passes = pass;
        }
        diag.picard_residual = last_residual;
        for (std::size_t p = 0; p < P; ++p) sol.Y[p * (N + 1) + step] = current[p];
    }
    return sol;
}

BackwardSolution compute_zbar(BackwardSolution sol, const PathEnsemble& ens,
                              const RegressionBasis& basis, const RegressionOptions& options) {
    if (sol.Z.size() != ens.n_paths * ens.steps() * ens.dim_noise || !(sol.partition == ens.partition))
        throw InvalidParameters("solution and ensemble do not match");
    const std::size_t P = sol.n_paths;
    const std::size_t N = sol.steps();
    const std::size_t d = sol.dim_noise;
    sol.Zbar.assign(sol.Z.size(), 0.0);
    std::vector<double> target(P), fitted(P);
    for (std::size_t step = 0; step < N; ++step) {
        const Projector proj(ens.states_at(step), ens.dim_state, basis, options, step);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < P; ++p) target[p] = sol.Z[(p * N + step) * d + j];
            proj.project(target, fitted);
            for (std::size_t p = 0; p < P; ++p) sol.Zbar[(p * N + step) * d + j] = fitted[p];
        }
    }
    return sol;
}

std::vector<double> project_window_average(const BackwardSolution& fine,
                                           const PathEnsemble& fine_ensemble,
                                           const Partition& coarse, const RegressionBasis& basis,
                                           const RegressionOptions& options) {
    if (!(fine.partition == fine_ensemble.partition))
        throw InvalidParameters("fine solution and ensemble do not match");
    const auto index = coarse.embedding_in(fine.partition);
    const std::size_t P = fine.n_paths;
    const std::size_t d = fine.dim_noise;
    const std::size_t nc = coarse.steps();
    std::vector<double> out(P * nc * d, 0.0);
    std::vector<double> target(P), fitted(P);
    for (std::size_t i = 0; i < nc; ++i) {
        const double window = coarse.step_size(i);
        const Projector proj(fine_ensemble.states_at(index[i]), fine_ensemble.dim_state, basis,
                             options, i);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < P; ++p) {
                double acc = 0.0;
                for (std::size_t k = index[i]; k < index[i + 1]; ++k)
                    acc += fine.z(p, k)[j] * fine.partition.step_size(k);
                target[p] = acc / window;
            }
            proj.project(target, fitted);
            for (std::size_t p = 0; p < P; ++p) out[(p * nc + i) * d + j] = fitted[p];
        }
    }
    return out;
}

}  // namespace qgbsde
