#include "qgbsde/variational.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "qgbsde/errors.hpp"
#include "qgbsde/parallel.hpp"
#include "qgbsde/regression.hpp"

namespace qgbsde {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using RowVector = Eigen::RowVectorXd;

}  // namespace

VariationalSolution solve_variational_bsde(const ModelSpec& model, const PathEnsemble& ens,
                                           const BackwardSolution& base,
                                           const SolverOptions& options) {
    if (!ens.has_flows())
        throw AssumptionLevelTooLow("variational BSDE needs an ensemble with flows");
    if (!model.has_driver_gradients())
        throw AssumptionLevelTooLow("variational BSDE needs driver and terminal gradients");
    if (!(base.partition == ens.partition) || base.n_paths != ens.n_paths)
        throw InvalidParameters("base solution does not match the ensemble");

    const std::size_t P = ens.n_paths;
    const std::size_t N = ens.steps();
    const std::size_t m = ens.dim_state;
    const std::size_t d = ens.dim_noise;
    const auto em = static_cast<Eigen::Index>(m);
    const unsigned workers = options.regression.workers;

    VariationalSolution var;
    var.n_paths = P;
    var.steps = N;
    var.dim_state = m;
    var.dim_noise = d;
    var.grad_y.assign(P * (N + 1) * m, 0.0);
    var.grad_z.assign(P * N * d * m, 0.0);

    for_each_block(P, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> grad(m);
        for (std::size_t p = begin; p < end; ++p) {
            model.terminal_gradient(ens.state(p, N), grad);
            const RowVector gy = Eigen::Map<const RowVector>(grad.data(), em) *
                                 ConstMatrixMap(ens.flow_at(p, N).data(), em, em);
            for (std::size_t l = 0; l < m; ++l) var.grad_y[(p * (N + 1) + N) * m + l] = gy(l);
        }
    });

    // rebased[p * m + l]: component l of grad Y_{i+1} (grad X_i)^{-1}
    std::vector<double> rebased(P * m), expected(P * m), column(P), fitted(P), target(P);
    std::vector<double> gamma(P * d * m);
    for (std::size_t step = N; step-- > 0;) {
        const double t = ens.partition.time(step);
        const double h = ens.partition.step_size(step);
        const Projector proj(ens.states_at(step), m, options.basis, options.regression, step);

        for_each_block(P, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const RowVector r =
                    Eigen::Map<const RowVector>(var.gy(p, step + 1).data(), em) *
                    ConstMatrixMap(ens.flow_inverse_at(p, step).data(), em, em);
                for (std::size_t l = 0; l < m; ++l) rebased[p * m + l] = r(l);
            }
        });

        for (std::size_t l = 0; l < m; ++l) {
            for (std::size_t p = 0; p < P; ++p) column[p] = rebased[p * m + l];
            proj.project(column, fitted);
            for (std::size_t p = 0; p < P; ++p) expected[p * m + l] = fitted[p];
            for (std::size_t j = 0; j < d; ++j) {
                for (std::size_t p = 0; p < P; ++p)
                    target[p] = (column[p] - fitted[p]) * ens.increment(p, step)[j] / h;
                std::vector<double> zfit = proj.project(target);
                for (std::size_t p = 0; p < P; ++p) gamma[(p * d + j) * m + l] = zfit[p];
            }
        }

        for_each_block(P, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
            std::vector<double> fx(m), fz(d);
            for (std::size_t p = begin; p < end; ++p) {
                const auto x = ens.state(p, step);
                const double y = base.y(p, step);
                const auto z = base.z(p, step);
                model.driver_grad_x(t, x, y, z, fx);
                const double fy = model.driver_grad_y(t, x, y, z);
                model.driver_grad_z(t, x, y, z, fz);

                const ConstMatrixMap flow(ens.flow_at(p, step).data(), em, em);
                RowVector rhs = Eigen::Map<const RowVector>(expected.data() + p * m, em) * flow;
                rhs += h * Eigen::Map<const RowVector>(fx.data(), em) * flow;
                double* gz = var.grad_z.data() + (p * N + step) * d * m;
                for (std::size_t j = 0; j < d; ++j) {
                    const RowVector zj =
                        Eigen::Map<const RowVector>(gamma.data() + (p * d + j) * m, em) * flow;
                    for (std::size_t l = 0; l < m; ++l) gz[j * m + l] = zj(l);
                    rhs += h * fz[j] * zj;
                }
                rhs /= (1.0 - h * fy);
                double* gy = var.grad_y.data() + (p * (N + 1) + step) * m;
                for (std::size_t l = 0; l < m; ++l) {
                    if (!std::isfinite(rhs(l))) throw NumericalBlowup(p, step, "grad Y");
                    gy[l] = rhs(l);
                }
            }
        });
    }

    var.representation_residual = representation_check(var, base, ens, model);
    return var;
}

RepresentationReport representation_check(const VariationalSolution& var,
                                          const BackwardSolution& base,
                                          const PathEnsemble& ens, const ModelSpec& model) {
    if (!ens.has_flows()) throw AssumptionLevelTooLow("representation check needs flows");
    const std::size_t P = ens.n_paths;
    const std::size_t N = ens.steps();
    const std::size_t m = ens.dim_state;
    const std::size_t d = ens.dim_noise;
    const auto em = static_cast<Eigen::Index>(m);
    const auto ed = static_cast<Eigen::Index>(d);
    if (var.n_paths != P || var.steps != N || base.n_paths != P || base.steps() != N)
        throw InvalidParameters("representation check inputs do not share an ensemble");

    RepresentationReport report;
    report.rms.assign(N, 0.0);
    report.max.assign(N, 0.0);
    std::vector<double> sigma(m * d);
    for (std::size_t step = 0; step < N; ++step) {
        double sum = 0.0;
        double worst = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            model.diffusion(ens.partition.time(step), ens.state(p, step), sigma);
            const RowVector implied =
                Eigen::Map<const RowVector>(var.gy(p, step).data(), em) *
                ConstMatrixMap(ens.flow_inverse_at(p, step).data(), em, em) *
                ConstMatrixMap(sigma.data(), em, ed);
            const auto z = base.z(p, step);
            for (std::size_t j = 0; j < d; ++j) {
                const double r = z[j] - implied(static_cast<Eigen::Index>(j));
                sum += r * r;
                worst = std::max(worst, std::abs(r));
            }
        }
        report.rms[step] = std::sqrt(sum / static_cast<double>(P * d));
        report.max[step] = worst;
        report.time_averaged_rms += ens.partition.step_size(step) * report.rms[step];
    }
    report.time_averaged_rms /= ens.partition.horizon();
    return report;
}

}  // namespace qgbsde
