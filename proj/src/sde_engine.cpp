#include "qgbsde/sde_engine.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "qgbsde/errors.hpp"
#include "qgbsde/parallel.hpp"
#include "qgbsde/rng.hpp"

namespace qgbsde {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_inputs(const ModelSpec& model, std::size_t n_paths) {
    if (n_paths == 0) throw InvalidParameters("n_paths must be at least 1");
    if (model.initial_state.size() != model.dim_state)
        throw InvalidModel("initial state length does not match dim_state");
    if (!model.drift || !model.diffusion) throw InvalidModel("drift and diffusion must be set");
}

void integrate_euler(const ModelSpec& model, PathEnsemble& ens, unsigned workers) {
    const std::size_t m = ens.dim_state;
    const std::size_t d = ens.dim_noise;
    const std::size_t n = ens.steps();
    for_each_block(ens.n_paths, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> drift(m), diffusion(m * d);
        for (std::size_t p = begin; p < end; ++p) {
            double* x = ens.states.data() + p * (n + 1) * m;
            std::copy(model.initial_state.begin(), model.initial_state.end(), x);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = ens.partition.time(i);
                const double h = ens.partition.step_size(i);
                const std::span<const double> xi(x + i * m, m);
                model.drift(t, xi, drift);
                model.diffusion(t, xi, diffusion);
                if (!all_finite(drift)) throw NumericalBlowup(p, i, "drift");
                if (!all_finite(diffusion)) throw NumericalBlowup(p, i, "diffusion");
                const auto dw = ens.increment(p, i);
                double* next = x + (i + 1) * m;
                for (std::size_t k = 0; k < m; ++k) {
                    double v = xi[k] + drift[k] * h;
                    for (std::size_t j = 0; j < d; ++j) v += diffusion[k * d + j] * dw[j];
                    if (!std::isfinite(v)) throw NumericalBlowup(p, i + 1, "state");
                    next[k] = v;
                }
            }
        }
    });
}

double condition_number(const RowMatrix& a) {
    if (a.rows() == 1) {
        const double v = std::abs(a(0, 0));
        return (v > 0.0 && std::isfinite(v)) ? 1.0 : std::numeric_limits<double>::infinity();
    }
    Eigen::JacobiSVD<RowMatrix> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0) || !std::isfinite(s(0))) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

}  // namespace

PathEnsemble::PathEnsemble(Partition grid, std::size_t paths, std::size_t m, std::size_t d,
                           std::uint64_t rng_seed)
    : partition(std::move(grid)), n_paths(paths), dim_state(m), dim_noise(d), seed(rng_seed),
      increments(paths * partition.steps() * d),
      states(paths * (partition.steps() + 1) * m) {}

std::vector<double> PathEnsemble::states_at(std::size_t node) const {
    std::vector<double> out(n_paths * dim_state);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto x = state(p, node);
        std::copy(x.begin(), x.end(), out.begin() + p * dim_state);
    }
    return out;
}

PathEnsemble simulate_forward(const ModelSpec& model, const Partition& partition,
                              std::size_t n_paths, std::uint64_t seed, unsigned workers) {
    check_inputs(model, n_paths);
    const std::size_t n = partition.steps();
    const std::size_t d = model.dim_noise;
    std::vector<double> increments(n_paths * n * d);
    for_each_block(n_paths, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            for (std::size_t i = 0; i < n; ++i) {
                std::span<double> dw(increments.data() + (p * n + i) * d, d);
                standard_normals(seed, p, static_cast<std::uint32_t>(i), dw);
                const double scale = std::sqrt(partition.step_size(i));
                for (double& v : dw) v *= scale;
            }
        }
    });
    return simulate_with_increments(model, partition, std::move(increments), n_paths, seed,
                                    workers);
}

PathEnsemble simulate_with_increments(const ModelSpec& model, const Partition& partition,
                                      std::vector<double> increments, std::size_t n_paths,
                                      std::uint64_t seed, unsigned workers) {
    check_inputs(model, n_paths);
    PathEnsemble ens(partition, n_paths, model.dim_state, model.dim_noise, seed);
    if (increments.size() != ens.increments.size())
        throw InvalidParameters("increment array has wrong size");
    ens.increments = std::move(increments);
    integrate_euler(model, ens, workers);
    return ens;
}

PathEnsemble coarsen(const ModelSpec& model, const PathEnsemble& fine, const Partition& coarse,
                     unsigned workers) {
    const auto index = coarse.embedding_in(fine.partition);
    const std::size_t d = fine.dim_noise;
    const std::size_t nc = coarse.steps();
    std::vector<double> increments(fine.n_paths * nc * d, 0.0);
    for (std::size_t p = 0; p < fine.n_paths; ++p)
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t k = index[i]; k < index[i + 1]; ++k) {
                const auto dw = fine.increment(p, k);
                for (std::size_t j = 0; j < d; ++j) increments[(p * nc + i) * d + j] += dw[j];
            }
    return simulate_with_increments(model, coarse, std::move(increments), fine.n_paths, fine.seed,
                                    workers);
}

PathEnsemble simulate_variational(const ModelSpec& model, PathEnsemble ens,
                                  const VariationalOptions& options) {
    if (!model.has_flow_coefficients())
        throw AssumptionLevelTooLow("variational flow needs drift and diffusion Jacobians");
    const std::size_t m = ens.dim_state;
    const std::size_t d = ens.dim_noise;
    const std::size_t n = ens.steps();
    const std::size_t mm = m * m;
    ens.flow.assign(ens.n_paths * (n + 1) * mm, 0.0);
    ens.flow_inverse.assign(ens.n_paths * (n + 1) * mm, 0.0);

    for_each_block(ens.n_paths, options.workers, [&](std::size_t, std::size_t begin,
                                                     std::size_t end) {
        std::vector<double> jb(mm), js(m * d * m);
        RowMatrix drift_jac(m, m), step(m, m), inv_drift(m, m);
        std::vector<RowMatrix> noise_jac(d, RowMatrix(m, m));
        const RowMatrix identity = RowMatrix::Identity(m, m);
        for (std::size_t p = begin; p < end; ++p) {
            double* flow = ens.flow.data() + p * (n + 1) * mm;
            double* inv = ens.flow_inverse.data() + p * (n + 1) * mm;
            MatrixMap(flow, m, m) = identity;
            MatrixMap(inv, m, m) = identity;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = ens.partition.time(i);
                const double h = ens.partition.step_size(i);
                const auto x = ens.state(p, i);
                model.drift_jacobian(t, x, jb);
                model.diffusion_jacobian(t, x, js);
                if (!all_finite(jb)) throw NumericalBlowup(p, i, "drift Jacobian");
                if (!all_finite(js)) throw NumericalBlowup(p, i, "diffusion Jacobian");
                drift_jac = ConstMatrixMap(jb.data(), m, m);
                for (std::size_t j = 0; j < d; ++j)
                    for (std::size_t k = 0; k < m; ++k)
                        for (std::size_t l = 0; l < m; ++l)
                            noise_jac[j](k, l) = js[(k * d + j) * m + l];
                const auto dw = ens.increment(p, i);

                step = identity + drift_jac * h;
                for (std::size_t j = 0; j < d; ++j) step += noise_jac[j] * dw[j];
                ConstMatrixMap current(flow + i * mm, m, m);
                MatrixMap next(flow + (i + 1) * mm, m, m);
                next.noalias() = step * current;
                if (!all_finite({flow + (i + 1) * mm, mm}))
                    throw NumericalBlowup(p, i + 1, "variational flow");

                const double cond = condition_number(next);
                if (!(cond <= options.condition_cap)) throw SingularFlow(p, i + 1, cond);

                MatrixMap next_inv(inv + (i + 1) * mm, m, m);
                if (options.inverse == FlowInverseMethod::LinearSolve) {
                    next_inv = next.partialPivLu().solve(identity);
                } else {
                    // dA = A (-grad b + sum_j J_j^2) dt - sum_j A J_j dW_j
                    inv_drift = -drift_jac;
                    for (std::size_t j = 0; j < d; ++j) inv_drift += noise_jac[j] * noise_jac[j];
                    step = identity + inv_drift * h;
                    for (std::size_t j = 0; j < d; ++j) step -= noise_jac[j] * dw[j];
                    next_inv.noalias() = ConstMatrixMap(inv + i * mm, m, m) * step;
                }
                if (!all_finite({inv + (i + 1) * mm, mm}))
                    throw NumericalBlowup(p, i + 1, "inverse flow");
            }
        }
    });
    return ens;
}

double flow_identity_error(const PathEnsemble& ens) {
    if (!ens.has_flows()) throw AssumptionLevelTooLow("ensemble has no flows");
    const std::size_t m = ens.dim_state;
    double worst = 0.0;
    const RowMatrix identity = RowMatrix::Identity(m, m);
    for (std::size_t p = 0; p < ens.n_paths; ++p)
        for (std::size_t i = 0; i <= ens.steps(); ++i) {
            const RowMatrix r = ConstMatrixMap(ens.flow_at(p, i).data(), m, m) *
                                    ConstMatrixMap(ens.flow_inverse_at(p, i).data(), m, m) -
                                identity;
            worst = std::max(worst, r.cwiseAbs().maxCoeff());
        }
    return worst;
}

}  // namespace qgbsde
