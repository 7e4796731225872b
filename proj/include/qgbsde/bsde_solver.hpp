#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qgbsde/model.hpp"
#include "qgbsde/partition.hpp"
#include "qgbsde/regression.hpp"
#include "qgbsde/sde_engine.hpp"

namespace qgbsde {

struct StepDiagnostics {
    double y_residual_rms = 0.0;   ///< RMS of Y_{i+1} - E_i[Y_{i+1}]
    double z_residual_rms = 0.0;   ///< RMS residual of the first Z component's regression
    unsigned picard_passes = 0;
    double picard_residual = 0.0;  ///< max |Y^(k) - Y^(k-1)| after the last pass
    std::size_t fallback_cells = 0;
};

struct SolverMeta {
    std::string basis;
    unsigned picard_iters = 0;
    std::vector<StepDiagnostics> steps;  ///< indexed by time step i
};

/// Per-path (Y, Z) on the grid. Y is P x (N+1), Z and Zbar are P x N x d,
/// all row-major by path. Zbar stays empty until compute_zbar.
struct BackwardSolution {
    BackwardSolution(Partition grid, std::size_t paths, std::size_t d);

    Partition partition;
    std::size_t n_paths;
    std::size_t dim_noise;
    std::vector<double> Y;
    std::vector<double> Z;
    std::vector<double> Zbar;
    SolverMeta meta;

    std::size_t steps() const noexcept { return partition.steps(); }
    double y(std::size_t path, std::size_t node) const { return Y[path * (steps() + 1) + node]; }
    std::span<const double> z(std::size_t path, std::size_t step) const {
        return {Z.data() + (path * steps() + step) * dim_noise, dim_noise};
    }
    std::span<const double> zbar(std::size_t path, std::size_t step) const {
        return {Zbar.data() + (path * steps() + step) * dim_noise, dim_noise};
    }
    /// Sample mean of Y at t_0 (every path carries the same conditional estimate).
    double y0() const;
    /// Sample mean of Z at t_0, per component.
    std::vector<double> z0() const;
};

struct SolverOptions {
    RegressionBasis basis;          ///< default: 50 cells per dimension, degree 1
    unsigned picard_iters = 3;
    RegressionOptions regression;
    /// Optional a-priori bound: Y is clipped to [-bound, bound] after every step.
    std::optional<double> y_clamp;
};

/// One-step least-squares regression scheme, for i = N-1 down to 0:
///
///   Z_i = E_i[(Y_{i+1} - E_i[Y_{i+1}]) dW_i] / h_i
///   Y_i = E_i[Y_{i+1}] + h_i f(t_i, X_i, Y_i, Z_i)    (Picard passes in Y)
///
/// with E_i the projection onto the basis evaluated at X_i and Y_N = g(X_N).
/// Subtracting E_i[Y_{i+1}] in the Z target leaves the conditional
/// expectation unchanged and removes the O(1/h) variance of Y_{i+1} dW_i / h.
///
/// Throws RejectedModel for a quadratic driver that was not truncated,
/// DegenerateRegression, PicardDivergence and NumericalBlowup.
BackwardSolution solve_backward_regression(const ModelSpec& model, const PathEnsemble& ensemble,
                                           const SolverOptions& options = {});

/// Fills Zbar with the node regression E[Z_i | X_i]. Under the one-step
/// scheme Z is constant on each step, so this is the best F_{t_i}-measurable
/// approximation of Z on [t_i, t_{i+1}). For a Z known on a finer grid use
/// project_window_average instead.
BackwardSolution compute_zbar(BackwardSolution solution, const PathEnsemble& ensemble,
                              const RegressionBasis& basis, const RegressionOptions& options = {});

/// Coarse-grid projection of a fine-grid Z: for each coarse step i the window
/// average (1/h_i) sum_k Z_k dt_k over the fine steps inside [t_i, t_{i+1}) is
/// regressed on X_{t_i}. Returns a P x N_coarse x d array. Throws GridMismatch.
std::vector<double> project_window_average(const BackwardSolution& fine,
                                           const PathEnsemble& fine_ensemble,
                                           const Partition& coarse, const RegressionBasis& basis,
                                           const RegressionOptions& options = {});

}  // namespace qgbsde
