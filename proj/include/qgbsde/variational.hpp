#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/model.hpp"
#include "qgbsde/sde_engine.hpp"

namespace qgbsde {

struct RepresentationReport {
    std::vector<double> rms;  ///< per step i = 0..N-1, over paths and components
    std::vector<double> max;
    double time_averaged_rms = 0.0;  ///< sum_i h_i rms_i / T
};

/// Solution of the linear BSDE for (grad Y, grad Z), derivatives with respect
/// to the initial state. grad_y is P x (N+1) x m, grad_z is P x N x d x m.
struct VariationalSolution {
    std::size_t n_paths = 0;
    std::size_t steps = 0;
    std::size_t dim_state = 0;
    std::size_t dim_noise = 0;
    std::vector<double> grad_y;
    std::vector<double> grad_z;
    RepresentationReport representation_residual;

    std::span<const double> gy(std::size_t path, std::size_t node) const {
        return {grad_y.data() + (path * (steps + 1) + node) * dim_state, dim_state};
    }
    /// d x m block, row j = derivative of Z^j.
    std::span<const double> gz(std::size_t path, std::size_t step) const {
        return {grad_z.data() + (path * steps + step) * dim_noise * dim_state,
                dim_noise * dim_state};
    }
};

/// Backward regression on
///   grad Y_t = grad g(X_T) grad X_T - int grad Z dW
///              + int (f_x grad X + f_y grad Y + f_z grad Z) ds,
/// with f_x, f_y, f_z frozen on the base solution (X, Y, Z). grad Y_{i+1} is
/// rebased by (grad X_i)^{-1} before regressing on X_i, so the regressand is
/// a function of the Markov state; the result is mapped back with grad X_i.
/// The linear implicit step in grad Y is solved exactly.
///
/// Throws AssumptionLevelTooLow when the ensemble has no flows or the model
/// lacks gradients.
VariationalSolution solve_variational_bsde(const ModelSpec& model, const PathEnsemble& ensemble,
                                           const BackwardSolution& base,
                                           const SolverOptions& options = {});

/// Residual of Z_i - grad Y_i (grad X_i)^{-1} sigma(t_i, X_i) over paths.
RepresentationReport representation_check(const VariationalSolution& var,
                                          const BackwardSolution& base,
                                          const PathEnsemble& ensemble, const ModelSpec& model);

}  // namespace qgbsde
