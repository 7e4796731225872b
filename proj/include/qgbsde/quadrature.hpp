#pragma once

#include <cstddef>
#include <vector>

#include "qgbsde/model.hpp"
#include "qgbsde/partition.hpp"

namespace qgbsde {

struct SpaceGrid {
    double lower = -8.0;
    double upper = 8.0;
    std::size_t nodes = 128;
};

struct QuadratureOptions {
    std::size_t hermite_nodes = 32;
    unsigned picard_iters = 3;
    /// Upper bound on the probability that X leaves the grid before T.
    double leakage_tolerance = 1e-6;
};

/// Deterministic solution y(t_i, x_j), z(t_i, x_j) on a uniform space grid.
struct GridSolution {
    Partition partition;
    std::vector<double> space;
    std::vector<double> y;  ///< (N+1) x J
    std::vector<double> z;  ///< N x J

    /// Cubic-spline interpolation in x of y at time node `node`.
    double y_at(std::size_t node, double x) const;
    double z_at(std::size_t step, double x) const;
};

/// Same one-step backward recursion as solve_backward_regression for m = d = 1,
/// with the conditional expectations over the Euler Gaussian transition
/// X_{i+1} = x + b h + sigma sqrt(h) U computed by Gauss-Hermite quadrature and
/// y(t_{i+1}, .) evaluated by cubic-spline interpolation:
///
///   z_i(x) = E[y_{i+1}(X_{i+1}) U] / sqrt(h)
///   y_i(x) = E[y_{i+1}(X_{i+1})] + h f(t_i, x, y_i(x), z_i(x))
///
/// Throws DomainTooSmall when the grid may lose more probability mass than
/// the leakage tolerance, and InvalidModel unless m = d = 1.
GridSolution solve_quadrature_1d(const ModelSpec& model, const SpaceGrid& grid,
                                 const Partition& partition, const QuadratureOptions& options = {});

}  // namespace qgbsde
