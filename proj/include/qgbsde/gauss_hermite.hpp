#pragma once

#include <cstddef>
#include <vector>

namespace qgbsde {

/// Gauss-Hermite rule for the standard normal density:
/// sum_q weights[q] f(nodes[q]) ~ E[f(U)], U ~ N(0, 1). Weights sum to one.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point rule (n >= 1). Nodes are eigenvalues of the Jacobi matrix of the
/// orthonormal Hermite recurrence, polished by Newton; weights come from the
/// Christoffel function 1 / sum_k p_k(x)^2.
GaussHermiteRule gauss_hermite(std::size_t n);

}  // namespace qgbsde
