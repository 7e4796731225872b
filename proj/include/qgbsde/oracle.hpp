#pragma once

#include <cstddef>
#include <functional>

namespace qgbsde {

/// Purely quadratic problem f = (gamma/2)|z|^2 with b = 0, constant sigma, m = d = 1.
struct QuadraticReference {
    double gamma = 1.0;
    std::function<double(double)> terminal;
    std::function<double(double)> terminal_derivative;
    double x = 0.0;
    double horizon = 1.0;
    double sigma = 1.0;
    std::size_t nodes = 64;
    /// Largest accepted change of Y_0 or Z_0 when the node count doubles.
    double tolerance = 1e-8;
};

struct ColeHopfValue {
    double y0 = 0.0;
    double z0 = 0.0;
    double y0_error = 0.0;  ///< |Y_0(n) - Y_0(2n)|
    double z0_error = 0.0;
};

/// Exponential transform: Y_0 = (1/gamma) log E[exp(gamma g(x + sigma sqrt(T) U))]
/// and Z_0 = sigma E[g' e^{gamma g}] / E[e^{gamma g}].
///
/// The integrals use adaptive Gauss-Hermite quadrature: the rule is centred on
/// the mode of gamma g(x + sigma sqrt(T) u) - u^2/2 and scaled by its
/// curvature there. Throws QuadratureUnstable when doubling the node count
/// moves either value by more than the tolerance.
ColeHopfValue cole_hopf_reference(const QuadraticReference& ref);

/// E[g(x + sigma sqrt(T) U)] by the same quadrature; the gamma -> 0 limit of Y_0.
double gaussian_expectation(const QuadraticReference& ref);

/// Closed-form BMO bound (4 + 6 M^2 T) / (3 M^2) exp(6 M xi_sup + M T).
/// Throws InvalidParameters unless M > 0, T > 0, xi_sup >= 0.
double bmo_bound(double M, double T, double xi_sup);

}  // namespace qgbsde
