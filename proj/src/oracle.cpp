#include "qgbsde/oracle.hpp"

#include <boost/math/tools/minima.hpp>
#include <algorithm>
#include <cmath>
#include <string>

#include "qgbsde/errors.hpp"
#include "qgbsde/gauss_hermite.hpp"

namespace qgbsde {

namespace {

struct AdaptedRule {
    std::vector<double> points;   // u values
    std::vector<double> weights;  // weights against the standard normal density
};

/// Shifts/scales the standard rule so that sum w_q F(u_q) ~ E[F(U)] and the
/// nodes sit under the mass of F(u) phi(u) = exp(log_integrand(u)) phi(u).
AdaptedRule adapt(const GaussHermiteRule& base, double center, double scale) {
    AdaptedRule out;
    out.points.resize(base.nodes.size());
    out.weights.resize(base.nodes.size());
    for (std::size_t q = 0; q < base.nodes.size(); ++q) {
        const double v = base.nodes[q];
        const double u = center + scale * v;
        out.points[q] = u;
        const double w = base.weights[q];
        out.weights[q] = w > 0.0 ? std::exp(std::log(w * scale) + 0.5 * (v * v - u * u)) : 0.0;
    }
    return out;
}

void check_reference(const QuadraticReference& ref) {
    if (!ref.terminal) throw InvalidParameters("reference needs a terminal function");
    if (!(ref.horizon > 0.0)) throw InvalidParameters("reference horizon must be positive");
    if (ref.nodes < 16) throw InvalidParameters("reference quadrature needs at least 16 nodes");
    if (!std::isfinite(ref.sigma)) throw InvalidParameters("sigma must be finite");
}

/// Mode and curvature scale of u -> gamma g(x + s u) - u^2 / 2.
std::pair<double, double> laplace_point(const QuadraticReference& ref, double gamma) {
    const double s = ref.sigma * std::sqrt(ref.horizon);
    auto log_integrand = [&](double u) { return gamma * ref.terminal(ref.x + s * u) - 0.5 * u * u; };

    double sup = 0.0;
    for (int k = -200; k <= 200; ++k) sup = std::max(sup, std::abs(ref.terminal(ref.x + 0.1 * k)));
    if (!std::isfinite(sup)) throw InvalidParameters("terminal must be bounded");
    const double reach = 2.0 * std::sqrt(2.0 * std::abs(gamma) * sup) + 1.0;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double u) { return -log_integrand(u); }, -reach, reach, 52);
    const double mode = best.first;
    const double eps = 1e-4;
    const double curvature = -(log_integrand(mode + eps) - 2.0 * log_integrand(mode) +
                               log_integrand(mode - eps)) / (eps * eps);
    const double scale = curvature > 0.0 ? std::clamp(1.0 / std::sqrt(curvature), 0.25, 4.0) : 1.0;
    return {mode, scale};
}

ColeHopfValue evaluate(const QuadraticReference& ref, std::size_t nodes, double mode, double scale) {
    const AdaptedRule rule = adapt(gauss_hermite(nodes), mode, scale);
    const double s = ref.sigma * std::sqrt(ref.horizon);
    double excess = 0.0;  // E[exp(gamma g) - 1], kept separate for small gamma
    double mass = 0.0;
    double slope = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double x = ref.x + s * rule.points[q];
        const double e = std::expm1(ref.gamma * ref.terminal(x));
        excess += rule.weights[q] * e;
        mass += rule.weights[q] * (1.0 + e);
        if (ref.terminal_derivative) slope += rule.weights[q] * ref.terminal_derivative(x) * (1.0 + e);
    }
    double total = 0.0;
    for (double w : rule.weights) total += w;
    // Self-normalized: the adapted weights integrate 1 only up to quadrature error.
    ColeHopfValue v;
    v.y0 = std::log1p(excess / total) / ref.gamma;
    v.z0 = ref.terminal_derivative ? ref.sigma * slope / mass : std::nan("");
    return v;
}

}  // namespace

ColeHopfValue cole_hopf_reference(const QuadraticReference& ref) {
    check_reference(ref);
    if (ref.gamma == 0.0 || !std::isfinite(ref.gamma))
        throw InvalidParameters("gamma must be finite and nonzero");
    const auto [mode, scale] = laplace_point(ref, ref.gamma);
    ColeHopfValue v = evaluate(ref, ref.nodes, mode, scale);
    const ColeHopfValue fine = evaluate(ref, 2 * ref.nodes, mode, scale);
    v.y0_error = std::abs(v.y0 - fine.y0);
    v.z0_error = ref.terminal_derivative ? std::abs(v.z0 - fine.z0) : 0.0;
    if (!(v.y0_error <= ref.tolerance) || !(v.z0_error <= ref.tolerance))
        throw QuadratureUnstable("Cole-Hopf quadrature changed by " +
                                 std::to_string(std::max(v.y0_error, v.z0_error)) +
                                 " when doubling " + std::to_string(ref.nodes) + " nodes");
    return v;
}

double gaussian_expectation(const QuadraticReference& ref) {
    check_reference(ref);
    const GaussHermiteRule rule = gauss_hermite(2 * ref.nodes);
    const double s = ref.sigma * std::sqrt(ref.horizon);
    double mean = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        mean += rule.weights[q] * ref.terminal(ref.x + s * rule.nodes[q]);
    return mean;
}

double bmo_bound(double M, double T, double xi_sup) {
    if (!(M > 0.0) || !std::isfinite(M)) throw InvalidParameters("BMO bound needs M > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidParameters("BMO bound needs T > 0");
    if (!(xi_sup >= 0.0) || !std::isfinite(xi_sup))
        throw InvalidParameters("BMO bound needs a finite xi_sup >= 0");
    return (4.0 + 6.0 * M * M * T) / (3.0 * M * M) * std::exp(6.0 * M * xi_sup + M * T);
}

}  // namespace qgbsde
