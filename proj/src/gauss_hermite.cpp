#include "qgbsde/gauss_hermite.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "qgbsde/errors.hpp"

namespace qgbsde {

namespace {

// Orthonormal probabilists' Hermite: p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1).
struct Evaluation {
    double value;       // p_n(x)
    double derivative;  // p_n'(x) = sqrt(n) p_{n-1}(x)
    double christoffel; // sum_{k<n} p_k(x)^2
};

Evaluation evaluate(std::size_t n, double x) {
    double prev = 0.0;
    double cur = 1.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += cur * cur;
        const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                            std::sqrt(static_cast<double>(k + 1));
        prev = cur;
        cur = next;
    }
    return {cur, std::sqrt(static_cast<double>(n)) * prev, sum};
}

}  // namespace

GaussHermiteRule gauss_hermite(std::size_t n) {
    if (n == 0) throw InvalidParameters("Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
        jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
    }
    const Eigen::VectorXd eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(jacobi, Eigen::EigenvaluesOnly).eigenvalues();

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        double x = eig(static_cast<Eigen::Index>(q));
        for (int it = 0; it < 3; ++it) {
            const Evaluation e = evaluate(n, x);
            const double dx = e.value / e.derivative;
            if (!std::isfinite(dx)) break;
            x -= dx;
        }
        rule.nodes[q] = x;
        // far tail nodes overflow the recurrence; their weight is below the double range
        const double c = evaluate(n, x).christoffel;
        rule.weights[q] = std::isfinite(c) ? 1.0 / c : 0.0;
    }
    // Symmetrize: the rule is exact for odd moments only if nodes mirror exactly.
    for (std::size_t q = 0; q < n / 2; ++q) {
        const std::size_t r = n - 1 - q;
        const double x = 0.5 * (rule.nodes[r] - rule.nodes[q]);
        const double w = 0.5 * (rule.weights[q] + rule.weights[r]);
        rule.nodes[q] = -x;
        rule.nodes[r] = x;
        rule.weights[q] = rule.weights[r] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

}  // namespace qgbsde
