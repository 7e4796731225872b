#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "qgbsde/model.hpp"

namespace qgbsde {

/// C^1 odd truncation of the identity at level n:
///
///   h_n(z) = z                              |z| <= n
///          = (-n^2 + 2nz - z(z - 4)) / 4    n <= z <= n + 2
///          = (n^2 + 2nz + z(z + 4)) / 4     -(n + 2) <= z <= -n
///          = +-(n + 1)                      |z| > n + 2
///
/// |h_n(z)| <= min(|z|, n + 1) and 0 <= h_n'(z) <= 1.
class TruncationFamily {
public:
    explicit TruncationFamily(unsigned level) : n_(static_cast<double>(level)), level_(level) {}

    unsigned level() const noexcept { return level_; }

    double operator()(double z) const noexcept {
        const double a = std::abs(z);
        if (a <= n_) return z;
        const double s = z < 0.0 ? -1.0 : 1.0;
        if (a >= n_ + 2.0) return s * (n_ + 1.0);
        return s * (-n_ * n_ + 2.0 * n_ * a - a * (a - 4.0)) / 4.0;
    }

    double derivative(double z) const noexcept {
        const double a = std::abs(z);
        if (a <= n_) return 1.0;
        if (a >= n_ + 2.0) return 0.0;
        return (2.0 * n_ - 2.0 * a + 4.0) / 4.0;
    }

    void apply(std::span<const double> z, std::span<double> out) const noexcept {
        for (std::size_t j = 0; j < z.size(); ++j) out[j] = (*this)(z[j]);
    }

private:
    double n_;
    unsigned level_;
};

double h(unsigned n, double z);
double h_prime(unsigned n, double z);
std::vector<double> h_vec(unsigned n, std::span<const double> z);

/// Same model with the driver's z argument replaced by h_n(z). Gradients are
/// composed accordingly (grad_z picks up the factor h_n'(z_j)), the model is
/// flagged Lipschitz with z-bound M (3 + 2n), and truncation_level is set.
ModelSpec truncate_driver(const ModelSpec& model, unsigned n);

}  // namespace qgbsde
