#include "qgbsde/truncation.hpp"

#include <array>
#include <cmath>

namespace qgbsde {

namespace {

/// h_n(z) in a small inline buffer; drivers run concurrently from path workers.
class TruncatedZ {
public:
    TruncatedZ(const TruncationFamily& family, std::span<const double> z) : size_(z.size()) {
        if (size_ > inline_.size()) heap_.resize(size_);
        family.apply(z, {data(), size_});
    }
    std::span<const double> view() const { return {data(), size_}; }

private:
    double* data() { return heap_.empty() ? inline_.data() : heap_.data(); }
    const double* data() const { return heap_.empty() ? inline_.data() : heap_.data(); }

    std::array<double, 8> inline_{};
    std::vector<double> heap_;
    std::size_t size_;
};

}  // namespace

double h(unsigned n, double z) { return TruncationFamily(n)(z); }

double h_prime(unsigned n, double z) { return TruncationFamily(n).derivative(z); }

std::vector<double> h_vec(unsigned n, std::span<const double> z) {
    std::vector<double> out(z.size());
    TruncationFamily(n).apply(z, out);
    return out;
}

ModelSpec truncate_driver(const ModelSpec& model, unsigned n) {
    ModelSpec out = model;
    const TruncationFamily family(n);

    out.driver = [inner = model.driver, family](double t, std::span<const double> x, double y,
                                                std::span<const double> z) {
        return inner(t, x, y, TruncatedZ(family, z).view());
    };
    if (model.driver_grad_x) {
        out.driver_grad_x = [inner = model.driver_grad_x, family](
                                double t, std::span<const double> x, double y,
                                std::span<const double> z, std::span<double> g) {
            inner(t, x, y, TruncatedZ(family, z).view(), g);
        };
    }
    if (model.driver_grad_y) {
        out.driver_grad_y = [inner = model.driver_grad_y, family](
                                double t, std::span<const double> x, double y,
                                std::span<const double> z) {
            return inner(t, x, y, TruncatedZ(family, z).view());
        };
    }
    if (model.driver_grad_z) {
        out.driver_grad_z = [inner = model.driver_grad_z, family](
                                double t, std::span<const double> x, double y,
                                std::span<const double> z, std::span<double> g) {
            inner(t, x, y, TruncatedZ(family, z).view(), g);
            for (std::size_t j = 0; j < z.size(); ++j) g[j] *= family.derivative(z[j]);
        };
    }

    out.quadratic_in_z = false;
    out.z_lipschitz = model.growth_M * (3.0 + 2.0 * static_cast<double>(n));
    out.truncation_level = n;
    out.name = model.name + "|h" + std::to_string(n);
    return out;
}

}  // namespace qgbsde
