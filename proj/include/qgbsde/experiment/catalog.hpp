#pragma once

#include <string>
#include <vector>

#include "qgbsde/model.hpp"

namespace qgbsde::catalog {

/// One registered coefficient with its numeric parameters.
struct CoefficientChoice {
    std::string kind;
    std::vector<double> params;
};

/// Config-level description of a model: dimensions plus catalog selections.
struct ModelChoice {
    std::string preset = "custom";
    std::size_t dim_state = 1;
    std::size_t dim_noise = 1;
    std::vector<double> initial_state{0.0};
    double horizon = 1.0;
    CoefficientChoice drift{"zero", {}};
    CoefficientChoice diffusion{"constant", {1.0}};
    CoefficientChoice driver{"zero", {}};
    CoefficientChoice terminal{"identity", {}};
};

/// Registered kinds:
///   drift:     zero | constant(c) | linear(a)             b_k = c, b_k = a x_k
///   diffusion: constant(s) | linear(s)                    sigma_kk = s, sigma_kk = s x_k
///   driver:    zero | discount(r) | linear(a_y, a_z) | quadratic(gamma)
///              | quadratic_lipschitz(gamma, a_y, a_x)
///   terminal:  identity | constant(c) | tanh(amplitude, scale) | sin(amplitude, scale)
///
/// Presets: brownian_identity, brownian_tanh, discount, canonical_quadratic, gbm,
/// deterministic_linear, steep_quadratic (canonical driver, g = 2 tanh(3x), so
/// |Z| reaches about 5 and low truncation levels are active).
std::vector<std::string> preset_names();
bool has_preset(const std::string& name);
ModelChoice preset(const std::string& name);

std::vector<std::string> kinds(const std::string& slot);

/// Throws InvalidModel for unknown kinds or wrong parameter counts.
ModelSpec build_model(const ModelChoice& choice);

/// b = 0, sigma = 1, f = 0, g(x) = x, x = 0, T = 1.
ModelSpec brownian_identity();
/// b = 0, sigma = 1, f = 0, g = tanh.
ModelSpec brownian_tanh();
/// f(y) = -rate y, g = 1 on a Brownian forward process.
ModelSpec discount(double rate = 0.1);
/// f(z) = gamma/2 |z|^2, g = tanh, b = 0, sigma = 1, x = 0, T = 1.
ModelSpec canonical_quadratic(double gamma = 1.0);
/// b(x) = mu x, sigma(x) = s x, x = 1, f = 0, g(x) = x.
ModelSpec geometric(double mu = 0.05, double sigma = 0.2);

}  // namespace qgbsde::catalog
