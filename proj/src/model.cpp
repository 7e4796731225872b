#include "qgbsde/model.hpp"

#include <cmath>
#include <string>

#include "qgbsde/errors.hpp"
#include "qgbsde/rng.hpp"

namespace qgbsde {

const char* to_string(AssumptionLevel level) {
    switch (level) {
        case AssumptionLevel::HX0Y0: return "HX0Y0";
        case AssumptionLevel::HX1Y1: return "HX1Y1";
        case AssumptionLevel::HX2Y2: return "HX2Y2";
    }
    return "unknown";
}

void validate_model(const ModelSpec& model, std::size_t samples, std::uint64_t seed) {
    const std::size_t m = model.dim_state;
    const std::size_t d = model.dim_noise;
    if (m == 0 || d == 0) throw InvalidModel("dimensions m and d must be positive");
    if (!(model.horizon > 0.0) || !std::isfinite(model.horizon))
        throw InvalidModel("horizon T must be positive and finite");
    if (model.initial_state.size() != m)
        throw InvalidModel("initial state has length " + std::to_string(model.initial_state.size()) +
                           ", expected " + std::to_string(m));
    if (!model.drift || !model.diffusion || !model.driver || !model.terminal)
        throw InvalidModel("drift, diffusion, driver and terminal must all be set");
    if (model.assumption_level >= AssumptionLevel::HX1Y1) {
        if (!model.has_flow_coefficients())
            throw InvalidModel(std::string("assumption level ") + to_string(model.assumption_level) +
                               " requires drift and diffusion Jacobians");
        if (!model.has_driver_gradients())
            throw InvalidModel(std::string("assumption level ") + to_string(model.assumption_level) +
                               " requires driver and terminal gradients");
    }
    if (model.lipschitz_K < 0.0 || model.growth_M < 0.0)
        throw InvalidModel("constants K and M must be nonnegative");

    // Spot-check |f| <= M (1 + |y| + |z|^2) on random points around the initial state.
    std::vector<double> x(m), z(d), noise(m + d + 2);
    for (std::size_t s = 0; s < samples; ++s) {
        standard_normals(seed, s, 0, noise);
        const double t = model.horizon * uniform_open(static_cast<std::uint32_t>(s * 2654435761u),
                                                      static_cast<std::uint32_t>(seed + s));
        for (std::size_t k = 0; k < m; ++k)
            x[k] = model.initial_state[k] + (1.0 + model.horizon) * noise[k];
        double z2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            z[j] = 3.0 * noise[m + j];
            z2 += z[j] * z[j];
        }
        const double y = 2.0 * noise[m + d];
        const double f = model.driver(t, x, y, z);
        if (!std::isfinite(f))
            throw InvalidModel("driver is not finite at sample " + std::to_string(s));
        const double bound = model.growth_M * (1.0 + std::abs(y) + z2);
        if (std::abs(f) > bound * (1.0 + 1e-12) + 1e-12)
            throw InvalidModel("growth certificate M = " + std::to_string(model.growth_M) +
                               " violated at sample " + std::to_string(s) + ": |f| = " +
                               std::to_string(std::abs(f)) + " > " + std::to_string(bound));
    }
}

}  // namespace qgbsde
