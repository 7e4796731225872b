#include "qgbsde/experiment/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qgbsde/errors.hpp"

namespace qgbsde::catalog {

namespace {

void expect_params(const std::string& slot, const CoefficientChoice& c, std::size_t count) {
    if (c.params.size() != count)
        throw InvalidModel(slot + " '" + c.kind + "' takes " + std::to_string(count) +
                           " parameter(s), got " + std::to_string(c.params.size()));
}

double param_or(const CoefficientChoice& c, std::size_t i, double fallback) {
    return i < c.params.size() ? c.params[i] : fallback;
}

void set_drift(ModelSpec& model, const CoefficientChoice& c) {
    const std::size_t m = model.dim_state;
    if (c.kind == "zero" || c.kind == "constant") {
        double value = 0.0;
        if (c.kind == "constant") {
            expect_params("drift", c, 1);
            value = c.params[0];
        } else {
            expect_params("drift", c, 0);
        }
        model.drift = [value](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), value);
        };
        model.drift_jacobian = [](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        };
    } else if (c.kind == "linear") {
        expect_params("drift", c, 1);
        const double a = c.params[0];
        model.drift = [a](double, std::span<const double> x, std::span<double> out) {
            for (std::size_t k = 0; k < x.size(); ++k) out[k] = a * x[k];
        };
        model.drift_jacobian = [a, m](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < m; ++k) out[k * m + k] = a;
        };
    } else {
        throw InvalidModel("unknown drift kind '" + c.kind + "'");
    }
}

void set_diffusion(ModelSpec& model, const CoefficientChoice& c) {
    const std::size_t m = model.dim_state;
    const std::size_t d = model.dim_noise;
    expect_params("diffusion", c, 1);
    const double s = c.params[0];
    if (c.kind == "constant") {
        model.diffusion = [s, m, d](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < std::min(m, d); ++k) out[k * d + k] = s;
        };
        model.diffusion_jacobian = [](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        };
        if (m == d) model.ellipticity = s * s;
    } else if (c.kind == "linear") {
        model.diffusion = [s, m, d](double, std::span<const double> x, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < std::min(m, d); ++k) out[k * d + k] = s * x[k];
        };
        model.diffusion_jacobian = [s, m, d](double, std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t k = 0; k < std::min(m, d); ++k) out[(k * d + k) * m + k] = s;
        };
    } else {
        throw InvalidModel("unknown diffusion kind '" + c.kind + "'");
    }
}

double sum_sq(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
}

void set_driver(ModelSpec& model, const CoefficientChoice& c) {
    auto zero_x = [](double, std::span<const double>, double, std::span<const double>,
                     std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    model.driver_grad_x = zero_x;
    model.driver_grad_z = zero_x;
    model.driver_grad_y = [](double, std::span<const double>, double, std::span<const double>) {
        return 0.0;
    };
    model.quadratic_in_z = false;

    if (c.kind == "zero") {
        expect_params("driver", c, 0);
        model.driver = [](double, std::span<const double>, double, std::span<const double>) {
            return 0.0;
        };
        model.growth_M = 0.0;
        model.lipschitz_K = 0.0;
        model.z_lipschitz = 0.0;
    } else if (c.kind == "discount") {
        expect_params("driver", c, 1);
        const double r = c.params[0];
        model.driver = [r](double, std::span<const double>, double y, std::span<const double>) {
            return -r * y;
        };
        model.driver_grad_y = [r](double, std::span<const double>, double, std::span<const double>) {
            return -r;
        };
        model.growth_M = std::abs(r);
        model.lipschitz_K = std::abs(r);
        model.z_lipschitz = 0.0;
    } else if (c.kind == "linear") {
        expect_params("driver", c, 2);
        const double ay = c.params[0];
        const double az = c.params[1];
        model.driver = [ay, az](double, std::span<const double>, double y, std::span<const double> z) {
            double s = 0.0;
            for (double v : z) s += v;
            return ay * y + az * s;
        };
        model.driver_grad_y = [ay](double, std::span<const double>, double, std::span<const double>) {
            return ay;
        };
        model.driver_grad_z = [az](double, std::span<const double>, double, std::span<const double>,
                                   std::span<double> out) { std::fill(out.begin(), out.end(), az); };
        // |a_z sum z| <= |a_z| sqrt(d) |z| <= |a_z| sqrt(d) (1 + |z|^2)
        const double dz = std::abs(az) * std::sqrt(static_cast<double>(model.dim_noise));
        model.growth_M = std::max(std::abs(ay), dz);
        model.lipschitz_K = std::max(std::abs(ay), dz);
        model.z_lipschitz = dz;
    } else if (c.kind == "quadratic" || c.kind == "quadratic_lipschitz") {
        const bool mixed = c.kind == "quadratic_lipschitz";
        expect_params("driver", c, mixed ? 3 : 1);
        const double gamma = c.params[0];
        const double ay = param_or(c, 1, 0.0);
        const double ax = param_or(c, 2, 0.0);
        model.driver = [gamma, ay, ax](double, std::span<const double> x, double y,
                                       std::span<const double> z) {
            return 0.5 * gamma * sum_sq(z) + ay * y + ax * std::sin(x[0]);
        };
        model.driver_grad_x = [ax](double, std::span<const double> x, double, std::span<const double>,
                                   std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = ax * std::cos(x[0]);
        };
        model.driver_grad_y = [ay](double, std::span<const double>, double, std::span<const double>) {
            return ay;
        };
        model.driver_grad_z = [gamma](double, std::span<const double>, double,
                                      std::span<const double> z, std::span<double> out) {
            for (std::size_t j = 0; j < z.size(); ++j) out[j] = gamma * z[j];
        };
        model.growth_M = std::max({0.5 * std::abs(gamma), std::abs(ay), std::abs(ax)});
        model.lipschitz_K = std::max(std::abs(ay), std::abs(ax));
        model.quadratic_in_z = gamma != 0.0;
        model.z_lipschitz.reset();
    } else {
        throw InvalidModel("unknown driver kind '" + c.kind + "'");
    }
}

void set_terminal(ModelSpec& model, const CoefficientChoice& c) {
    if (c.kind == "identity") {
        expect_params("terminal", c, 0);
        model.terminal = [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v;
            return s;
        };
        model.terminal_gradient = [](std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 1.0);
        };
        model.terminal_sup.reset();
    } else if (c.kind == "constant") {
        expect_params("terminal", c, 1);
        const double v = c.params[0];
        model.terminal = [v](std::span<const double>) { return v; };
        model.terminal_gradient = [](std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        };
        model.terminal_sup = std::abs(v);
    } else if (c.kind == "tanh" || c.kind == "sin") {
        expect_params("terminal", c, 2);
        const double a = c.params[0];
        const double s = c.params[1];
        if (c.kind == "tanh") {
            model.terminal = [a, s](std::span<const double> x) { return a * std::tanh(s * x[0]); };
            model.terminal_gradient = [a, s](std::span<const double> x, std::span<double> out) {
                std::fill(out.begin(), out.end(), 0.0);
                const double th = std::tanh(s * x[0]);
                out[0] = a * s * (1.0 - th * th);
            };
        } else {
            model.terminal = [a, s](std::span<const double> x) { return a * std::sin(s * x[0]); };
            model.terminal_gradient = [a, s](std::span<const double> x, std::span<double> out) {
                std::fill(out.begin(), out.end(), 0.0);
                out[0] = a * s * std::cos(s * x[0]);
            };
        }
        model.terminal_sup = std::abs(a);
    } else {
        throw InvalidModel("unknown terminal kind '" + c.kind + "'");
    }
}

std::map<std::string, ModelChoice> registry() {
    std::map<std::string, ModelChoice> r;
    ModelChoice brownian;
    brownian.preset = "brownian_identity";
    r[brownian.preset] = brownian;

    ModelChoice tanh_terminal = brownian;
    tanh_terminal.preset = "brownian_tanh";
    tanh_terminal.terminal = {"tanh", {1.0, 1.0}};
    r[tanh_terminal.preset] = tanh_terminal;

    ModelChoice disc = brownian;
    disc.preset = "discount";
    disc.driver = {"discount", {0.1}};
    disc.terminal = {"constant", {1.0}};
    r[disc.preset] = disc;

    ModelChoice canonical = tanh_terminal;
    canonical.preset = "canonical_quadratic";
    canonical.driver = {"quadratic", {1.0}};
    r[canonical.preset] = canonical;

    ModelChoice steep = canonical;
    steep.preset = "steep_quadratic";
    steep.terminal = {"tanh", {2.0, 3.0}};
    r[steep.preset] = steep;

    ModelChoice gbm;
    gbm.preset = "gbm";
    gbm.initial_state = {1.0};
    gbm.drift = {"linear", {0.05}};
    gbm.diffusion = {"linear", {0.2}};
    r[gbm.preset] = gbm;

    ModelChoice deterministic;
    deterministic.preset = "deterministic_linear";
    deterministic.drift = {"linear", {0.3}};
    deterministic.diffusion = {"constant", {0.0}};
    r[deterministic.preset] = deterministic;
    return r;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, choice] : registry()) names.push_back(name);
    return names;
}

bool has_preset(const std::string& name) { return registry().count(name) > 0; }

ModelChoice preset(const std::string& name) {
    const auto r = registry();
    const auto it = r.find(name);
    if (it == r.end()) throw InvalidModel("unknown model preset '" + name + "'");
    return it->second;
}

std::vector<std::string> kinds(const std::string& slot) {
    if (slot == "drift") return {"zero", "constant", "linear"};
    if (slot == "diffusion") return {"constant", "linear"};
    if (slot == "driver") return {"zero", "discount", "linear", "quadratic", "quadratic_lipschitz"};
    if (slot == "terminal") return {"identity", "constant", "tanh", "sin"};
    return {};
}

ModelSpec build_model(const ModelChoice& choice) {
    if (choice.dim_state == 0 || choice.dim_noise == 0)
        throw InvalidModel("dimensions must be positive");
    if (choice.initial_state.size() != choice.dim_state)
        throw InvalidModel("initial state must have dim_state entries");
    ModelSpec model;
    model.name = choice.preset;
    model.dim_state = choice.dim_state;
    model.dim_noise = choice.dim_noise;
    model.initial_state = choice.initial_state;
    model.horizon = choice.horizon;
    set_drift(model, choice.drift);
    set_diffusion(model, choice.diffusion);
    set_driver(model, choice.driver);
    set_terminal(model, choice.terminal);
    model.assumption_level = AssumptionLevel::HX1Y1;
    return model;
}

ModelSpec brownian_identity() { return build_model(preset("brownian_identity")); }
ModelSpec brownian_tanh() { return build_model(preset("brownian_tanh")); }

ModelSpec discount(double rate) {
    ModelChoice c = preset("discount");
    c.driver.params = {rate};
    return build_model(c);
}

ModelSpec canonical_quadratic(double gamma) {
    ModelChoice c = preset("canonical_quadratic");
    c.driver.params = {gamma};
    return build_model(c);
}

ModelSpec geometric(double mu, double sigma) {
    ModelChoice c = preset("gbm");
    c.drift.params = {mu};
    c.diffusion.params = {sigma};
    return build_model(c);
}

}  // namespace qgbsde::catalog
