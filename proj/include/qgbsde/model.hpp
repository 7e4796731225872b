#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qgbsde {

/// Regularity ladder of the forward/backward coefficients. HX1Y1 and above
/// require every gradient function to be present.
enum class AssumptionLevel { HX0Y0 = 0, HX1Y1 = 1, HX2Y2 = 2 };

const char* to_string(AssumptionLevel level);

/// (t, x) -> out. Writes into caller storage so the hot simulation loop never allocates.
using StateField = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using DriverFn =
    std::function<double(double t, std::span<const double> x, double y, std::span<const double> z)>;
using DriverGradient = std::function<void(double t, std::span<const double> x, double y,
                                          std::span<const double> z, std::span<double> out)>;
using TerminalFn = std::function<double(std::span<const double> x)>;
using TerminalGradient = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Coefficients of the coupled system
///   X_t = x + int b(s, X_s) ds + int sigma(s, X_s) dW_s,
///   Y_t = g(X_T) - int Z_s dW_s + int f(s, X_s, Y_s, Z_s) ds.
///
/// Layouts: diffusion is m x d row-major; drift_jacobian is m x m with
/// entry [k][l] = d b_k / d x_l; diffusion_jacobian is m x d x m with entry
/// [k][j][l] = d sigma_kj / d x_l.
struct ModelSpec {
    std::string name;
    std::size_t dim_state = 1;
    std::size_t dim_noise = 1;
    std::vector<double> initial_state{0.0};
    double horizon = 1.0;

    StateField drift;
    StateField diffusion;
    StateField drift_jacobian;
    StateField diffusion_jacobian;

    DriverFn driver;
    DriverGradient driver_grad_x;  ///< length m
    DriverFn driver_grad_y;
    DriverGradient driver_grad_z;  ///< length d

    TerminalFn terminal;
    TerminalGradient terminal_gradient;  ///< length m

    double lipschitz_K = 0.0;
    /// Certifies |f(t,x,y,z)| <= M (1 + |y| + |z|^2); spot-checked by validate_model.
    double growth_M = 0.0;
    AssumptionLevel assumption_level = AssumptionLevel::HX0Y0;

    /// Driver grows quadratically in z; the regression solver refuses such a
    /// model until it has been passed through truncate_driver.
    bool quadratic_in_z = false;
    /// Global Lipschitz bound of the driver in z, when one is known.
    std::optional<double> z_lipschitz;
    /// Level n of the truncation applied to the driver, if any.
    std::optional<unsigned> truncation_level;
    /// sup |g|, when known. Used by the BMO bound.
    std::optional<double> terminal_sup;
    /// Uniform ellipticity constant c in y^T sigma sigma^T y >= c |y|^2. Recorded only.
    std::optional<double> ellipticity;

    bool has_flow_coefficients() const { return drift_jacobian && diffusion_jacobian; }
    bool has_driver_gradients() const {
        return driver_grad_x && driver_grad_y && driver_grad_z && terminal_gradient;
    }
};

/// Checks structural invariants (dimensions, presence of the coefficient and
/// gradient functions demanded by the assumption level) and spot-checks the
/// growth certificate on `samples` random points. Throws InvalidModel.
void validate_model(const ModelSpec& model, std::size_t samples = 1000, std::uint64_t seed = 0);

}  // namespace qgbsde
