#include "qgbsde/quadrature.hpp"

#include <algorithm>
#include <array>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>

#include "qgbsde/errors.hpp"
#include "qgbsde/gauss_hermite.hpp"

namespace qgbsde {

namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

Spline make_spline(const double* values, const std::vector<double>& space) {
    return Spline(values, space.size(), space.front(), space[1] - space[0]);
}

double clamp_to(const std::vector<double>& space, double x) {
    return std::clamp(x, space.front(), space.back());
}

}  // namespace

double GridSolution::y_at(std::size_t node, double x) const {
    return make_spline(y.data() + node * space.size(), space)(clamp_to(space, x));
}

double GridSolution::z_at(std::size_t step, double x) const {
    return make_spline(z.data() + step * space.size(), space)(clamp_to(space, x));
}

GridSolution solve_quadrature_1d(const ModelSpec& model, const SpaceGrid& grid,
                                 const Partition& partition, const QuadratureOptions& options) {
    if (model.dim_state != 1 || model.dim_noise != 1)
        throw InvalidModel("quadrature solver requires m = d = 1");
    if (grid.nodes < 5 || !(grid.lower < grid.upper))
        throw InvalidParameters("space grid needs at least 5 nodes and lower < upper");
    if (options.picard_iters < 1) throw InvalidParameters("picard_iters must be at least 1");
    const std::size_t J = grid.nodes;
    const std::size_t N = partition.steps();
    const double x0 = model.initial_state.at(0);

    GridSolution sol{partition, std::vector<double>(J), std::vector<double>((N + 1) * J),
                     std::vector<double>(N * J)};
    const double dx = (grid.upper - grid.lower) / static_cast<double>(J - 1);
    for (std::size_t j = 0; j < J; ++j) sol.space[j] = grid.lower + dx * static_cast<double>(j);
    sol.space.back() = grid.upper;

    // Probability of leaving the grid: sup |b| and sup |sigma| over the grid and
    // a reflection bound on the running maximum of the Gaussian part.
    double b_max = 0.0;
    double s_max = 0.0;
    std::array<double, 1> out{};
    for (std::size_t i = 0; i <= N; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            const std::array<double, 1> x{sol.space[j]};
            model.drift(partition.time(i), x, out);
            b_max = std::max(b_max, std::abs(out[0]));
            model.diffusion(partition.time(i), x, out);
            s_max = std::max(s_max, std::abs(out[0]));
        }
    const double T = partition.horizon();
    const double room = std::min(x0 - grid.lower, grid.upper - x0) - b_max * T;
    double leakage = 1.0;
    if (room > 0.0)
        leakage = s_max == 0.0 ? 0.0 : 2.0 * std::erfc(room / (s_max * std::sqrt(2.0 * T)));
    if (!(leakage <= options.leakage_tolerance))
        throw DomainTooSmall("space grid [" + std::to_string(grid.lower) + ", " +
                             std::to_string(grid.upper) + "] may leak probability " +
                             std::to_string(leakage));

    for (std::size_t j = 0; j < J; ++j) {
        const std::array<double, 1> x{sol.space[j]};
        sol.y[N * J + j] = model.terminal(x);
    }

    const GaussHermiteRule rule = gauss_hermite(options.hermite_nodes);
    const std::size_t Q = rule.nodes.size();
    for (std::size_t step = N; step-- > 0;) {
        const double t = partition.time(step);
        const double h = partition.step_size(step);
        const double sqrt_h = std::sqrt(h);
        const Spline next = make_spline(sol.y.data() + (step + 1) * J, sol.space);
        for (std::size_t j = 0; j < J; ++j) {
            const std::array<double, 1> x{sol.space[j]};
            std::array<double, 1> b{}, s{};
            model.drift(t, x, b);
            model.diffusion(t, x, s);
            double ey = 0.0;
            double ez = 0.0;
            for (std::size_t q = 0; q < Q; ++q) {
                const double v = next(clamp_to(sol.space, x[0] + b[0] * h + s[0] * sqrt_h * rule.nodes[q]));
                ey += rule.weights[q] * v;
                ez += rule.weights[q] * v * rule.nodes[q];
            }
            const std::array<double, 1> z{ez / sqrt_h};
            double y = ey;
            for (unsigned pass = 0; pass < options.picard_iters; ++pass)
                y = ey + h * model.driver(t, x, y, z);
            if (!std::isfinite(y) || !std::isfinite(z[0]))
                throw NumericalBlowup(0, step, "quadrature solution at x = " + std::to_string(x[0]));
            sol.y[step * J + j] = y;
            sol.z[step * J + j] = z[0];
        }
    }
    return sol;
}

}  // namespace qgbsde
