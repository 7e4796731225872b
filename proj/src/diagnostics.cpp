#include "qgbsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "qgbsde/errors.hpp"
#include "qgbsde/truncation.hpp"

namespace qgbsde {

namespace {

Estimate mean_and_error(std::span<const double> values) {
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace

FittedOrder fit_convergence_order(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw InvalidPoints("order fit needs at least three points");
    for (const auto& [scale, error] : points)
        if (!(scale > 0.0) || !(error > 0.0) || !std::isfinite(scale) || !std::isfinite(error))
            throw InvalidPoints("order fit needs positive finite scales and errors");
    const auto n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [scale, error] : points) {
        sx += std::log(scale);
        sy += std::log(error);
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [scale, error] : points) {
        const double dx = std::log(scale) - mx;
        const double dy = std::log(error) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw InvalidPoints("order fit needs at least two distinct scales");
    FittedOrder fit;
    fit.points = points.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = std::max(0.0, syy - fit.slope * sxy);
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

Estimate y_increment_stat(const Partition& coarse, const BackwardSolution& fine) {
    const auto index = coarse.embedding_in(fine.partition);
    const std::size_t P = fine.n_paths;
    std::vector<double> sq(P);
    Estimate worst;
    for (std::size_t i = 0; i < coarse.steps(); ++i) {
        for (std::size_t k = index[i] + 1; k < index[i + 1]; ++k) {
            for (std::size_t p = 0; p < P; ++p) {
                const double dy = fine.y(p, k) - fine.y(p, index[i]);
                sq[p] = dy * dy;
            }
            const Estimate e = mean_and_error(sq);
            if (e.value > worst.value) worst = e;
        }
    }
    return worst;
}

Estimate z_l2_regularity(const Partition& coarse, std::span<const double> zbar,
                         const BackwardSolution& fine) {
    const auto index = coarse.embedding_in(fine.partition);
    const std::size_t P = fine.n_paths;
    const std::size_t d = fine.dim_noise;
    const std::size_t nc = coarse.steps();
    if (zbar.size() != P * nc * d) throw GridMismatch("Zbar array does not match the coarse grid");
    std::vector<double> per_path(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            const double* zb = zbar.data() + (p * nc + i) * d;
            for (std::size_t k = index[i]; k < index[i + 1]; ++k) {
                const auto z = fine.z(p, k);
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += (z[j] - zb[j]) * (z[j] - zb[j]);
                acc += s * fine.partition.step_size(k);
            }
        }
        per_path[p] = acc;
    }
    return mean_and_error(per_path);
}

Estimate left_endpoint_regularity(const Partition& coarse, const BackwardSolution& fine) {
    const auto index = coarse.embedding_in(fine.partition);
    const std::size_t P = fine.n_paths;
    const std::size_t d = fine.dim_noise;
    const std::size_t nc = coarse.steps();
    std::vector<double> left(P * nc * d);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < nc; ++i) {
            const auto z = fine.z(p, index[i]);
            std::copy(z.begin(), z.end(), left.begin() + static_cast<std::ptrdiff_t>((p * nc + i) * d));
        }
    return z_l2_regularity(coarse, left, fine);
}

Estimate z_increment_proxy(const BackwardSolution& sol) {
    const std::size_t P = sol.n_paths;
    const std::size_t d = sol.dim_noise;
    std::vector<double> sq(P);
    Estimate worst;
    for (std::size_t i = 0; i + 1 < sol.steps(); ++i) {
        for (std::size_t p = 0; p < P; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dz = sol.z(p, i + 1)[j] - sol.z(p, i)[j];
                s += dz * dz;
            }
            sq[p] = s;
        }
        const Estimate e = mean_and_error(sq);
        if (e.value > worst.value) worst = e;
    }
    return worst;
}

BmoEstimate bmo_estimate(const BackwardSolution& sol, const PathEnsemble& ens,
                         const RegressionBasis& basis, const RegressionOptions& options) {
    if (!(sol.partition == ens.partition) || sol.n_paths != ens.n_paths)
        throw InvalidParameters("solution and ensemble do not match");
    const std::size_t P = sol.n_paths;
    const std::size_t N = sol.steps();
    const std::size_t d = sol.dim_noise;
    std::vector<double> tail(P, 0.0), fitted(P);
    BmoEstimate out;
    for (std::size_t step = N; step-- > 0;) {
        const double h = sol.partition.step_size(step);
        for (std::size_t p = 0; p < P; ++p) {
            const auto z = sol.z(p, step);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += z[j] * z[j];
            tail[p] += s * h;
        }
        const Projector proj(ens.states_at(step), ens.dim_state, basis, options, step);
        proj.project(tail, fitted);
        out.regression_max = std::max(out.regression_max, *std::max_element(fitted.begin(), fitted.end()));
        out.mean_max = std::max(out.mean_max, mean_and_error(tail).value);
    }
    return out;
}

TruncationStudy truncation_error_curve(const ModelSpec& model, std::span<const unsigned> levels,
                                       const TruncationStudyConfig& config) {
    if (levels.empty()) throw InvalidParameters("truncation study needs at least one level");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (levels[k] <= levels[k - 1])
            throw InvalidParameters("truncation levels must be strictly increasing");

    TruncationStudy study;
    study.reference_level = config.reference_level.value_or(2 * levels.back());
    const PathEnsemble ens =
        simulate_forward(model, config.partition, config.paths, config.seed, config.workers);
    SolverOptions solver = config.solver;
    solver.regression.workers = config.workers;

    const BackwardSolution ref =
        solve_backward_regression(truncate_driver(model, study.reference_level), ens, solver);
    study.reference_y0 = ref.y0();
    for (double z : ref.Z) study.reference_max_abs_z = std::max(study.reference_max_abs_z, std::abs(z));

    const std::size_t P = ens.n_paths;
    const std::size_t N = ens.steps();
    const std::size_t d = ens.dim_noise;
    std::vector<double> sup_y(P), sum_z(P);
    for (unsigned n : levels) {
        const BackwardSolution sol = solve_backward_regression(truncate_driver(model, n), ens, solver);
        for (std::size_t p = 0; p < P; ++p) {
            double sup = 0.0;
            for (std::size_t i = 0; i <= N; ++i) {
                const double dy = sol.y(p, i) - ref.y(p, i);
                sup = std::max(sup, dy * dy);
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dz = sol.z(p, i)[j] - ref.z(p, i)[j];
                    s += dz * dz;
                }
                acc += s * ens.partition.step_size(i);
            }
            sup_y[p] = sup;
            sum_z[p] = acc;
        }
        study.curve.push_back({n, mean_and_error(sup_y), mean_and_error(sum_z), sol.y0()});
    }
    return study;
}

FittedOrder truncation_decay(const TruncationStudy& study, double floor) {
    if (!(floor > 0.0)) throw InvalidPoints("truncation decay needs a positive noise floor");
    std::vector<std::pair<double, double>> points;
    for (const auto& pt : study.curve) {
        if (pt.level == 0) continue;
        points.emplace_back(static_cast<double>(pt.level), std::max(pt.err_y.value, floor));
    }
    return fit_convergence_order(points);
}

}  // namespace qgbsde
