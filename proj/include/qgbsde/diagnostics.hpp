#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/model.hpp"
#include "qgbsde/partition.hpp"
#include "qgbsde/regression.hpp"
#include "qgbsde/sde_engine.hpp"

namespace qgbsde {

/// Monte Carlo mean with its plain standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Least-squares line log(error) = intercept + slope * log(scale).
struct FittedOrder {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;

    /// Acceptance-grade fits need at least three points and R^2 >= min_r2;
    /// anything weaker is reported as inconclusive.
    bool conclusive(double min_r2 = 0.9) const { return points >= 3 && r_squared >= min_r2; }
};

/// Throws InvalidPoints for fewer than three points or nonpositive values.
FittedOrder fit_convergence_order(std::span<const std::pair<double, double>> points);

/// max over coarse windows of max over fine nodes t in [t_i, t_{i+1}) of
/// mean_p |Y_t - Y_{t_i}|^2, computed on the fine solution. The standard error
/// is the one of the maximizing mean. Throws GridMismatch.
Estimate y_increment_stat(const Partition& coarse, const BackwardSolution& fine);

/// sum_i E[ sum_{fine k in window i} |Z_k - Zbar_i|^2 dt_k ] with Z taken from
/// the fine solution and Zbar a P x N_coarse x d array on the coarse grid.
Estimate z_l2_regularity(const Partition& coarse, std::span<const double> zbar,
                         const BackwardSolution& fine);

/// Same sum with the left-endpoint competitor Z_{t_i} (fine Z at the coarse node).
Estimate left_endpoint_regularity(const Partition& coarse, const BackwardSolution& fine);

/// max_i E|Z_{i+1} - Z_i|^2, a windowed stand-in for the sup-norm Z modulus.
Estimate z_increment_proxy(const BackwardSolution& solution);

struct BmoEstimate {
    double regression_max = 0.0;  ///< max_i max_p E[sum_{j>=i} |Z_j|^2 h_j | X_i] (regression fit)
    double mean_max = 0.0;        ///< max_i of the plain sample mean of the same tail sums
};

/// Lower-bound estimator of the BMO norm of Z*W using grid times as stopping times.
BmoEstimate bmo_estimate(const BackwardSolution& solution, const PathEnsemble& ensemble,
                         const RegressionBasis& basis, const RegressionOptions& options = {});

struct TruncationPoint {
    unsigned level = 0;
    Estimate err_y;  ///< E sup_i |Y^n_i - Y^ref_i|^2
    Estimate err_z;  ///< E sum_i |Z^n_i - Z^ref_i|^2 h_i
    double y0 = 0.0;
};

struct TruncationStudy {
    std::vector<TruncationPoint> curve;
    unsigned reference_level = 0;
    double reference_y0 = 0.0;
    double reference_max_abs_z = 0.0;  ///< realized max |Z| over paths and steps
};

struct TruncationStudyConfig {
    Partition partition;
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    SolverOptions solver;
    /// Level of the reference solve; defaults to twice the largest level.
    std::optional<unsigned> reference_level;
    unsigned workers = 1;
};

/// Solves the n-truncated model for every level (strictly increasing) and the
/// reference level on one shared ensemble, so differences isolate truncation.
TruncationStudy truncation_error_curve(const ModelSpec& model, std::span<const unsigned> levels,
                                       const TruncationStudyConfig& config);

/// Fitted log-log decay of err_Y against n over the points with err_Y above
/// `floor`; errors at or below the floor enter as `floor`, which can only make
/// the fitted slope less negative.
FittedOrder truncation_decay(const TruncationStudy& study, double floor);

/// Aggregate of the quantities bounded by the path-regularity, truncation and
/// BMO statements.
struct DiagnosticsReport {
    double y_increment_sq = 0.0;
    double z_regularity_sum = 0.0;
    double bmo_estimate = 0.0;
    double bmo_bound_value = 0.0;
    bool bmo_within_bound = false;
    std::vector<TruncationPoint> truncation_curve;
    std::map<std::string, FittedOrder> fitted_orders;
    /// q-bar implied by the fitted truncation decay for beta = 1: the decay
    /// exponent is beta / (2 q-bar).
    std::optional<double> effective_qbar;
    std::map<std::string, std::string> provenance;
};

}  // namespace qgbsde
