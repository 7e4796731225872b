#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qgbsde {

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Function space used to approximate conditional expectations E[. | X_i].
struct RegressionBasis {
    enum class Kind {
        GlobalPolynomial,  ///< monomials of total degree <= degree in rescaled coordinates
        LocalPartition,    ///< uniform hypercube cells, polynomial of degree <= 1 per cell
    };

    Kind kind = Kind::LocalPartition;
    unsigned degree = 1;
    unsigned cells = 50;  ///< per state dimension; LocalPartition only
    /// Fixed domain per state dimension. Empty means the empirical
    /// [lower_quantile, upper_quantile] range of the regressors at each node.
    std::vector<Interval> bounds;
    double lower_quantile = 0.001;
    double upper_quantile = 0.999;

    static RegressionBasis global_polynomial(unsigned degree);
    static RegressionBasis local_partition(unsigned cells, unsigned degree = 1);

    /// Throws InvalidParameters on degree/cell/bound violations.
    void validate() const;
    std::string describe() const;
};

struct RegressionOptions {
    double ridge = 1e-10;           ///< ridge * trace(A) added to the non-constant diagonal entries
    double condition_cap = 1e12;
    unsigned workers = 1;
};

/// Least-squares projection onto a basis evaluated at fixed regressor samples.
///
/// The normal matrices are assembled and factored once at construction, so
/// projecting several targets on the same node costs one pass per target.
/// Sums run over fixed path blocks in block order: results are independent
/// of the worker count.
///
/// Dimensions along which every regressor coincides (e.g. the initial node)
/// are dropped from the basis. In a LocalPartition, a cell holding too few
/// samples for a full fit, or whose normal matrix exceeds the condition cap,
/// falls back to its sample mean; a GlobalPolynomial fit that exceeds the cap
/// throws DegenerateRegression.
class Projector {
public:
    /// `samples` is P x dim row-major. `step` tags errors.
    Projector(std::span<const double> samples, std::size_t dim, const RegressionBasis& basis,
              const RegressionOptions& options, std::size_t step = 0);

    std::size_t sample_count() const noexcept { return n_; }
    std::size_t parameter_count() const noexcept { return cells_ * k_; }
    std::size_t fallback_cells() const noexcept { return fallback_cells_; }

    /// Fitted values at the regressor samples.
    void project(std::span<const double> target, std::span<double> fitted) const;
    std::vector<double> project(std::span<const double> target) const;

private:
    void assemble_local(std::span<const double> samples, const std::vector<Interval>& box,
                        const std::vector<std::size_t>& active, unsigned cells_per_dim,
                        unsigned degree);
    void assemble_global(std::span<const double> samples, const std::vector<Interval>& box,
                         const std::vector<std::size_t>& active, unsigned degree);
    void factor(bool local);

    std::size_t n_ = 0;
    std::size_t k_ = 1;
    std::size_t cells_ = 1;
    std::size_t step_ = 0;
    std::size_t fallback_cells_ = 0;
    RegressionOptions options_;

    std::vector<std::uint32_t> cell_;
    std::vector<double> features_;  ///< n_ x k_
    std::vector<std::uint8_t> mode_;  ///< per cell: 0 full fit, 1 mean only, 2 empty
    std::vector<double> counts_;
    std::vector<Eigen::LDLT<Eigen::MatrixXd>> solvers_;
};

}  // namespace qgbsde
