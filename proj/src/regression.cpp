#include "qgbsde/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qgbsde/errors.hpp"
#include "qgbsde/parallel.hpp"

namespace qgbsde {

namespace {

double quantile(std::vector<double>& v, double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
    return v[idx];
}

/// Multi-indices over `dims` variables with total degree <= degree, graded order.
std::vector<std::vector<unsigned>> monomials(std::size_t dims, unsigned degree) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> current(dims, 0);
    for (unsigned total = 0; total <= degree; ++total) {
        // enumerate compositions of `total` into `dims` parts
        auto rec = [&](auto&& self, std::size_t pos, unsigned left) -> void {
            if (pos + 1 == dims || dims == 0) {
                if (dims > 0) current[pos] = left;
                if (dims > 0 || left == 0) out.push_back(current);
                return;
            }
            for (unsigned e = left + 1; e-- > 0;) {
                current[pos] = e;
                self(self, pos + 1, left - e);
            }
        };
        rec(rec, 0, total);
    }
    return out;
}

}  // namespace

RegressionBasis RegressionBasis::global_polynomial(unsigned degree) {
    RegressionBasis b;
    b.kind = Kind::GlobalPolynomial;
    b.degree = degree;
    return b;
}

RegressionBasis RegressionBasis::local_partition(unsigned cells, unsigned degree) {
    RegressionBasis b;
    b.kind = Kind::LocalPartition;
    b.cells = cells;
    b.degree = degree;
    return b;
}

void RegressionBasis::validate() const {
    if (kind == Kind::LocalPartition) {
        if (cells < 1) throw InvalidParameters("local partition needs at least one cell");
        if (degree > 1) throw InvalidParameters("local partition supports degree 0 or 1");
    }
    for (const auto& b : bounds)
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper))
            throw InvalidParameters("regression bounds must be finite and ordered");
    if (!(0.0 <= lower_quantile && lower_quantile < upper_quantile && upper_quantile <= 1.0))
        throw InvalidParameters("quantile bounds must satisfy 0 <= lower < upper <= 1");
}

std::string RegressionBasis::describe() const {
    std::ostringstream s;
    if (kind == Kind::GlobalPolynomial)
        s << "global_polynomial(degree=" << degree << ")";
    else
        s << "local_partition(cells=" << cells << ",degree=" << degree << ")";
    if (bounds.empty())
        s << "[quantiles " << lower_quantile << "," << upper_quantile << "]";
    else
        s << "[fixed bounds]";
    return s.str();
}

Projector::Projector(std::span<const double> samples, std::size_t dim,
                     const RegressionBasis& basis, const RegressionOptions& options,
                     std::size_t step)
    : n_(dim == 0 ? 0 : samples.size() / dim), step_(step), options_(options) {
    basis.validate();
    if (dim == 0 || n_ == 0 || samples.size() != n_ * dim)
        throw InvalidParameters("regressor sample array has inconsistent shape");
    if (!basis.bounds.empty() && basis.bounds.size() != dim)
        throw InvalidParameters("regression bounds given for the wrong number of dimensions");

    std::vector<Interval> box(dim);
    std::vector<std::size_t> active;
    std::vector<double> column(n_);
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t p = 0; p < n_; ++p) column[p] = samples[p * dim + k];
        const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
        const double lo_all = *lo_it;
        const double hi_all = *hi_it;
        const double scale = 1.0 + std::max(std::abs(lo_all), std::abs(hi_all));
        if (!(hi_all - lo_all > 1e-12 * scale)) continue;  // every sample coincides
        if (!basis.bounds.empty()) {
            box[k] = basis.bounds[k];
        } else {
            box[k].lower = quantile(column, basis.lower_quantile);
            box[k].upper = quantile(column, basis.upper_quantile);
            if (!(box[k].upper - box[k].lower > 1e-12 * scale)) box[k] = {lo_all, hi_all};
        }
        active.push_back(k);
    }

    if (basis.kind == RegressionBasis::Kind::LocalPartition)
        assemble_local(samples, box, active, basis.cells, basis.degree);
    else
        assemble_global(samples, box, active, basis.degree);
}

void Projector::assemble_local(std::span<const double> samples, const std::vector<Interval>& box,
                               const std::vector<std::size_t>& active, unsigned cells_per_dim,
                               unsigned degree) {
    const std::size_t dim = box.size();
    cells_ = 1;
    for (std::size_t q = 0; q < active.size(); ++q) cells_ *= cells_per_dim;
    k_ = (degree == 0 || active.empty()) ? 1 : 1 + active.size();
    cell_.assign(n_, 0);
    features_.assign(n_ * k_, 0.0);

    for_each_block(n_, options_.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            std::size_t index = 0;
            std::size_t stride = 1;
            double* f = features_.data() + p * k_;
            f[0] = 1.0;
            for (std::size_t q = 0; q < active.size(); ++q) {
                const Interval& b = box[active[q]];
                const double width = (b.upper - b.lower) / cells_per_dim;
                const double x = samples[p * dim + active[q]];
                const double raw = std::floor((x - b.lower) / width);
                const auto c = static_cast<std::size_t>(
                    std::clamp(raw, 0.0, static_cast<double>(cells_per_dim - 1)));
                index += c * stride;
                stride *= cells_per_dim;
                if (k_ > 1) {
                    const double center = b.lower + (static_cast<double>(c) + 0.5) * width;
                    f[1 + q] = (x - center) / (0.5 * width);
                }
            }
            cell_[p] = static_cast<std::uint32_t>(index);
        }
    });
    factor(true);
}

void Projector::assemble_global(std::span<const double> samples, const std::vector<Interval>& box,
                                const std::vector<std::size_t>& active, unsigned degree) {
    const std::size_t dim = box.size();
    const auto exps = monomials(active.size(), degree);
    cells_ = 1;
    k_ = exps.size();
    cell_.assign(n_, 0);
    features_.assign(n_ * k_, 0.0);

    for_each_block(n_, options_.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> u(active.size());
        for (std::size_t p = begin; p < end; ++p) {
            for (std::size_t q = 0; q < active.size(); ++q) {
                const Interval& b = box[active[q]];
                const double center = 0.5 * (b.lower + b.upper);
                const double half = 0.5 * (b.upper - b.lower);
                u[q] = (samples[p * dim + active[q]] - center) / half;
            }
            double* f = features_.data() + p * k_;
            for (std::size_t e = 0; e < k_; ++e) {
                double v = 1.0;
                for (std::size_t q = 0; q < active.size(); ++q)
                    for (unsigned r = 0; r < exps[e][q]; ++r) v *= u[q];
                f[e] = v;
            }
        }
    });
    factor(false);
}

void Projector::factor(bool local) {
    const std::size_t kk = k_ * k_;
    const std::size_t blocks = block_count(n_);
    std::vector<double> partial(blocks * cells_ * (kk + 1), 0.0);
    for_each_block(n_, options_.workers, [&](std::size_t blk, std::size_t begin, std::size_t end) {
        double* acc = partial.data() + blk * cells_ * (kk + 1);
        for (std::size_t p = begin; p < end; ++p) {
            double* a = acc + cell_[p] * (kk + 1);
            const double* f = features_.data() + p * k_;
            for (std::size_t r = 0; r < k_; ++r)
                for (std::size_t c = 0; c < k_; ++c) a[r * k_ + c] += f[r] * f[c];
            a[kk] += 1.0;
        }
    });
    std::vector<double> gram(cells_ * (kk + 1), 0.0);
    for (std::size_t blk = 0; blk < blocks; ++blk)
        for (std::size_t i = 0; i < gram.size(); ++i) gram[i] += partial[blk * gram.size() + i];

    mode_.assign(cells_, 2);
    counts_.assign(cells_, 0.0);
    solvers_.assign(cells_, {});
    fallback_cells_ = 0;
    for (std::size_t c = 0; c < cells_; ++c) {
        const double* g = gram.data() + c * (kk + 1);
        counts_[c] = g[kk];
        if (counts_[c] == 0.0) continue;
        if (local && k_ > 1 && counts_[c] < 2.0 * static_cast<double>(k_)) {
            mode_[c] = 1;
            ++fallback_cells_;
            continue;
        }
        Eigen::MatrixXd a(k_, k_);
        for (std::size_t r = 0; r < k_; ++r)
            for (std::size_t col = 0; col < k_; ++col) a(r, col) = g[r * k_ + col];
        // feature 0 is the constant; leaving it unpenalized keeps constants exact
        const double lambda = options_.ridge * a.trace();
        for (std::size_t r = 1; r < k_; ++r) a(r, r) += lambda;
        // Condition number after Jacobi scaling, so units of the features do not count.
        const Eigen::VectorXd scale = a.diagonal().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd scaled = scale.asDiagonal() * a * scale.asDiagonal();
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                       scaled, Eigen::EigenvaluesOnly)
                                       .eigenvalues();
        const double cond = ev(0) > 0.0 ? ev(ev.size() - 1) / ev(0)
                                        : std::numeric_limits<double>::infinity();
        if (!(cond <= options_.condition_cap)) {
            if (!local)
                throw DegenerateRegression(step_, "regression normal matrix has condition " +
                                                      std::to_string(cond));
            mode_[c] = 1;
            ++fallback_cells_;
            continue;
        }
        solvers_[c].compute(a);
        mode_[c] = 0;
    }
}

void Projector::project(std::span<const double> target, std::span<double> fitted) const {
    if (target.size() != n_ || fitted.size() != n_)
        throw InvalidParameters("regression target has the wrong length");
    const std::size_t blocks = block_count(n_);
    const std::size_t width = cells_ * k_;
    std::vector<double> partial(blocks * width, 0.0);
    for_each_block(n_, options_.workers, [&](std::size_t blk, std::size_t begin, std::size_t end) {
        double* acc = partial.data() + blk * width;
        for (std::size_t p = begin; p < end; ++p) {
            double* a = acc + cell_[p] * k_;
            const double* f = features_.data() + p * k_;
            for (std::size_t r = 0; r < k_; ++r) a[r] += f[r] * target[p];
        }
    });
    std::vector<double> rhs(width, 0.0);
    for (std::size_t blk = 0; blk < blocks; ++blk)
        for (std::size_t i = 0; i < width; ++i) rhs[i] += partial[blk * width + i];

    std::vector<double> coef(width, 0.0);
    for (std::size_t c = 0; c < cells_; ++c) {
        if (mode_[c] == 1) {
            coef[c * k_] = rhs[c * k_] / counts_[c];
        } else if (mode_[c] == 0) {
            const Eigen::Map<const Eigen::VectorXd> b(rhs.data() + c * k_,
                                                      static_cast<Eigen::Index>(k_));
            Eigen::Map<Eigen::VectorXd>(coef.data() + c * k_, static_cast<Eigen::Index>(k_)) =
                solvers_[c].solve(b);
        }
    }

    for_each_block(n_, options_.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* f = features_.data() + p * k_;
            const double* a = coef.data() + cell_[p] * k_;
            double v = 0.0;
            for (std::size_t r = 0; r < k_; ++r) v += f[r] * a[r];
            fitted[p] = v;
        }
    });
}

std::vector<double> Projector::project(std::span<const double> target) const {
    std::vector<double> fitted(n_);
    project(target, fitted);
    return fitted;
}

}  // namespace qgbsde
