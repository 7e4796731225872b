#include "qgbsde/partition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgbsde/errors.hpp"

namespace qgbsde {

Partition::Partition(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw InvalidPartition("partition needs at least one step");
    if (times_.front() != 0.0) throw InvalidPartition("partition must start at t = 0");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
        const double gap = times_[i + 1] - times_[i];
        if (!std::isfinite(gap) || !(gap > 0.0))
            throw InvalidPartition("partition times must strictly increase (node " +
                                   std::to_string(i + 1) + ")");
        mesh_ = std::max(mesh_, gap);
    }
}

Partition Partition::uniform(double horizon, std::size_t steps) {
    if (steps == 0) throw InvalidPartition("partition needs at least one step");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidPartition("horizon must be positive and finite");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    t.back() = horizon;
    return Partition(std::move(t));
}

Partition Partition::refined(std::size_t factor) const {
    if (factor == 0) throw InvalidPartition("refinement factor must be positive");
    std::vector<double> t;
    t.reserve(steps() * factor + 1);
    for (std::size_t i = 0; i < steps(); ++i) {
        const double a = times_[i];
        const double h = times_[i + 1] - a;
        for (std::size_t k = 0; k < factor; ++k)
            t.push_back(a + h * static_cast<double>(k) / static_cast<double>(factor));
    }
    t.push_back(times_.back());
    return Partition(std::move(t));
}

std::vector<std::size_t> Partition::embedding_in(const Partition& fine) const {
    std::vector<std::size_t> index(times_.size());
    const auto ft = fine.times();
    const double tol = 1e-12 * std::max(1.0, horizon());
    std::size_t k = 0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        while (k < ft.size() && ft[k] < times_[i] - tol) ++k;
        if (k == ft.size() || std::abs(ft[k] - times_[i]) > tol)
            throw GridMismatch("coarse node t = " + std::to_string(times_[i]) +
                               " is not a node of the fine grid");
        index[i] = k;
    }
    if (index.back() != ft.size() - 1)
        throw GridMismatch("grids have different horizons");
    return index;
}

}  // namespace qgbsde
