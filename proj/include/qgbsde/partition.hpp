#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qgbsde {

/// Time grid 0 = t_0 < t_1 < ... < t_N = T.
class Partition {
public:
    /// Throws InvalidPartition unless the times start at 0 and strictly increase (N >= 1).
    explicit Partition(std::vector<double> times);

    static Partition uniform(double horizon, std::size_t steps);

    std::size_t steps() const noexcept { return times_.size() - 1; }
    double horizon() const noexcept { return times_.back(); }
    double time(std::size_t node) const { return times_[node]; }
    double step_size(std::size_t step) const { return times_[step + 1] - times_[step]; }
    /// Largest gap between consecutive nodes.
    double mesh() const noexcept { return mesh_; }
    std::span<const double> times() const noexcept { return times_; }

    /// Splits every step into `factor` equal sub-steps.
    Partition refined(std::size_t factor) const;

    /// Index of each of this grid's nodes inside `fine`; throws GridMismatch when
    /// `fine` does not contain every node.
    std::vector<std::size_t> embedding_in(const Partition& fine) const;

    bool operator==(const Partition& other) const { return times_ == other.times_; }

private:
    std::vector<double> times_;
    double mesh_ = 0.0;
};

}  // namespace qgbsde
