#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qgbsde/model.hpp"
#include "qgbsde/partition.hpp"

namespace qgbsde {

/// Monte Carlo paths of (dW, X, grad X, (grad X)^{-1}) on a time grid.
///
/// Arrays are row-major [path][node][component]: increments are P x N x d,
/// states P x (N+1) x m and the optional flows P x (N+1) x m x m.
struct PathEnsemble {
    PathEnsemble(Partition grid, std::size_t paths, std::size_t m, std::size_t d,
                 std::uint64_t rng_seed);

    Partition partition;
    std::size_t n_paths;
    std::size_t dim_state;
    std::size_t dim_noise;
    std::uint64_t seed;

    std::vector<double> increments;
    std::vector<double> states;
    std::vector<double> flow;          ///< empty until simulate_variational
    std::vector<double> flow_inverse;  ///< empty until simulate_variational

    std::size_t steps() const noexcept { return partition.steps(); }
    bool has_flows() const noexcept { return !flow.empty() && !flow_inverse.empty(); }

    std::span<const double> increment(std::size_t path, std::size_t step) const {
        return {increments.data() + (path * steps() + step) * dim_noise, dim_noise};
    }
    std::span<const double> state(std::size_t path, std::size_t node) const {
        return {states.data() + (path * (steps() + 1) + node) * dim_state, dim_state};
    }
    std::span<const double> flow_at(std::size_t path, std::size_t node) const {
        return {flow.data() + (path * (steps() + 1) + node) * dim_state * dim_state,
                dim_state * dim_state};
    }
    std::span<const double> flow_inverse_at(std::size_t path, std::size_t node) const {
        return {flow_inverse.data() + (path * (steps() + 1) + node) * dim_state * dim_state,
                dim_state * dim_state};
    }
    /// Copies of the node-`node` states of every path, P x m row-major.
    std::vector<double> states_at(std::size_t node) const;
};

/// Left-point Euler-Maruyama with Brownian increments drawn from the
/// counter-based generator keyed by (seed, path, step). Throws
/// NumericalBlowup on non-finite coefficient values.
PathEnsemble simulate_forward(const ModelSpec& model, const Partition& partition,
                              std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

/// Euler-Maruyama on caller-supplied increments (P x N x d).
PathEnsemble simulate_with_increments(const ModelSpec& model, const Partition& partition,
                                      std::vector<double> increments, std::size_t n_paths,
                                      std::uint64_t seed, unsigned workers = 1);

/// Re-simulates on `coarse` using the summed increments of `fine`, so both
/// ensembles share Brownian paths. `coarse` must embed into fine.partition.
PathEnsemble coarsen(const ModelSpec& model, const PathEnsemble& fine, const Partition& coarse,
                     unsigned workers = 1);

enum class FlowInverseMethod {
    LinearSolve,  ///< solve grad X * A = I at every node
    InverseSde,   ///< Euler on the SDE satisfied by the inverse flow
};

struct VariationalOptions {
    FlowInverseMethod inverse = FlowInverseMethod::LinearSolve;
    double condition_cap = 1e12;
    unsigned workers = 1;
};

/// Adds the first-variation flow grad X and its inverse, integrated on the
/// ensemble's own increments. Throws AssumptionLevelTooLow without Jacobians
/// and SingularFlow when cond(grad X) exceeds the cap.
PathEnsemble simulate_variational(const ModelSpec& model, PathEnsemble ensemble,
                                  const VariationalOptions& options = {});

/// max over paths and nodes of max_{kl} |(grad X * inverse - I)_{kl}|.
double flow_identity_error(const PathEnsemble& ensemble);

}  // namespace qgbsde
