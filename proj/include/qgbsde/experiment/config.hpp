#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/errors.hpp"
#include "qgbsde/experiment/catalog.hpp"
#include "qgbsde/model.hpp"

namespace qgbsde::experiment {

/// Parse or validation failure. The message carries "origin:line" when the
/// offending line is known and always the "[section] key" field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& origin, std::optional<std::size_t> line, const std::string& field,
                const std::string& what);
    const std::string& field() const noexcept { return field_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    std::string field_;
    std::optional<std::size_t> line_;
};

struct ExperimentConfig {
    // [model]
    catalog::ModelChoice model = catalog::preset("canonical_quadratic");

    // [grid]
    std::vector<std::size_t> steps{8, 16, 32, 64};
    unsigned refinement = 4;

    // [mc]
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    // [solver]
    std::string basis = "local";  ///< local | global
    unsigned degree = 1;
    unsigned cells = 50;
    unsigned picard_iters = 3;
    bool clamp = false;

    // [truncation]
    std::vector<unsigned> levels{1, 2, 3, 4, 6, 8};
    unsigned reference_level = 16;
    bool use_oracle = false;
    /// Level applied by solve, converge and diagnose; 0 means no truncation.
    unsigned solve_level = 6;

    // [outputs]
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "summary"};
    bool cache_ensemble = false;

    bool wants(const std::string& format) const;
};

/// Parses INI text. Missing keys take the defaults above except solve_level,
/// which defaults to the largest level for a quadratic driver and to 0
/// otherwise. Unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& file);

/// Throws ConfigError; parse_config already calls it.
void validate_config(const ExperimentConfig& config, const std::string& origin = "<config>");

/// INI echo with every field explicit; parse_config(resolved_text(c)) == c.
std::string resolved_text(const ExperimentConfig& config);

ModelSpec base_model(const ExperimentConfig& config);
/// base_model truncated at solve_level when it is positive.
ModelSpec solve_model(const ExperimentConfig& config);
SolverOptions solver_options(const ExperimentConfig& config, const ModelSpec& model);

}  // namespace qgbsde::experiment
