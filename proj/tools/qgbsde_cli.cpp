#include <CLI11.hpp>

#include "qgbsde/experiment/runner.hpp"

int main(int argc, char** argv) {
    using namespace qgbsde::experiment;
    CLI::App app{"qgbsde: truncation-based solver and experiment runner for quadratic FBSDEs"};
    CliOptions opts;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string out;
    app.add_option("--config", opts.config_path, "INI experiment config")->required();
    app.add_option("--command", opts.command, "simulate | solve | converge | truncate_sweep | diagnose | all")
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "override [mc] seed");
    auto* workers_opt = app.add_option("--workers", workers, "override [mc] workers");
    auto* out_opt = app.add_option("--out", out, "override [outputs] directory");
    app.add_flag("--strict", opts.strict, "exit 3 when an acceptance check fails");
    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) opts.seed = seed;
    if (*workers_opt) opts.workers = workers;
    if (*out_opt) opts.out = out;
    return run_cli(opts);
}
