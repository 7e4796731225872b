#include "qgbsde/experiment/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qgbsde/bsde_solver.hpp"
#include "qgbsde/diagnostics.hpp"
#include "qgbsde/ensemble_io.hpp"
#include "qgbsde/oracle.hpp"
#include "qgbsde/sde_engine.hpp"
#include "qgbsde/truncation.hpp"
#include "qgbsde/variational.hpp"

namespace qgbsde::experiment {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string fit_line(const std::string& name, const FittedOrder& f) {
    return name + ": slope " + fixed(f.slope) + ", intercept " + fixed(f.intercept) + ", R2 " +
           fixed(f.r_squared) + ", points " + std::to_string(f.points) +
           (f.conclusive() ? "" : " (inconclusive)");
}

// Only the coefficients that shape the forward paths enter the cache key.
std::string forward_key(const catalog::ModelChoice& m, const Partition& grid, std::size_t paths,
                        std::uint64_t seed) {
    std::ostringstream k;
    k << "QGB1|" << m.dim_state << "|" << m.dim_noise << "|";
    for (double x : m.initial_state) k << num(x) << ",";
    k << "|" << m.drift.kind;
    for (double p : m.drift.params) k << "," << num(p);
    k << "|" << m.diffusion.kind;
    for (double p : m.diffusion.params) k << "," << num(p);
    k << "|";
    for (double t : grid.times()) k << num(t) << ",";
    k << "|" << paths << "|" << seed;
    return k.str();
}

class Session {
public:
    Session(const ExperimentConfig& config, const std::optional<fs::path>& artifact_dir)
        : cfg_(config),
          artifact_dir_(artifact_dir),
          base_(base_model(config)),
          model_(solve_model(config)),
          solver_(solver_options(config, model_)) {}

    RunResult result;

    void simulate() {
        for (std::size_t n : cfg_.steps) {
            const std::string id = "simulate";
            guard(id, n, [&] {
                const Partition grid = Partition::uniform(base_.horizon, n);
                PathEnsemble ens = ensemble(grid);
                const std::size_t m = ens.dim_state, d = ens.dim_noise, P = ens.n_paths;
                for (std::size_t k = 0; k < m; ++k) {
                    double s = 0.0, s2 = 0.0;
                    for (std::size_t p = 0; p < P; ++p) {
                        const double x = ens.state(p, n)[k];
                        s += x;
                        s2 += x * x;
                    }
                    const double mean = s / P;
                    const double var = std::max(0.0, s2 / P - mean * mean);
                    row(id, n, 0, "x_terminal_mean[" + std::to_string(k) + "]", mean,
                        std::sqrt(var / P));
                    row(id, n, 0, "x_terminal_var[" + std::to_string(k) + "]", var, std::nullopt);
                }
                // pooled E[dW^2]/h over paths, steps and components
                double ratio = 0.0;
                for (std::size_t p = 0; p < P; ++p)
                    for (std::size_t i = 0; i < n; ++i) {
                        const auto dw = ens.increment(p, i);
                        for (std::size_t j = 0; j < d; ++j)
                            ratio += dw[j] * dw[j] / grid.step_size(i);
                    }
                const double count = static_cast<double>(P * n * d);
                ratio /= count;
                const double se = std::sqrt(2.0 / count);
                row(id, n, 0, "increment_variance_ratio", ratio, se);
                check("simulate N=" + std::to_string(n) + " increment variance",
                      std::abs(ratio - 1.0) <= 5.0 * se, "E[dW^2]/h = " + fixed(ratio, 6));
                if (base_.has_flow_coefficients()) {
                    VariationalOptions vo;
                    vo.workers = cfg_.workers;
                    ens = simulate_variational(base_, std::move(ens), vo);
                    const double err = flow_identity_error(ens);
                    row(id, n, 0, "flow_identity_error", err, std::nullopt);
                    check("simulate N=" + std::to_string(n) + " flow identity", err <= 1e-8,
                          "max |flow * inverse - I| = " + fixed(err));
                }
                if (cfg_.cache_ensemble && artifact_dir_ && n == cfg_.steps.back()) {
                    fs::create_directories(*artifact_dir_);
                    write_ensemble(*artifact_dir_ / "ensemble.bin", ens);
                }
            });
        }
    }

    void solve() {
        std::optional<ColeHopfValue> oracle = oracle_value();
        for (std::size_t n : cfg_.steps) {
            const std::string id = "solve";
            guard(id, n, [&] {
                const Partition grid = Partition::uniform(base_.horizon, n);
                const PathEnsemble ens = ensemble(grid);
                const BackwardSolution sol = solve_backward_regression(model_, ens, solver_);
                const double y0 = sol.y0();
                row(id, n, cfg_.solve_level, "y0", y0, std::nullopt);
                const auto z0 = sol.z0();
                for (std::size_t j = 0; j < z0.size(); ++j)
                    row(id, n, cfg_.solve_level, "z0[" + std::to_string(j) + "]", z0[j], std::nullopt);
                double picard = 0.0, max_z = 0.0;
                std::size_t fallback = 0;
                for (const auto& s : sol.meta.steps) {
                    picard = std::max(picard, s.picard_residual);
                    fallback += s.fallback_cells;
                }
                for (double z : sol.Z) max_z = std::max(max_z, std::abs(z));
                row(id, n, cfg_.solve_level, "max_picard_residual", picard, std::nullopt);
                row(id, n, cfg_.solve_level, "fallback_cells", static_cast<double>(fallback), std::nullopt);
                row(id, n, cfg_.solve_level, "max_abs_z", max_z, std::nullopt);
                if (oracle) {
                    row(id, n, cfg_.solve_level, "y0_oracle", oracle->y0, oracle->y0_error);
                    row(id, n, cfg_.solve_level, "y0_oracle_error", y0 - oracle->y0, std::nullopt);
                    if (n == cfg_.steps.back())
                        check("solve oracle agreement |Y0 - Y0_CH| <= 1e-2",
                              std::abs(y0 - oracle->y0) <= 1e-2,
                              "Y0 = " + fixed(y0, 8) + ", Y0_CH = " + fixed(oracle->y0, 12));
                }
            });
        }
    }

    void converge() {
        const std::string id = "converge";
        std::vector<std::pair<double, double>> z_points, y_points;
        for (std::size_t n : cfg_.steps) {
            guard(id, n, [&] {
                const Partition coarse = Partition::uniform(base_.horizon, n);
                const Partition fine = coarse.refined(cfg_.refinement);
                const PathEnsemble fine_ens = ensemble(fine);
                const BackwardSolution fine_sol = solve_backward_regression(model_, fine_ens, solver_);
                const auto zbar =
                    project_window_average(fine_sol, fine_ens, coarse, solver_.basis, solver_.regression);
                const Estimate z_reg = z_l2_regularity(coarse, zbar, fine_sol);
                const Estimate z_left = left_endpoint_regularity(coarse, fine_sol);
                const Estimate y_inc = y_increment_stat(coarse, fine_sol);
                const double delta = coarse.mesh();
                row(id, n, cfg_.solve_level, "z_regularity", z_reg.value, z_reg.std_error);
                row(id, n, cfg_.solve_level, "z_regularity_left_endpoint", z_left.value, z_left.std_error);
                row(id, n, cfg_.solve_level, "y_increment", y_inc.value, y_inc.std_error);
                row(id, n, cfg_.solve_level, "y_increment_ratio", y_inc.value / delta, y_inc.std_error / delta);
                check("converge N=" + std::to_string(n) + " projection optimality",
                      z_reg.value <= 1.05 * z_left.value,
                      "Zbar " + fixed(z_reg.value) + " vs left endpoint " + fixed(z_left.value));
                check("converge N=" + std::to_string(n) + " y_increment/Delta in [0.5, 2]",
                      y_inc.value / delta >= 0.5 && y_inc.value / delta <= 2.0,
                      "ratio " + fixed(y_inc.value / delta));
                z_points.emplace_back(delta, z_reg.value);
                y_points.emplace_back(delta, y_inc.value);
            });
        }
        if (z_points.size() < 3) {
            check_status("converge z_regularity slope >= 0.8", CheckStatus::Inconclusive,
                         "fewer than three grid levels");
            return;
        }
        fitted(id, "z_regularity", z_points);
        fitted(id, "y_increment", y_points);
        const FittedOrder f = fit_convergence_order(z_points);
        check_status("converge z_regularity slope >= 0.8",
                     f.r_squared < 0.9 ? CheckStatus::Inconclusive
                                       : (f.slope >= 0.8 ? CheckStatus::Pass : CheckStatus::Fail),
                     "slope " + fixed(f.slope) + ", R2 " + fixed(f.r_squared));
    }

    void truncate_sweep() {
        const std::string id = "truncate_sweep";
        const std::size_t n = cfg_.steps.back();
        guard(id, n, [&] {
            TruncationStudyConfig tc{Partition::uniform(base_.horizon, n), cfg_.paths, cfg_.seed,
                                     solver_, cfg_.reference_level, cfg_.workers};
            const TruncationStudy study = truncation_error_curve(base_, cfg_.levels, tc);
            const double floor = noise_floor(study);
            std::optional<ColeHopfValue> oracle = oracle_value();
            row(id, n, study.reference_level, "reference_y0", study.reference_y0, std::nullopt);
            row(id, n, study.reference_level, "reference_max_abs_z", study.reference_max_abs_z, std::nullopt);
            row(id, n, study.reference_level, "noise_floor", floor, std::nullopt);
            for (const auto& pt : study.curve) {
                row(id, n, pt.level, "err_y", pt.err_y.value, pt.err_y.std_error);
                row(id, n, pt.level, "err_z", pt.err_z.value, pt.err_z.std_error);
                row(id, n, pt.level, "y0", pt.y0, std::nullopt);
                if (oracle) row(id, n, pt.level, "y0_oracle_gap", pt.y0 - oracle->y0, std::nullopt);
            }

            bool monotone = true;
            std::string where;
            for (std::size_t k = 1; k < study.curve.size(); ++k) {
                const auto& prev = study.curve[k - 1];
                const auto& cur = study.curve[k];
                if (cur.err_y.value > 1.1 * prev.err_y.value + floor) {
                    monotone = false;
                    where = "n=" + std::to_string(cur.level);
                }
            }
            check("truncate_sweep err_Y non-increasing (10% margin)", monotone,
                  monotone ? "all levels" : "increase at " + where);

            bool at_floor = true;
            std::size_t active = 0;
            for (const auto& pt : study.curve) {
                if (pt.level > study.reference_max_abs_z && pt.err_y.value > floor) at_floor = false;
                if (pt.err_y.value > floor) ++active;
            }
            check("truncate_sweep err_Y at noise floor beyond max|Z|", at_floor,
                  "max|Z| = " + fixed(study.reference_max_abs_z) + ", floor " + fixed(floor));

            const FittedOrder decay = truncation_decay(study, floor);
            row(id, n, 0, "truncation_decay_slope", decay.slope, std::nullopt);
            row(id, n, 0, "truncation_decay_r2", decay.r_squared, std::nullopt);
            result.fitted.push_back(fit_line("truncation_decay", decay));
            if (decay.slope < 0.0)
                row(id, n, 0, "effective_qbar_beta1", -1.0 / (2.0 * decay.slope), std::nullopt);
            if (active < 3) {
                check_status("truncate_sweep decay exponent <= -1", CheckStatus::Inconclusive,
                             std::to_string(active) + " level(s) above the noise floor");
            } else {
                check_status("truncate_sweep decay exponent <= -1",
                             decay.r_squared < 0.9 ? CheckStatus::Inconclusive
                                                   : (decay.slope <= -1.0 ? CheckStatus::Pass
                                                                          : CheckStatus::Fail),
                             "slope " + fixed(decay.slope) + ", R2 " + fixed(decay.r_squared));
            }
        });
    }

    void diagnose() {
        const std::string id = "diagnose";
        const std::size_t n = cfg_.steps.back();
        guard(id, n, [&] {
            const Partition grid = Partition::uniform(base_.horizon, n);
            PathEnsemble ens = ensemble(grid);
            const BackwardSolution sol = solve_backward_regression(model_, ens, solver_);
            const BmoEstimate bmo = bmo_estimate(sol, ens, solver_.basis, solver_.regression);
            row(id, n, cfg_.solve_level, "bmo_regression_max", bmo.regression_max, std::nullopt);
            row(id, n, cfg_.solve_level, "bmo_mean_max", bmo.mean_max, std::nullopt);
            const Estimate proxy = z_increment_proxy(sol);
            row(id, n, cfg_.solve_level, "z_increment_proxy", proxy.value, proxy.std_error);
            if (base_.growth_M > 0.0 && base_.terminal_sup) {
                const double bound = bmo_bound(base_.growth_M, base_.horizon, *base_.terminal_sup);
                row(id, n, cfg_.solve_level, "bmo_bound", bound, std::nullopt);
                check("diagnose BMO estimate <= closed-form bound", bmo.regression_max <= bound,
                      fixed(bmo.regression_max) + " <= " + fixed(bound));
            }
            if (model_.has_flow_coefficients() && model_.has_driver_gradients()) {
                VariationalOptions vo;
                vo.workers = cfg_.workers;
                ens = simulate_variational(model_, std::move(ens), vo);
                const VariationalSolution var = solve_variational_bsde(model_, ens, sol, solver_);
                const auto& rep = var.representation_residual;
                row(id, n, cfg_.solve_level, "representation_rms_time_avg", rep.time_averaged_rms,
                    std::nullopt);
                double mx = 0.0;
                for (double v : rep.max) mx = std::max(mx, v);
                row(id, n, cfg_.solve_level, "representation_max", mx, std::nullopt);
            }
        });
    }

private:
    const ExperimentConfig& cfg_;
    std::optional<fs::path> artifact_dir_;
    ModelSpec base_;
    ModelSpec model_;
    SolverOptions solver_;

    template <class Fn>
    void guard(const std::string& id, std::size_t n, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw Error("experiment " + id + " (N=" + std::to_string(n) + "): " + e.what());
        }
    }

    void row(const std::string& id, std::optional<std::size_t> n, unsigned n_trunc,
             const std::string& stat, double value, std::optional<double> se) {
        result.rows.push_back({id, cfg_.model.preset, n, cfg_.paths, cfg_.seed, n_trunc, stat, value, se});
    }

    void check(const std::string& name, bool pass, const std::string& detail) {
        check_status(name, pass ? CheckStatus::Pass : CheckStatus::Fail, detail);
    }
    void check_status(const std::string& name, CheckStatus status, const std::string& detail) {
        result.checks.push_back({name, status, detail});
    }

    void fitted(const std::string& id, const std::string& name,
                const std::vector<std::pair<double, double>>& points) {
        const FittedOrder f = fit_convergence_order(points);
        row(id, std::nullopt, cfg_.solve_level, name + "_slope", f.slope, std::nullopt);
        row(id, std::nullopt, cfg_.solve_level, name + "_intercept", f.intercept, std::nullopt);
        row(id, std::nullopt, cfg_.solve_level, name + "_r2", f.r_squared, std::nullopt);
        result.fitted.push_back(fit_line(name, f));
    }

    double noise_floor(const TruncationStudy& study) const {
        const double scale = std::max(study.reference_y0 * study.reference_y0, 1e-12);
        return 1e-6 * scale;
    }

    std::optional<ColeHopfValue> oracle_value() const {
        if (!cfg_.use_oracle) return std::nullopt;
        QuadraticReference ref;
        ref.gamma = cfg_.model.driver.params.at(0);
        ref.x = cfg_.model.initial_state.at(0);
        ref.horizon = cfg_.model.horizon;
        ref.sigma = cfg_.model.diffusion.params.at(0);
        const ModelSpec m = base_;
        ref.terminal = [m](double x) { return m.terminal(std::span<const double>(&x, 1)); };
        ref.terminal_derivative = [m](double x) {
            double g = 0.0;
            m.terminal_gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
            return g;
        };
        return cole_hopf_reference(ref);
    }

    PathEnsemble ensemble(const Partition& grid) const {
        const char* dir = std::getenv("QGBSDE_CACHE_DIR");
        if (!dir || !*dir) return simulate_forward(base_, grid, cfg_.paths, cfg_.seed, cfg_.workers);
        char name[32];
        std::snprintf(name, sizeof name, "%016llx.bin",
                      static_cast<unsigned long long>(
                          fnv1a(forward_key(cfg_.model, grid, cfg_.paths, cfg_.seed))));
        const fs::path file = fs::path(dir) / name;
        if (fs::exists(file)) {
            try {
                return read_ensemble(file, grid);
            } catch (const Error&) {
                // stale or truncated entry: fall through and rewrite it
            }
        }
        PathEnsemble ens = simulate_forward(base_, grid, cfg_.paths, cfg_.seed, cfg_.workers);
        fs::create_directories(dir);
        const fs::path tmp = file.string() + ".tmp";
        write_ensemble(tmp, ens);
        fs::rename(tmp, file);
        return ens;
    }
};

std::string timestamp_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    out << text;
}

}  // namespace

Command parse_command(const std::string& name) {
    if (name == "simulate") return Command::Simulate;
    if (name == "solve") return Command::Solve;
    if (name == "converge") return Command::Converge;
    if (name == "truncate_sweep") return Command::TruncateSweep;
    if (name == "diagnose") return Command::Diagnose;
    if (name == "all") return Command::All;
    throw ConfigError("--command", std::nullopt, "command", "unknown command '" + name + "'");
}

const char* to_string(Command command) {
    switch (command) {
        case Command::Simulate: return "simulate";
        case Command::Solve: return "solve";
        case Command::Converge: return "converge";
        case Command::TruncateSweep: return "truncate_sweep";
        case Command::Diagnose: return "diagnose";
        case Command::All: return "all";
    }
    return "?";
}

const char* to_string(CheckStatus status) {
    switch (status) {
        case CheckStatus::Pass: return "PASS";
        case CheckStatus::Fail: return "FAIL";
        case CheckStatus::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

bool RunResult::failed() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

RunResult run_experiment(const ExperimentConfig& config, Command command,
                         const std::optional<fs::path>& artifact_dir) {
    validate_config(config);
    Session s(config, artifact_dir);
    const bool all = command == Command::All;
    if (all || command == Command::Simulate) s.simulate();
    if (all || command == Command::Solve) s.solve();
    if (all || command == Command::Converge) s.converge();
    if (all || command == Command::TruncateSweep) s.truncate_sweep();
    if (all || command == Command::Diagnose) s.diagnose();
    return std::move(s.result);
}

std::string report_csv(const RunResult& result, bool timestamp) {
    std::ostringstream out;
    if (timestamp) out << "# generated " << timestamp_now() << "\n";
    out << "experiment_id,model,N,P,seed,n_trunc,statistic_name,value,std_error\n";
    for (const auto& r : result.rows) {
        out << r.experiment_id << "," << r.model << ",";
        if (r.steps) out << *r.steps;
        out << "," << r.paths << "," << r.seed << "," << r.n_trunc << "," << r.statistic << ","
            << num(r.value) << ",";
        if (r.std_error) out << num(*r.std_error);
        out << "\n";
    }
    return out.str();
}

std::string summary_text(const ExperimentConfig& config, Command command, const RunResult& result) {
    std::ostringstream out;
    out << "command: " << to_string(command) << "\n"
        << "model: " << config.model.preset << " (driver " << config.model.driver.kind
        << ", terminal " << config.model.terminal.kind << ")\n"
        << "paths: " << config.paths << ", seed: " << config.seed
        << ", truncation level: " << config.solve_level << "\n\n";
    out << "fitted orders:\n";
    if (result.fitted.empty()) out << "  none\n";
    for (const auto& f : result.fitted) out << "  " << f << "\n";
    out << "\nchecks:\n";
    if (result.checks.empty()) out << "  none\n";
    for (const auto& c : result.checks)
        out << "  " << to_string(c.status) << "  " << c.name << " -- " << c.detail << "\n";
    std::size_t failed = 0;
    for (const auto& c : result.checks) failed += c.status == CheckStatus::Fail;
    out << "\n" << failed << " of " << result.checks.size() << " checks failed\n";
    return out.str();
}

void write_artifacts(const ExperimentConfig& config, Command command, const RunResult& result,
                     const fs::path& dir) {
    fs::create_directories(dir);
    if (config.wants("csv")) write_file(dir / "report.csv", report_csv(result, true));
    if (config.wants("summary")) write_file(dir / "summary.txt", summary_text(config, command, result));
    write_file(dir / "config_resolved", resolved_text(config));
}

int run_cli(const CliOptions& options) {
    ExperimentConfig config;
    Command command{};
    try {
        command = parse_command(options.command);
        config = load_config(options.config_path);
        if (options.seed) config.seed = *options.seed;
        if (options.workers) config.workers = *options.workers;
        if (options.out) config.directory = *options.out;
        validate_config(config, options.config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    const fs::path dir = config.directory;
    RunResult result;
    try {
        result = run_experiment(config, command, dir);
        write_artifacts(config, command, result, dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    for (const auto& c : result.checks)
        std::cerr << to_string(c.status) << "  " << c.name << " -- " << c.detail << "\n";
    if (options.strict && result.failed()) return kExitCheckFailed;
    return kExitOk;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace qgbsde::experiment
