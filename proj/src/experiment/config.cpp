#include "qgbsde/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qgbsde/truncation.hpp"

namespace qgbsde::experiment {

namespace pt = boost::property_tree;

namespace {

std::string locate(const std::string& origin, std::optional<std::size_t> line) {
    return line ? origin + ":" + std::to_string(*line) : origin;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>)
            out += fmt(xs[i]);
        else if constexpr (std::is_same_v<T, std::string>)
            out += xs[i];
        else
            out += std::to_string(xs[i]);
    }
    return out;
}

std::string coefficient_text(const catalog::CoefficientChoice& c) {
    if (c.params.empty()) return c.kind;
    return c.kind + "(" + join(c.params) + ")";
}

// Maps "[section] key" to the 1-based line it was read from.
std::map<std::string, std::size_t> line_index(const std::string& text) {
    std::map<std::string, std::size_t> lines;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t n = 0;
    while (std::getline(in, raw)) {
        ++n;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == ';' || s[0] == '#') continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            lines.emplace("[" + section + "]", n);
            continue;
        }
        const auto eq = s.find('=');
        if (eq != std::string::npos) lines.emplace("[" + section + "] " + trim(s.substr(0, eq)), n);
    }
    return lines;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::string origin, std::map<std::string, std::size_t> lines)
        : tree_(tree), origin_(std::move(origin)), lines_(std::move(lines)) {}

    [[noreturn]] void fail(const std::string& section, const std::string& key,
                           const std::string& what) const {
        const std::string field = key.empty() ? "[" + section + "]" : "[" + section + "] " + key;
        const auto it = lines_.find(field);
        std::optional<std::size_t> line;
        if (it != lines_.end()) line = it->second;
        throw ConfigError(origin_, line, field, what);
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    template <class T>
    void number(const std::string& section, const std::string& key, T& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        out = parse_number<T>(section, key, *v);
    }

    template <class T>
    T parse_number(const std::string& section, const std::string& key, const std::string& v) const {
        T value{};
        const char* end = v.data() + v.size();
        const auto res = std::from_chars(v.data(), end, value);
        if (res.ec != std::errc() || res.ptr != end || v.empty())
            fail(section, key, "'" + v + "' is not a valid number");
        return value;
    }

    template <class T>
    void list(const std::string& section, const std::string& key, std::vector<T>& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        out.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(section, key, trim(item)));
        if (out.empty()) fail(section, key, "empty list");
    }

    void flag(const std::string& section, const std::string& key, bool& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        if (*v == "true" || *v == "yes" || *v == "1")
            out = true;
        else if (*v == "false" || *v == "no" || *v == "0")
            out = false;
        else
            fail(section, key, "'" + *v + "' is not a boolean");
    }

    void text(const std::string& section, const std::string& key, std::string& out) const {
        if (const auto v = raw(section, key)) out = *v;
    }

    void coefficient(const std::string& section, const std::string& key,
                     catalog::CoefficientChoice& out) const {
        const auto v = raw(section, key);
        if (!v) return;
        catalog::CoefficientChoice c;
        const auto open = v->find('(');
        if (open == std::string::npos) {
            c.kind = *v;
        } else {
            if (v->back() != ')') fail(section, key, "expected kind(p1, p2, ...)");
            c.kind = trim(v->substr(0, open));
            std::stringstream ss(v->substr(open + 1, v->size() - open - 2));
            std::string item;
            while (std::getline(ss, item, ','))
                c.params.push_back(parse_number<double>(section, key, trim(item)));
        }
        const auto known = catalog::kinds(key);
        if (std::find(known.begin(), known.end(), c.kind) == known.end())
            fail(section, key, "unknown " + key + " kind '" + c.kind + "'");
        out = c;
    }

private:
    const pt::ptree& tree_;
    std::string origin_;
    std::map<std::string, std::size_t> lines_;
};

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"model",
         {"preset", "dim_state", "dim_noise", "initial_state", "horizon", "drift", "diffusion",
          "driver", "terminal"}},
        {"grid", {"steps", "refinement"}},
        {"mc", {"paths", "seed", "workers"}},
        {"solver", {"basis", "degree", "cells", "picard_iters", "clamp"}},
        {"truncation", {"levels", "reference_level", "use_oracle", "solve_level"}},
        {"outputs", {"directory", "formats", "cache_ensemble"}},
    };
    return s;
}

bool quadratic_driver(const catalog::ModelChoice& m) {
    return m.driver.kind.rfind("quadratic", 0) == 0;
}

bool oracle_eligible(const catalog::ModelChoice& m) {
    return m.dim_state == 1 && m.dim_noise == 1 && m.drift.kind == "zero" &&
           m.diffusion.kind == "constant" && m.driver.kind == "quadratic";
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, std::optional<std::size_t> line,
                         const std::string& field, const std::string& what)
    : Error(locate(origin, line) + ": " + field + ": " + what), field_(field), line_(line) {}

bool ExperimentConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        std::optional<std::size_t> line;
        if (e.line() > 0) line = e.line();
        throw ConfigError(origin, line, "syntax", e.message());
    }
    const Reader r(tree, origin, line_index(text));

    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (body.empty() && !body.data().empty()) r.fail("", section, "key outside any section");
        if (it == schema().end()) r.fail(section, "", "unknown section");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) r.fail(section, key, "unknown key");
    }

    ExperimentConfig c;
    if (const auto preset = r.raw("model", "preset")) {
        if (!catalog::has_preset(*preset)) r.fail("model", "preset", "unknown preset '" + *preset + "'");
        c.model = catalog::preset(*preset);
    }
    r.number("model", "dim_state", c.model.dim_state);
    r.number("model", "dim_noise", c.model.dim_noise);
    r.list("model", "initial_state", c.model.initial_state);
    r.number("model", "horizon", c.model.horizon);
    r.coefficient("model", "drift", c.model.drift);
    r.coefficient("model", "diffusion", c.model.diffusion);
    r.coefficient("model", "driver", c.model.driver);
    r.coefficient("model", "terminal", c.model.terminal);
    // Overridden coefficients no longer describe the named preset.
    if (c.model.preset != "custom" && catalog::has_preset(c.model.preset)) {
        const auto p = catalog::preset(c.model.preset);
        const auto same = [](const catalog::CoefficientChoice& a, const catalog::CoefficientChoice& b) {
            return a.kind == b.kind && a.params == b.params;
        };
        if (p.dim_state != c.model.dim_state || p.dim_noise != c.model.dim_noise ||
            p.initial_state != c.model.initial_state || p.horizon != c.model.horizon ||
            !same(p.drift, c.model.drift) || !same(p.diffusion, c.model.diffusion) ||
            !same(p.driver, c.model.driver) || !same(p.terminal, c.model.terminal))
            c.model.preset = "custom";
    }

    r.list("grid", "steps", c.steps);
    r.number("grid", "refinement", c.refinement);
    r.number("mc", "paths", c.paths);
    r.number("mc", "seed", c.seed);
    r.number("mc", "workers", c.workers);
    r.text("solver", "basis", c.basis);
    r.number("solver", "degree", c.degree);
    r.number("solver", "cells", c.cells);
    r.number("solver", "picard_iters", c.picard_iters);
    r.flag("solver", "clamp", c.clamp);
    r.list("truncation", "levels", c.levels);
    r.number("truncation", "reference_level", c.reference_level);
    r.flag("truncation", "use_oracle", c.use_oracle);
    if (r.raw("truncation", "solve_level"))
        r.number("truncation", "solve_level", c.solve_level);
    else
        c.solve_level = quadratic_driver(c.model) && !c.levels.empty() ? c.levels.back() : 0;
    r.text("outputs", "directory", c.directory);
    if (const auto v = r.raw("outputs", "formats")) {
        c.formats.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) c.formats.push_back(trim(item));
    }
    r.flag("outputs", "cache_ensemble", c.cache_ensemble);

    try {
        validate_config(c, origin);
    } catch (const ConfigError& e) {
        // Re-raise with the line of the field when the text has it.
        const auto lines = line_index(text);
        const auto it = lines.find(e.field());
        if (it == lines.end() || e.line()) throw;
        const std::string prefix = origin + ": " + e.field() + ": ";
        throw ConfigError(origin, it->second, e.field(), std::string(e.what()).substr(prefix.size()));
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), std::nullopt, "file", "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.string());
}

void validate_config(const ExperimentConfig& c, const std::string& origin) {
    const auto fail = [&](const std::string& field, const std::string& what) {
        throw ConfigError(origin, std::nullopt, field, what);
    };
    if (c.model.preset != "custom" && !catalog::has_preset(c.model.preset))
        fail("[model] preset", "unknown preset '" + c.model.preset + "'");
    try {
        (void)catalog::build_model(c.model);
    } catch (const Error& e) {
        fail("[model]", e.what());
    }
    if (c.steps.empty()) fail("[grid] steps", "at least one step count is required");
    for (std::size_t i = 0; i < c.steps.size(); ++i) {
        if (c.steps[i] == 0) fail("[grid] steps", "step counts must be positive");
        if (i && c.steps[i] <= c.steps[i - 1]) fail("[grid] steps", "step counts must be strictly increasing");
    }
    if (c.refinement < 2) fail("[grid] refinement", "refinement factor must be at least 2");
    if (c.paths < 100) fail("[mc] paths", "at least 100 paths are required");
    if (c.workers < 1) fail("[mc] workers", "at least one worker is required");
    if (c.basis != "local" && c.basis != "global") fail("[solver] basis", "expected 'local' or 'global'");
    if (c.degree > 8) fail("[solver] degree", "degree above 8 is not supported");
    if (c.basis == "local" && c.degree > 1) fail("[solver] degree", "a local basis supports degree 0 or 1");
    if (c.cells < 1) fail("[solver] cells", "at least one cell is required");
    if (c.picard_iters < 1) fail("[solver] picard_iters", "at least one Picard pass is required");
    if (c.levels.empty()) fail("[truncation] levels", "at least one level is required");
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (c.levels[i] == 0) fail("[truncation] levels", "levels must be positive");
        if (i && c.levels[i] <= c.levels[i - 1]) fail("[truncation] levels", "levels must be strictly increasing");
    }
    if (c.reference_level <= c.levels.back())
        fail("[truncation] reference_level", "reference level must exceed every level");
    if (c.solve_level == 0 && quadratic_driver(c.model))
        fail("[truncation] solve_level", "a quadratic driver needs a positive truncation level");
    if (c.use_oracle && !oracle_eligible(c.model))
        fail("[truncation] use_oracle",
             "the oracle needs m = d = 1, zero drift, constant diffusion and a quadratic driver");
    if (c.clamp) {
        const auto model = catalog::build_model(c.model);
        if (!model.terminal_sup) fail("[solver] clamp", "clamping needs a bounded terminal condition");
    }
    if (c.directory.empty()) fail("[outputs] directory", "output directory must not be empty");
    for (const auto& f : c.formats)
        if (f != "csv" && f != "summary") fail("[outputs] formats", "unknown format '" + f + "'");
}

std::string resolved_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[model]\n"
        << "preset = " << c.model.preset << "\n"
        << "dim_state = " << c.model.dim_state << "\n"
        << "dim_noise = " << c.model.dim_noise << "\n"
        << "initial_state = " << join(c.model.initial_state) << "\n"
        << "horizon = " << fmt(c.model.horizon) << "\n"
        << "drift = " << coefficient_text(c.model.drift) << "\n"
        << "diffusion = " << coefficient_text(c.model.diffusion) << "\n"
        << "driver = " << coefficient_text(c.model.driver) << "\n"
        << "terminal = " << coefficient_text(c.model.terminal) << "\n\n"
        << "[grid]\n"
        << "steps = " << join(c.steps) << "\n"
        << "refinement = " << c.refinement << "\n\n"
        << "[mc]\n"
        << "paths = " << c.paths << "\n"
        << "seed = " << c.seed << "\n"
        << "workers = " << c.workers << "\n\n"
        << "[solver]\n"
        << "basis = " << c.basis << "\n"
        << "degree = " << c.degree << "\n"
        << "cells = " << c.cells << "\n"
        << "picard_iters = " << c.picard_iters << "\n"
        << "clamp = " << (c.clamp ? "true" : "false") << "\n\n"
        << "[truncation]\n"
        << "levels = " << join(c.levels) << "\n"
        << "reference_level = " << c.reference_level << "\n"
        << "use_oracle = " << (c.use_oracle ? "true" : "false") << "\n"
        << "solve_level = " << c.solve_level << "\n\n"
        << "[outputs]\n"
        << "directory = " << c.directory << "\n"
        << "formats = " << join(c.formats) << "\n"
        << "cache_ensemble = " << (c.cache_ensemble ? "true" : "false") << "\n";
    return out.str();
}

ModelSpec base_model(const ExperimentConfig& config) { return catalog::build_model(config.model); }

ModelSpec solve_model(const ExperimentConfig& config) {
    ModelSpec model = base_model(config);
    if (config.solve_level > 0) model = truncate_driver(model, config.solve_level);
    return model;
}

SolverOptions solver_options(const ExperimentConfig& config, const ModelSpec& model) {
    SolverOptions o;
    o.basis = config.basis == "global" ? RegressionBasis::global_polynomial(config.degree)
                                       : RegressionBasis::local_partition(config.cells, config.degree);
    o.picard_iters = config.picard_iters;
    o.regression.workers = config.workers;
    if (config.clamp && model.terminal_sup) {
        // a-priori bound for |f| <= M(1 + |y| + |z|^2) and |g| <= sup
        const double mt = model.growth_M * model.horizon;
        o.y_clamp = (*model.terminal_sup + mt) * std::exp(mt);
    }
    return o;
}

}  // namespace qgbsde::experiment
