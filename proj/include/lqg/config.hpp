#pragma once

// Experiment configuration: a flat YAML document of scalars and lists.
// Unknown keys are errors; every key has a per-experiment default, and
// serialize() writes all of them so parse(serialize(c)) == c.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lqg/grid.hpp"

namespace lqg {

enum class Experiment { kpz_table, gff_stats, measure_scan, fpt_run, kpz_verify, boundary_verify };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::kpz_table: return "kpz-table";
        case Experiment::gff_stats: return "gff-stats";
        case Experiment::measure_scan: return "measure-scan";
        case Experiment::fpt_run: return "fpt-run";
        case Experiment::kpz_verify: return "kpz-verify";
        case Experiment::boundary_verify: return "boundary-verify";
    }
    return "?";
}

inline Experiment experiment_from_string(const std::string& s) {
    for (auto e : {Experiment::kpz_table, Experiment::gff_stats, Experiment::measure_scan, Experiment::fpt_run,
                   Experiment::kpz_verify, Experiment::boundary_verify})
        if (s == to_string(e)) return e;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

/// Error carrying the line/column of the offending node (1-based; 0 if unknown).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                      : msg),
          line_(line),
          column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::kpz_table;
    std::uint64_t seed = 1;
    int grid_n = 256;
    std::vector<double> gamma_list;
    std::vector<double> x_list;      // kpz-table, fpt-run
    std::vector<double> a_list;      // fpt-run barrier heights
    std::vector<double> eps_list;    // circle radii / Euclidean ladder
    std::vector<double> delta_list;  // quantum ladder
    std::vector<std::string> masks;
    std::size_t n_fields = 1;
    std::size_t n_paths = 1;
    std::size_t n_samples = 1;
    std::size_t n_points = 1;
    std::size_t boundary_fields = 0;  // gff-stats: 0 skips the boundary law
    double site_step = 0.0;           // gff-stats: pooling lattice step, 0 = centre only
    double dt = 1e-4;
    double t_max = 0.0;               // 0 selects the default horizon
    bool bridge_correction = true;
    bool antithetic = false;
    bool write_hit_times = false;
    std::size_t dump_fields = 0;
    double window_lo = 0.25;
    double window_hi = 0.75;
    double eps_max = 0.25;
    double eps_density = 0.0;
    int n_boot = 200;
    double max_undetermined = 0.1;
    double gate_gamma_max = 1.0;
    int cantor_depth = 5;
    std::size_t walk_steps = 20000;
    std::string edge = "bottom";
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::vector<double> geometric(double first, double ratio, int count) {
    std::vector<double> v;
    for (int k = 0; k < count; ++k) v.push_back(first * std::pow(ratio, k));
    return v;
}

}  // namespace detail

inline ExperimentConfig default_config(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
        case Experiment::kpz_table:
            c.gamma_list = {1.0, std::sqrt(2.0), std::sqrt(8.0 / 3.0), std::sqrt(3.0), 4.0};
            for (int k = 0; k <= 20; ++k) c.x_list.push_back(k / 20.0);
            break;
        case Experiment::gff_stats:
            c.grid_n = 1024;
            c.eps_list = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
            c.n_fields = 500;
            c.site_step = 1.0 / 16;
            c.boundary_fields = 500;
            break;
        case Experiment::measure_scan:
            c.grid_n = 512;
            c.gamma_list = {1.0};
            c.eps_list = {1.0 / 16, 1.0 / 64};
            c.delta_list = {1e-2, 1e-3, 1e-4};
            c.n_fields = 1000;
            c.n_points = 10;
            break;
        case Experiment::fpt_run:
            c.gamma_list = {1.0};
            c.x_list = {0.0, 0.25, 0.5, 1.0};
            c.a_list = {2.0};
            c.n_paths = 100000;
            break;
        case Experiment::kpz_verify:
            c.grid_n = 1024;
            c.gamma_list = {0.5, 1.0};
            c.eps_list = detail::geometric(1.0 / 512, std::sqrt(2.0), 9);
            c.delta_list = detail::geometric(1e-2, std::pow(10.0, -0.5), 6);
            c.masks = {"segment", "point"};
            c.n_fields = 200;
            c.n_points = 2000;
            c.n_samples = 1000000;
            break;
        case Experiment::boundary_verify:
            c.grid_n = 1024;
            c.gamma_list = {0.5, 1.0};
            c.eps_list = detail::geometric(0.1, std::pow(3.0, -0.5), 7);
            c.delta_list = detail::geometric(0.1, std::pow(10.0, -0.25), 6);
            c.masks = {"point", "cantor_dust"};
            c.n_fields = 200;
            c.n_points = 2000;
            c.n_samples = 100000;
            break;
    }
    return c;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T scalar_as(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("key '" + key + "' has the wrong type", node.Mark().line + 1, node.Mark().column + 1);
    }
}

template <class T>
std::vector<T> list_as(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence()) throw ConfigError("key '" + key + "' must be a list", node.Mark().line + 1, node.Mark().column + 1);
    std::vector<T> out;
    for (const auto& item : node) out.push_back(scalar_as<T>(item, key));
    return out;
}

inline std::size_t count_as(const YAML::Node& node, const std::string& key) {
    const auto v = scalar_as<long long>(node, key);
    if (v < 0) throw ConfigError("key '" + key + "' must be nonnegative", node.Mark().line + 1, node.Mark().column + 1);
    return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Parse a config document. The experiment key selects the defaults that
/// the remaining keys override.
inline ExperimentConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root.IsMap()) throw ConfigError("config must be a mapping of keys to values");
    const YAML::Node exp = root["experiment"];
    if (!exp) throw ConfigError("missing key 'experiment'");
    ExperimentConfig c;
    try {
        c = default_config(experiment_from_string(detail::scalar_as<std::string>(exp, "experiment")));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), exp.Mark().line + 1, exp.Mark().column + 1);
    }
    using namespace detail;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        if (key == "experiment") continue;
        else if (key == "seed") c.seed = scalar_as<std::uint64_t>(v, key);
        else if (key == "grid_n") c.grid_n = scalar_as<int>(v, key);
        else if (key == "gamma_list") c.gamma_list = list_as<double>(v, key);
        else if (key == "x_list") c.x_list = list_as<double>(v, key);
        else if (key == "a_list") c.a_list = list_as<double>(v, key);
        else if (key == "eps_list") c.eps_list = list_as<double>(v, key);
        else if (key == "delta_list") c.delta_list = list_as<double>(v, key);
        else if (key == "masks") c.masks = list_as<std::string>(v, key);
        else if (key == "n_fields") c.n_fields = count_as(v, key);
        else if (key == "n_paths") c.n_paths = count_as(v, key);
        else if (key == "n_samples") c.n_samples = count_as(v, key);
        else if (key == "n_points") c.n_points = count_as(v, key);
        else if (key == "boundary_fields") c.boundary_fields = count_as(v, key);
        else if (key == "site_step") c.site_step = scalar_as<double>(v, key);
        else if (key == "dt") c.dt = scalar_as<double>(v, key);
        else if (key == "t_max") c.t_max = scalar_as<double>(v, key);
        else if (key == "bridge_correction") c.bridge_correction = scalar_as<bool>(v, key);
        else if (key == "antithetic") c.antithetic = scalar_as<bool>(v, key);
        else if (key == "write_hit_times") c.write_hit_times = scalar_as<bool>(v, key);
        else if (key == "dump_fields") c.dump_fields = count_as(v, key);
        else if (key == "window_lo") c.window_lo = scalar_as<double>(v, key);
        else if (key == "window_hi") c.window_hi = scalar_as<double>(v, key);
        else if (key == "eps_max") c.eps_max = scalar_as<double>(v, key);
        else if (key == "eps_density") c.eps_density = scalar_as<double>(v, key);
        else if (key == "n_boot") c.n_boot = scalar_as<int>(v, key);
        else if (key == "max_undetermined") c.max_undetermined = scalar_as<double>(v, key);
        else if (key == "gate_gamma_max") c.gate_gamma_max = scalar_as<double>(v, key);
        else if (key == "cantor_depth") c.cantor_depth = scalar_as<int>(v, key);
        else if (key == "walk_steps") c.walk_steps = count_as(v, key);
        else if (key == "edge") c.edge = scalar_as<std::string>(v, key);
        else if (key == "output_dir") c.output_dir = scalar_as<std::string>(v, key);
        else throw ConfigError("unknown key '" + key + "'", kv.first.Mark().line + 1, kv.first.Mark().column + 1);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) {
    using detail::format_double;
    std::string out;
    auto line = [&](const std::string& key, const std::string& value) { out += key + ": " + value + "\n"; };
    auto list = [&](const std::string& key, const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
        line(key, s + "]");
    };
    auto quoted = [](const std::string& s) {
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"' || ch == '\\') q += '\\';
            q += ch;
        }
        return q + "\"";
    };
    line("experiment", to_string(c.experiment));
    line("seed", std::to_string(c.seed));
    line("grid_n", std::to_string(c.grid_n));
    list("gamma_list", c.gamma_list);
    list("x_list", c.x_list);
    list("a_list", c.a_list);
    list("eps_list", c.eps_list);
    list("delta_list", c.delta_list);
    {
        std::string s = "[";
        for (std::size_t i = 0; i < c.masks.size(); ++i) s += (i ? ", " : "") + quoted(c.masks[i]);
        line("masks", s + "]");
    }
    line("n_fields", std::to_string(c.n_fields));
    line("n_paths", std::to_string(c.n_paths));
    line("n_samples", std::to_string(c.n_samples));
    line("n_points", std::to_string(c.n_points));
    line("boundary_fields", std::to_string(c.boundary_fields));
    line("site_step", format_double(c.site_step));
    line("dt", format_double(c.dt));
    line("t_max", format_double(c.t_max));
    line("bridge_correction", c.bridge_correction ? "true" : "false");
    line("antithetic", c.antithetic ? "true" : "false");
    line("write_hit_times", c.write_hit_times ? "true" : "false");
    line("dump_fields", std::to_string(c.dump_fields));
    line("window_lo", format_double(c.window_lo));
    line("window_hi", format_double(c.window_hi));
    line("eps_max", format_double(c.eps_max));
    line("eps_density", format_double(c.eps_density));
    line("n_boot", std::to_string(c.n_boot));
    line("max_undetermined", format_double(c.max_undetermined));
    line("gate_gamma_max", format_double(c.gate_gamma_max));
    line("cantor_depth", std::to_string(c.cantor_depth));
    line("walk_steps", std::to_string(c.walk_steps));
    line("edge", quoted(c.edge));
    line("output_dir", quoted(c.output_dir));
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { info, warning, error };

inline const char* to_string(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
    }
    return "?";
}

struct Diagnostic {
    Severity severity = Severity::info;
    std::string key;
    std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& d) {
    for (const auto& x : d)
        if (x.severity == Severity::error) return true;
    return false;
}

inline constexpr int kMaxGridN = 4096;

/// Rough single-worker runtime in seconds, from measured per-operation costs.
inline double estimate_runtime_seconds(const ExperimentConfig& c) {
    const double n2 = static_cast<double>(c.grid_n) * c.grid_n;
    const double field = 5.5e-9 * n2 * std::log2(std::max(2, c.grid_n));  // sample one field
    const double g = static_cast<double>(std::max<std::size_t>(1, c.gamma_list.size()));
    switch (c.experiment) {
        case Experiment::kpz_table: return 1e-3;
        case Experiment::gff_stats: return (c.n_fields + c.boundary_fields) * field * 1.1;
        case Experiment::measure_scan: return g * c.n_fields * (field * 1.1 + 2e-4 * c.n_points);
        case Experiment::fpt_run: return g * c.a_list.size() * c.n_paths * 1.2e-5 * std::max(1.0, 1e-4 / c.dt);
        case Experiment::kpz_verify:
        case Experiment::boundary_verify:
            return g * c.n_fields * (2.0 * field + 3e-4 * c.n_points) + 2e-6 * c.n_samples * c.masks.size();
    }
    return 0.0;
}

inline std::vector<Diagnostic> validate(const ExperimentConfig& c) {
    std::vector<Diagnostic> d;
    auto error = [&](const std::string& key, const std::string& msg) { d.push_back({Severity::error, key, msg}); };
    auto warn = [&](const std::string& key, const std::string& msg) { d.push_back({Severity::warning, key, msg}); };
    const Experiment e = c.experiment;
    const bool uses_grid = e != Experiment::kpz_table && e != Experiment::fpt_run;
    const bool bulk_measure = e == Experiment::measure_scan || e == Experiment::kpz_verify || e == Experiment::boundary_verify;

    if (uses_grid) {
        if (c.grid_n < 16 || (c.grid_n & (c.grid_n - 1)) != 0) error("grid_n", "must be a power of two >= 16");
        else if (c.grid_n > kMaxGridN) error("grid_n", "grid " + std::to_string(c.grid_n) + " exceeds the supported maximum " + std::to_string(kMaxGridN));
    }
    if (e != Experiment::gff_stats) {
        if (c.gamma_list.empty()) error("gamma_list", "must not be empty");
        for (double g : c.gamma_list) {
            if (!(g > 0.0) || !std::isfinite(g)) {
                error("gamma_list", "entries must be positive, got " + detail::format_double(g));
            } else if (bulk_measure && g >= 2.0) {
                error("gamma_list", "gamma=" + detail::format_double(g) +
                                        ": the bulk quantum measure is undefined for gamma >= 2 (the regularized measures "
                                        "converge to zero); use fpt-run to study the dual regime");
            }
        }
    }
    auto need_count = [&](const char* key, std::size_t v) {
        if (v < 1) error(key, "must be >= 1");
    };
    switch (e) {
        case Experiment::kpz_table:
            if (c.x_list.empty()) error("x_list", "must not be empty");
            break;
        case Experiment::gff_stats:
            need_count("n_fields", c.n_fields);
            if (c.eps_list.size() < 2) error("eps_list", "needs at least two radii");
            if (c.site_step < 0.0 || c.site_step > 0.5) error("site_step", "must lie in [0, 1/2]");
            break;
        case Experiment::measure_scan:
            need_count("n_fields", c.n_fields);
            if (c.eps_list.empty()) error("eps_list", "must not be empty");
            break;
        case Experiment::fpt_run:
            need_count("n_paths", c.n_paths);
            if (c.x_list.empty()) error("x_list", "must not be empty");
            if (c.a_list.empty()) error("a_list", "must not be empty");
            for (double a : c.a_list)
                if (!(a > 0.0)) error("a_list", "barrier heights must be positive");
            if (!(c.dt > 0.0)) error("dt", "must be positive");
            for (double a : c.a_list)
                if (c.dt > 1e-3 * std::min(1.0, a * a))
                    warn("dt", "dt=" + detail::format_double(c.dt) + " exceeds 1e-3*min(1, A^2) for A=" + detail::format_double(a));
            break;
        case Experiment::kpz_verify:
        case Experiment::boundary_verify:
            need_count("n_fields", c.n_fields);
            need_count("n_points", c.n_points);
            need_count("n_samples", c.n_samples);
            if (c.masks.empty()) error("masks", "must not be empty");
            if (c.delta_list.size() < 4) error("delta_list", "needs at least 4 rungs");
            if (c.eps_list.size() < 4) error("eps_list", "needs at least 4 rungs");
            if (!(c.window_lo > 0.0 && c.window_lo < c.window_hi && c.window_hi < 1.0)) error("window_lo", "window must satisfy 0 < lo < hi < 1");
            for (const auto& m : c.masks) {
                const bool bulk_kind = m == "point" || m == "segment" || m == "cantor_dust" || m == "random_walk_range";
                const bool edge_kind = m == "point" || m == "cantor_dust";
                if (!(e == Experiment::kpz_verify ? bulk_kind : edge_kind)) error("masks", "unsupported mask '" + m + "'");
            }
            if (e == Experiment::boundary_verify && c.edge != "bottom" && c.edge != "right" && c.edge != "top" && c.edge != "left") {
                error("edge", "unknown edge '" + c.edge + "'");
            }
            break;
    }
    for (double x : c.x_list)
        if (!(x >= 0.0)) error("x_list", "entries must be nonnegative");
    for (double v : c.delta_list)
        if (!(v > 0.0)) error("delta_list", "entries must be positive");
    if (uses_grid && c.grid_n >= 16) {
        const double floor = 2.0 / c.grid_n;
        for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
            if (c.eps_list[k] < floor * (1.0 - 1e-12)) {
                error("eps_list", "rung " + std::to_string(k) + " (eps=" + detail::format_double(c.eps_list[k]) +
                                      ") is below the resolution 2/n=" + detail::format_double(floor));
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "estimated runtime %.0f s on one worker", estimate_runtime_seconds(c));
    d.push_back({Severity::info, "", buf});
    return d;
}

}  // namespace lqg
