#ifndef BLOWFLY_CONFIG_HPP
#define BLOWFLY_CONFIG_HPP

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "charspec.hpp"
#include "model.hpp"
#include "stability.hpp"

namespace blowfly {

// ---------------------------------------------------------------------------
// Run configuration: plain sectioned key = value files with sections
// [model], [wave], [grid], [experiment].  Every key has a documented default;
// unknown keys and malformed values are rejected with the line number.
// ---------------------------------------------------------------------------

struct RunConfig {
    // [model] — the five physical constants
    double D = 1.0;
    double delta = 1.0;
    double p = std::exp(2.0);
    double a = 1.0;
    double r = 1.0;

    // [wave] — c = "critical" (default) or an explicit speed; lambda optionally
    // overrides the weight exponent for non-critical waves
    bool critical = true;
    double c = 0.0;
    std::optional<double> lambda;

    // [grid]
    double L = 100.0;
    int n = 4096;

    // [experiment]
    double t_end = 200.0;
    double relax_t = 2000.0;
    double deriv_tol = 1e-7;
    double sample_dt = 0.1;
    double cfl = 0.4;
    std::optional<double> dt;  // explicit step override (must divide r)
    double fit_t_lo = 0.0, fit_t_hi = 0.0;  // {0,0} -> default window
    bool envelope = false;
    double envelope_period = 0.0;
    std::optional<double> x0;

    // perturbation shape
    std::string kind = "bump";  // bump | shiftdiff | packet | largebump
    double amplitude = 0.1;
    double center = 0.0;
    double width = 5.0;
    double shift_h = 0.5;
    double wavenumber = 2.0;
    double cutoff = std::numeric_limits<double>::quiet_NaN();

    // evolve
    std::string form = "perturbation";  // lab | perturbation | antiweighted | comparison
    long snap_stride = 50;              // samples between field snapshots

    // delayed-exp
    double k_bar = 1.0;

    // sweep: comma-separated wave speeds, each "critical" or an explicit c
    std::string sweep_c = "critical";

    // verbatim key/value snapshot for the manifest
    std::vector<std::pair<std::string, std::string>> raw;

    ModelParams model() const { return ModelParams(D, delta, p, a, r); }

    WaveSpec wave(const ModelParams& mp) const {
        if (critical) return critical_wave_spec(mp);
        return make_wave_spec(mp, c, lambda);
    }

    Perturbation perturbation() const {
        Perturbation pert;
        if (kind == "bump") pert.kind = PerturbationKind::Bump;
        else if (kind == "shiftdiff") pert.kind = PerturbationKind::ShiftDiff;
        else if (kind == "packet") pert.kind = PerturbationKind::Packet;
        else if (kind == "largebump") pert.kind = PerturbationKind::LargeBump;
        else throw ConfigError("unknown perturbation kind '" + kind + "'");
        pert.amplitude = amplitude;
        pert.center = center;
        pert.width = width;
        pert.shift_h = shift_h;
        pert.wavenumber = wavenumber;
        pert.cutoff = cutoff;
        return pert;
    }

    ExperimentSpec experiment() const {
        const ModelParams mp = model();
        ExperimentSpec spec{mp, wave(mp), Grid1D(L, n)};
        spec.pert = perturbation();
        spec.t_end = t_end;
        spec.relax_t = relax_t;
        spec.deriv_tol = deriv_tol;
        spec.sample_dt = sample_dt;
        spec.cfl = cfl;
        spec.window = {fit_t_lo, fit_t_hi};
        spec.envelope = envelope;
        spec.envelope_period = envelope_period;
        spec.x0_override = x0;
        return spec;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_number(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            throw ConfigError("line " + std::to_string(line) + ": malformed value for '" +
                              key + "': " + v);
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": malformed value for '" + key +
                          "': " + v);
    }
}

inline long parse_integer(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size())
            throw ConfigError("line " + std::to_string(line) + ": malformed value for '" +
                              key + "': " + v);
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": malformed value for '" + key +
                          "': " + v);
    }
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("line " + std::to_string(line) + ": malformed value for '" + key +
                      "': expected true/false, got " + v);
}

} // namespace detail

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    RunConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header: " + line);
            section = line.substr(1, line.size() - 2);
            if (section != "model" && section != "wave" && section != "grid" &&
                section != "experiment")
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key = value, got: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key = value, got: " + line);
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                              "' outside any section");
        cfg.raw.emplace_back(section + "." + key, val);

        auto num = [&] { return detail::parse_number(val, lineno, key); };
        auto unknown = [&]() -> ConfigError {
            return ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key +
                               "' in section [" + section + "]");
        };

        if (section == "model") {
            if (key == "D") cfg.D = num();
            else if (key == "delta") cfg.delta = num();
            else if (key == "p") cfg.p = num();
            else if (key == "a") cfg.a = num();
            else if (key == "r") cfg.r = num();
            else throw unknown();
        } else if (section == "wave") {
            if (key == "c") {
                if (val == "critical") {
                    cfg.critical = true;
                } else {
                    cfg.critical = false;
                    cfg.c = num();
                }
            } else if (key == "lambda") {
                cfg.lambda = num();
            } else {
                throw unknown();
            }
        } else if (section == "grid") {
            if (key == "L") cfg.L = num();
            else if (key == "n") cfg.n = static_cast<int>(detail::parse_integer(val, lineno, key));
            else throw unknown();
        } else {  // experiment
            if (key == "t_end") cfg.t_end = num();
            else if (key == "relax_t") cfg.relax_t = num();
            else if (key == "deriv_tol") cfg.deriv_tol = num();
            else if (key == "sample_dt") cfg.sample_dt = num();
            else if (key == "cfl") cfg.cfl = num();
            else if (key == "dt") cfg.dt = num();
            else if (key == "fit_t_lo") cfg.fit_t_lo = num();
            else if (key == "fit_t_hi") cfg.fit_t_hi = num();
            else if (key == "envelope") cfg.envelope = detail::parse_bool(val, lineno, key);
            else if (key == "envelope_period") cfg.envelope_period = num();
            else if (key == "x0") cfg.x0 = num();
            else if (key == "kind") cfg.kind = val;
            else if (key == "amplitude") cfg.amplitude = num();
            else if (key == "center") cfg.center = num();
            else if (key == "width") cfg.width = num();
            else if (key == "shift_h") cfg.shift_h = num();
            else if (key == "wavenumber") cfg.wavenumber = num();
            else if (key == "cutoff") cfg.cutoff = num();
            else if (key == "form") cfg.form = val;
            else if (key == "snap_stride")
                cfg.snap_stride = detail::parse_integer(val, lineno, key);
            else if (key == "k_bar") cfg.k_bar = num();
            else if (key == "sweep_c") cfg.sweep_c = val;
            else throw unknown();
        }
    }

    // cross-field validation, fail-fast before any computation
    try {
        const ModelParams mp = cfg.model();
        if (!cfg.critical && mp.p > mp.delta) {
            const double cs = min_speed(mp).c_star;
            if (cfg.c < cs * (1.0 - 1e-12))
                throw ConfigError("c below critical speed (c = " + std::to_string(cfg.c) +
                                  ", c* = " + std::to_string(cs) + ")");
        }
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    if (cfg.L <= 0.0) throw ConfigError("L must be positive");
    if (cfg.n < 3) throw ConfigError("n must be at least 3");
    if (cfg.t_end <= 0.0) throw ConfigError("t_end must be positive");
    if (cfg.sample_dt <= 0.0) throw ConfigError("sample_dt must be positive");
    if (cfg.cfl <= 0.0 || cfg.cfl > 0.9)
        throw ConfigError("cfl must lie in (0, 0.9]");
    if (cfg.dt && *cfg.dt <= 0.0) throw ConfigError("dt must be positive");
    if (cfg.snap_stride < 1) throw ConfigError("snap_stride must be at least 1");
    if (cfg.kind != "bump" && cfg.kind != "shiftdiff" && cfg.kind != "packet" &&
        cfg.kind != "largebump")
        throw ConfigError("unknown perturbation kind '" + cfg.kind + "'");
    if (cfg.form != "lab" && cfg.form != "perturbation" && cfg.form != "antiweighted" &&
        cfg.form != "comparison")
        throw ConfigError("unknown equation form '" + cfg.form + "'");
    return cfg;
}

} // namespace blowfly

#endif
