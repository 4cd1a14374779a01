// blowfly: numerical laboratory for the delayed reaction-diffusion model.
// Subcommands: speeds, profile, evolve, delayed-exp, farfield, linear-decay,
// stability, sweep.  Exit codes: 0 success, 1 falsified acceptance property,
// 2 configuration error, 3 numerical failure.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "blowfly/config.hpp"
#include "blowfly/lindelay.hpp"
#include "blowfly/stability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace blowfly;

namespace {

// All numeric output carries full double precision.
std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_row(const std::vector<double>& vals) {
    std::string row;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) row += ',';
        row += fmt17(vals[i]);
    }
    return row;
}

const char* to_string(ProfileLabel pl) {
    switch (pl) {
        case ProfileLabel::Monotone: return "monotone";
        case ProfileLabel::Oscillatory: return "oscillatory";
        case ProfileLabel::Ambiguous: return "ambiguous";
    }
    return "?";
}

// Per-run output directory: CSV files (header + rows + #manifest trailer) and
// a manifest.json written atomically at run end.
class Emitter {
public:
    explicit Emitter(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        manifest_["files"] = json::array();
    }

    const fs::path& dir() const { return dir_; }
    json& manifest() { return manifest_; }

    void csv(const std::string& name, const std::string& header,
             const std::vector<std::string>& rows) {
        std::ofstream out(dir_ / name);
        if (!out) throw ConfigError("cannot write output file: " + (dir_ / name).string());
        out << header << '\n';
        for (const auto& r : rows) out << r << '\n';
        out << "#manifest=manifest.json\n";
        manifest_["files"].push_back(name);
    }

    void stage(const std::string& name, double seconds) {
        manifest_["wall_clock_s"][name] = seconds;
    }

    // atomic write: temp file in the same directory, then rename
    void finish() {
        const fs::path tmp = dir_ / "manifest.json.tmp";
        {
            std::ofstream out(tmp);
            out << manifest_.dump(2) << '\n';
        }
        fs::rename(tmp, dir_ / "manifest.json");
    }

private:
    fs::path dir_;
    json manifest_;
};

class StageClock {
public:
    explicit StageClock(Emitter& em) : em_(em), t0_(std::chrono::steady_clock::now()) {}
    void mark(const std::string& name) {
        const auto t1 = std::chrono::steady_clock::now();
        em_.stage(name, std::chrono::duration<double>(t1 - t0_).count());
        t0_ = t1;
    }

private:
    Emitter& em_;
    std::chrono::steady_clock::time_point t0_;
};

json config_json(const RunConfig& cfg) {
    json j;
    for (const auto& [k, v] : cfg.raw) j["given"][k] = v;
    json& e = j["effective"];
    e["model.D"] = cfg.D;
    e["model.delta"] = cfg.delta;
    e["model.p"] = cfg.p;
    e["model.a"] = cfg.a;
    e["model.r"] = cfg.r;
    e["wave.c"] = cfg.critical ? json("critical") : json(cfg.c);
    if (cfg.lambda) e["wave.lambda"] = *cfg.lambda;
    e["grid.L"] = cfg.L;
    e["grid.n"] = cfg.n;
    e["experiment.t_end"] = cfg.t_end;
    e["experiment.relax_t"] = cfg.relax_t;
    e["experiment.deriv_tol"] = cfg.deriv_tol;
    e["experiment.sample_dt"] = cfg.sample_dt;
    e["experiment.cfl"] = cfg.cfl;
    if (cfg.dt) e["experiment.dt"] = *cfg.dt;
    e["experiment.fit_t_lo"] = cfg.fit_t_lo;
    e["experiment.fit_t_hi"] = cfg.fit_t_hi;
    e["experiment.envelope"] = cfg.envelope;
    e["experiment.kind"] = cfg.kind;
    e["experiment.amplitude"] = cfg.amplitude;
    e["experiment.center"] = cfg.center;
    e["experiment.width"] = cfg.width;
    e["experiment.shift_h"] = cfg.shift_h;
    e["experiment.wavenumber"] = cfg.wavenumber;
    e["experiment.form"] = cfg.form;
    e["experiment.snap_stride"] = cfg.snap_stride;
    e["experiment.k_bar"] = cfg.k_bar;
    e["experiment.sweep_c"] = cfg.sweep_c;
    return j;
}

json spectral_json(const SpectralProfile& sp) {
    json j;
    j["c_star"] = sp.c_star;
    j["lambda_star"] = sp.lambda_star;
    j["r_under"] = sp.r_under;
    j["r_bar"] = std::isinf(sp.r_bar) ? json("inf") : json(sp.r_bar);
    j["c_upper"] = sp.c_upper;
    j["lambda_upper"] = sp.lambda_upper;
    j["r0"] = sp.r0;
    j["regime"] = to_string(sp.regime);
    return j;
}

json ratefit_json(const RateFit& f) {
    json j;
    switch (f.model) {
        case DecayModel::Algebraic: j["model"] = "algebraic"; break;
        case DecayModel::Exponential: j["model"] = "exponential"; break;
        case DecayModel::Mixed: j["model"] = "mixed"; break;
    }
    j["alg_exponent"] = f.alg_exponent;
    j["exp_rate"] = f.exp_rate;
    j["exp_rate_sigma"] = f.exp_rate_sigma;
    j["amplitude"] = f.amplitude;
    j["r_squared"] = f.r_squared;
    j["window"] = {f.window.t_lo, f.window.t_hi};
    j["n_samples"] = f.n_samples;
    return j;
}

void write_json_file(const fs::path& path, const json& j, Emitter& em) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    out << j.dump(2) << '\n';
    em.manifest()["files"].push_back(path.filename().string());
}

// Common manifest scaffolding for every subcommand.
void seed_manifest(Emitter& em, const std::string& cmd, const RunConfig& cfg,
                   unsigned long long seed) {
    em.manifest()["command"] = cmd;
    em.manifest()["seed"] = seed;
    em.manifest()["config"] = config_json(cfg);
}

// ---------------------------------------------------------------------------
// Profile computation shared by profile/evolve/stability-adjacent commands:
// critical wave requests run at the discrete threshold speed of the grid.
// ---------------------------------------------------------------------------

struct ProfileResult {
    WaveProfile wp{Grid1D(1.0, 3), std::vector<double>(3, 0.0)};
    WaveSpec ws_used{0.0, 0.0, false};
    double drift = 0.0;
    bool critical = false;
};

ProfileResult compute_profile_for(const RunConfig& cfg, const ModelParams& mp,
                                  const Grid1D& grid) {
    ProfileResult out;
    out.critical = cfg.critical;
    if (cfg.critical) {
        auto marg = compute_marginal_profile(mp, grid, cfg.relax_t);
        out.wp = std::move(marg.profile);
        out.ws_used = WaveSpec{marg.speed.c, marg.speed.lambda, false};
        out.drift = marg.drift;
    } else {
        const WaveSpec ws = cfg.wave(mp);
        out.wp = compute_profile(ws, mp, grid, cfg.relax_t, cfg.deriv_tol);
        out.ws_used = ws;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int cmd_speeds(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const ModelParams mp = cfg.model();
    const SpectralProfile sp = spectral_profile(mp);
    clock.mark("spectral");
    std::string row = csv_row({sp.c_star, sp.lambda_star, sp.r_under, sp.r_bar, sp.c_upper,
                               sp.lambda_upper, sp.r0});
    row += ',';
    row += to_string(sp.regime);
    em.csv("speeds.csv", "c_star,lambda_star,r_under,r_bar,c_upper,lambda_upper,r0,regime",
           {row});
    em.manifest()["spectral"] = spectral_json(sp);
    return 0;
}

int cmd_profile(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const ModelParams mp = cfg.model();
    const Grid1D grid(cfg.L, cfg.n);
    const auto pr = compute_profile_for(cfg, mp, grid);
    clock.mark("relaxation");

    std::vector<std::string> rows;
    rows.reserve(grid.n);
    for (int i = 0; i < grid.n; ++i) rows.push_back(csv_row({grid.xi(i), pr.wp.phi[i]}));
    em.csv("profile.csv", "xi,phi", rows);

    json summary;
    summary["c"] = pr.wp.c;
    summary["residual"] = pr.wp.residual;
    summary["crossings"] = pr.wp.crossings;
    summary["label"] = to_string(classify_profile(pr.wp, mp));
    summary["tail_lambda"] = pr.wp.tail_lambda;
    if (pr.critical) {
        summary["drift"] = pr.drift;
        summary["c_continuum"] = min_speed(mp).c_star;
    }
    write_json_file(em.dir() / "profile.json", summary, em);
    em.manifest()["spectral"] = spectral_json(spectral_profile(mp));
    em.manifest()["profile"] = summary;
    clock.mark("output");
    return 0;
}

// Map a requested explicit dt onto the cfl knob of the solver factories: the
// factories compute dt = cfl * min(dx^2/2D, dx/|adv|) rounded down to divide r,
// so a dt that already divides r round-trips exactly.
double cfl_for_dt(double dt, const Grid1D& grid, double D, double adv, double r) {
    if (r > 0.0) {
        const double md = r / dt;
        if (std::abs(md - std::lround(md)) > 1e-9 * std::max(1.0, md))
            throw ConfigError("dt must divide r exactly");
    }
    double base = grid.dx * grid.dx / (2.0 * D);
    if (adv != 0.0) base = std::min(base, grid.dx / std::abs(adv));
    const double cfl = dt / base;
    if (cfl > 0.9) throw ConfigError("dt exceeds the explicit stability limit");
    return cfl;
}

int cmd_evolve(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const ModelParams mp = cfg.model();
    const Grid1D grid(cfg.L, cfg.n);

    // profile needed for every moving-frame form; it must outlive the solver,
    // whose reaction closure holds it by reference
    ProfileResult pr;
    ProfileOnGrid prof{Grid1D(1.0, 3), std::vector<double>(3, 0.0), 0.0, 0.0};
    std::function<double(double)> u0;
    if (cfg.form == "lab") {
        // lab-frame initial datum from the perturbation library (flat profile)
        u0 = make_perturbation(cfg.perturbation(), mp, prof, grid.L);
    } else {
        pr = compute_profile_for(cfg, mp, grid);
        prof = to_profile_on_grid(pr.wp, mp);
        u0 = make_perturbation(cfg.perturbation(), mp, prof, grid.L);
    }
    clock.mark("relaxation");

    const WaveSpec& ws = pr.ws_used;
    const double lam = ws.lambda;
    auto hist_u = [&u0](double, double x) { return u0(x); };
    auto hist_t = [&u0, lam](double, double x) {
        return u0(x) * std::exp(std::min(-lam * x, 700.0));
    };
    auto hist_p = [&hist_t](double s, double x) { return std::abs(hist_t(s, x)); };

    auto cfl_of = [&](double adv) {
        return cfg.dt ? cfl_for_dt(*cfg.dt, grid, mp.D, adv, mp.r) : cfg.cfl;
    };
    std::optional<DelayedFieldSolver> solver;
    if (cfg.form == "lab") {
        solver.emplace(make_lab_solver(mp, grid, hist_u, cfl_of(0.0)));
    } else if (cfg.form == "perturbation") {
        solver.emplace(make_perturbation_solver(ws, mp, prof, grid, hist_u, cfl_of(ws.c)));
    } else if (cfg.form == "antiweighted") {
        const AntiweightCoefficients co(ws, mp);
        solver.emplace(make_antiweighted_solver(ws, mp, prof, grid, hist_t, cfl_of(co.a0)));
    } else {  // comparison
        const AntiweightCoefficients co(ws, mp);
        solver.emplace(make_comparison_solver(ws, mp, grid, hist_p, cfl_of(co.a0)));
    }
    if (cfg.dt && std::abs(solver->dt() - *cfg.dt) > 1e-12 * *cfg.dt)
        throw ConfigError("dt could not be honored by the solver");

    const double dt = solver->dt();
    const long stride = std::max<long>(1, std::lround(cfg.sample_dt / dt));
    const long snap_every = stride * cfg.snap_stride;
    const long n_steps = std::lround(std::ceil(cfg.t_end / dt - 1e-12));
    std::vector<std::string> rows;
    auto snapshot = [&]() {
        const auto& u = solver->state();
        for (int i = 0; i < grid.n; ++i)
            rows.push_back(csv_row({solver->t(), grid.xi(i), u[i]}));
    };
    snapshot();
    for (long s = 0; s < n_steps; ++s) {
        solver->step();
        if ((s + 1) % snap_every == 0 || s + 1 == n_steps) snapshot();
    }
    clock.mark("evolution");
    em.csv("snapshots.csv", "t,xi,value", rows);

    json meta;
    meta["form"] = cfg.form;
    meta["dt"] = dt;
    meta["n_steps"] = n_steps;
    if (cfg.form != "lab") {
        meta["c"] = ws.c;
        meta["lambda"] = ws.lambda;
        meta["profile_residual"] = pr.wp.residual;
        if (pr.critical) meta["profile_drift"] = pr.drift;
    }
    write_json_file(em.dir() / "evolve.json", meta, em);
    em.manifest()["evolve"] = meta;
    em.manifest()["tolerances"]["cfl"] = cfg.cfl;
    clock.mark("output");
    return 0;
}

int cmd_delayed_exp(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const DelayedExpParams pe{cfg.k_bar, cfg.r};
    std::vector<std::string> rows;
    const long n = std::lround(std::ceil(cfg.t_end / cfg.sample_dt - 1e-12));
    for (long i = 0; i <= n; ++i) {
        const double t = std::min(i * cfg.sample_dt, cfg.t_end);
        rows.push_back(csv_row({t, delayed_exp(pe, t)}));
    }
    em.csv("delayed_exp.csv", "t,E", rows);
    em.manifest()["delayed_exp"] = {{"k_bar", cfg.k_bar}, {"r", cfg.r}};
    clock.mark("evaluation");
    return 0;
}

int cmd_farfield(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const ModelParams mp = cfg.model();
    const double amp = cfg.amplitude;
    const double dt = cfg.dt.value_or(std::min(cfg.sample_dt, mp.r > 0.0 ? mp.r / 10.0 : 0.01));
    const auto series = farfield_ode(mp, [amp](double) { return amp; }, cfg.t_end, dt);
    clock.mark("integration");

    const long stride = std::max<long>(1, std::lround(cfg.sample_dt / series.dt));
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < series.t.size(); i += stride)
        rows.push_back(csv_row({series.t[i], series.z[i]}));
    em.csv("farfield.csv", "t,z", rows);
    em.manifest()["farfield"] = {{"dt", series.dt},
                                 {"z0", amp},
                                 {"control_rate", farfield_control_rate(mp)}};
    clock.mark("output");
    return 0;
}

int cmd_linear_decay(const RunConfig& cfg, Emitter& em) {
    StageClock clock(em);
    const ModelParams mp = cfg.model();
    const WaveSpec ws = cfg.wave(mp);
    const PeriodicGrid pg(cfg.L, cfg.n);

    // explicit RK4 per mode: step inside the stability disc of the stiffest mode
    double dt;
    if (cfg.dt) {
        dt = *cfg.dt;
        if (mp.r > 0.0) {
            const double md = mp.r / dt;
            if (std::abs(md - std::lround(md)) > 1e-9 * std::max(1.0, md))
                throw ConfigError("dt must divide r exactly");
        }
    } else {
        const AntiweightCoefficients co(ws, mp);
        const double eta_max = M_PI * (pg.n / 2) / pg.L;
        const double stiff = mp.D * eta_max * eta_max + co.a1 + mp.p * co.k_delay;
        dt = 1.0 / stiff;
        if (mp.r > 0.0) dt = mp.r / std::max<long>(1, std::lround(std::ceil(mp.r / dt)));
    }

    const double A = cfg.amplitude, x0 = cfg.center, w = cfg.width;
    auto u0 = [A, x0, w](double, double x) {
        return A * std::exp(-(x - x0) * (x - x0) / (w * w));
    };
    const long stride = std::max<long>(1, std::lround(cfg.sample_dt / dt));
    const auto series =
        evolve_spectral(ws, mp, SpectralSolver::Config{pg, dt}, u0, cfg.t_end, stride);
    clock.mark("evolution");

    std::vector<std::string> rows;
    for (std::size_t i = 0; i < series.t.size(); ++i)
        rows.push_back(csv_row({series.t[i], series.sup[i]}));
    em.csv("decay.csv", "t,sup", rows);

    const FitWindow window =
        (cfg.fit_t_hi > 0.0)
            ? FitWindow{cfg.fit_t_lo, cfg.fit_t_hi}
            : FitWindow{std::max(10.0 * mp.r, 20.0) - cfg.sample_dt, cfg.t_end};
    const auto rep = measure_linear_decay(series.t, series.sup, ws, mp, window);
    json summary;
    summary["fit"] = ratefit_json(rep.fit);
    summary["mu0"] = rep.mu0;
    summary["mu_ratio"] = rep.mu_ratio;
    summary["decaying"] = rep.decaying;
    summary["dt"] = dt;
    summary["warnings"] = series.warnings;
    write_json_file(em.dir() / "decay.json", summary, em);
    em.manifest()["linear_decay"] = summary;
    clock.mark("fit");
    return 0;
}

int cmd_stability(const RunConfig& cfg, Emitter& em, bool quiet = false) {
    StageClock clock(em);
    const ExperimentSpec spec = cfg.experiment();
    const StabilityReport rep = run_stability(spec);
    clock.mark("experiment");

    const auto& s = rep.series;
    std::vector<std::string> rows;
    rows.reserve(s.t.size());
    for (std::size_t i = 0; i < s.t.size(); ++i)
        rows.push_back(csv_row({s.t[i], s.sup_u[i], s.sup_u_near[i], s.sup_u_far[i],
                                s.sup_utilde[i], s.sup_uplus[i]}));
    em.csv("stability_series.csv", "t,sup_u,sup_u_near,sup_u_far,sup_utilde,sup_uplus", rows);

    json summary;
    summary["c_requested"] = rep.c_requested;
    summary["c_used"] = rep.ws_used.c;
    summary["lambda"] = rep.ws_used.lambda;
    summary["critical"] = rep.critical;
    summary["profile_residual"] = rep.profile.residual;
    summary["profile_drift"] = rep.profile_drift;
    summary["x0"] = rep.x0;
    summary["mu0"] = rep.mu0;
    summary["theory_mu_bound"] = rep.theory_mu_bound;
    summary["noise_floor"] = rep.noise_floor;
    summary["primary_fitted"] = rep.primary_fitted;
    if (rep.primary_fitted) summary["fit"] = ratefit_json(rep.fit);
    if (rep.mixed_guard) summary["mixed_guard"] = ratefit_json(*rep.mixed_guard);
    summary["far_zone"] = {{"fitted", rep.far_zone.fitted},
                           {"fit", ratefit_json(rep.far_zone.fit)},
                           {"pass", rep.far_zone.pass},
                           {"note", rep.far_zone.note}};
    summary["near_zone"] = {{"fitted", rep.near_zone.fitted},
                            {"fit", ratefit_json(rep.near_zone.fit)},
                            {"pass", rep.near_zone.pass},
                            {"note", rep.near_zone.note}};
    summary["bounded"] = {{"min_gap", rep.bounded.min_gap},
                          {"t_at", rep.bounded.t_at},
                          {"xi_at", rep.bounded.xi_at},
                          {"pass", rep.bounded.pass}};
    summary["startup_min_gap"] = rep.startup_min_gap;
    summary["transfer_violation"] = rep.transfer_violation;
    summary["decaying"] = rep.decaying;
    write_json_file(em.dir() / "stability.json", summary, em);
    em.manifest()["stability"] = summary;

    struct Criterion {
        const char* name;
        bool pass;
        bool applies;
    };
    const std::vector<Criterion> criteria{
        {"primary-rate", rep.primary_pass, true},
        {"boundedness", rep.bounded.pass, true},
        {"transfer", rep.transfer_violation <= 1e-8, true},
        {"far-zone", rep.far_zone.pass, true},
        {"near-zone", rep.near_zone.pass, true},
        {"mixed-guard", rep.mixed_guard_pass, rep.critical},
    };
    bool all_pass = true;
    json jc;
    for (const auto& cr : criteria) {
        if (!cr.applies) continue;
        jc[cr.name] = cr.pass ? "PASS" : "FAIL";
        if (!cr.pass) all_pass = false;
        if (!quiet)
            std::cout << (cr.pass ? "PASS " : "FAIL ") << cr.name << '\n';
    }
    em.manifest()["criteria"] = jc;
    em.manifest()["tolerances"] = {{"deriv_tol", cfg.deriv_tol},
                                   {"cfl", cfg.cfl},
                                   {"boundedness_tol", 1e-8},
                                   {"noise_floor", rep.noise_floor}};
    clock.mark("output");
    return all_pass ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, Emitter& em, unsigned long long seed, int parallel) {
    // comma-separated wave speeds, each "critical" or an explicit c
    std::vector<std::string> entries;
    {
        std::stringstream ss(cfg.sweep_c);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = blowfly::detail::trim(item);
            if (!item.empty()) entries.push_back(item);
        }
    }
    if (entries.empty()) throw ConfigError("sweep_c is empty");

    // validate all entries before launching anything
    std::vector<RunConfig> runs;
    const ModelParams mp = cfg.model();
    for (const auto& e : entries) {
        RunConfig rc = cfg;
        if (e == "critical") {
            rc.critical = true;
        } else {
            rc.critical = false;
            rc.c = blowfly::detail::parse_number(e, 0, "sweep_c");
            if (mp.p > mp.delta && rc.c < min_speed(mp).c_star * (1.0 - 1e-12))
                throw ConfigError("sweep_c entry below critical speed: " + e);
        }
        runs.push_back(std::move(rc));
    }

    struct Result {
        int code = 3;
        std::string error;
    };
    std::vector<Result> results(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            try {
                Emitter sub(em.dir() / ("run_" + std::to_string(i)));
                seed_manifest(sub, "stability", runs[i], seed);
                results[i].code = cmd_stability(runs[i], sub, /*quiet=*/true);
                sub.finish();
            } catch (const ConfigError& e) {
                results[i] = {2, e.what()};
            } catch (const std::exception& e) {
                results[i] = {3, e.what()};
            }
        }
    };
    const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(runs.size())));
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    int rc = 0;
    json jr = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        json one;
        one["dir"] = "run_" + std::to_string(i);
        one["c"] = runs[i].critical ? json("critical") : json(runs[i].c);
        one["exit"] = results[i].code;
        if (!results[i].error.empty()) one["error"] = results[i].error;
        jr.push_back(one);
        std::cout << (results[i].code == 0 ? "PASS " : "FAIL ") << "run_" << i
                  << " c=" << entries[i];
        if (!results[i].error.empty()) std::cout << " (" << results[i].error << ")";
        std::cout << '\n';
        rc = std::max(rc, results[i].code);
    }
    em.manifest()["sweep"] = jr;
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the delayed reaction-diffusion model"};
    app.require_subcommand(1);

    const std::vector<std::string> names{"speeds",      "profile",  "evolve",
                                         "delayed-exp", "farfield", "linear-decay",
                                         "stability",   "sweep"};
    std::string config_path, out_dir = ".";
    unsigned long long seed = 0;
    int parallel = 1;
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "path to the run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (default: cwd)");
        sub->add_option("--seed", seed, "seed recorded for reproducibility");
        sub->add_option("--parallel", parallel, "parallel runs for sweep");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("BLOWFLY_OUT")) out_dir = env;

    try {
        const RunConfig cfg = parse_config(config_path);
        Emitter em{fs::path(out_dir)};
        seed_manifest(em, cmd, cfg, seed);
        int rc = 0;
        if (cmd == "speeds") rc = cmd_speeds(cfg, em);
        else if (cmd == "profile") rc = cmd_profile(cfg, em);
        else if (cmd == "evolve") rc = cmd_evolve(cfg, em);
        else if (cmd == "delayed-exp") rc = cmd_delayed_exp(cfg, em);
        else if (cmd == "farfield") rc = cmd_farfield(cfg, em);
        else if (cmd == "linear-decay") rc = cmd_linear_decay(cfg, em);
        else if (cmd == "stability") rc = cmd_stability(cfg, em);
        else rc = cmd_sweep(cfg, em, seed, parallel);
        em.finish();
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const RegimeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
