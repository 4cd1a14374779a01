#include "doctest.h"

#include <cmath>
#include <vector>

#include "blowfly/pde.hpp"

using namespace blowfly;

namespace {

ProfileOnGrid sample_profile(const Grid1D& g, double v_plus) {
    ProfileOnGrid p{g, std::vector<double>(g.n), 0.0, v_plus};
    for (int i = 0; i < g.n; ++i) p.phi[i] = v_plus / (1.0 + std::exp(-g.xi(i)));
    return p;
}

} // namespace

TEST_CASE("lab solver: equilibria are fixed points") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    Grid1D g(10.0, 101);
    for (double v0 : {0.0, vp}) {
        auto solver = make_lab_solver(mp, g, [v0](double, double) { return v0; });
        run_solver(solver, 2.0, 1000, [](double, const std::vector<double>&) {});
        for (double u : solver.state()) CHECK(u == doctest::Approx(v0).epsilon(1e-13));
    }
}

TEST_CASE("lab solver: spatially constant data follows the scalar recursion") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double v0 = 0.3;
    Grid1D g(15.0, 301);
    auto solver = make_lab_solver(mp, g, [v0](double, double) { return v0; });
    const double dt = solver.dt();
    const long m = std::lround(mp.r / dt);
    // forward-Euler delayed recursion, identical in exact arithmetic away from
    // the boundaries
    std::vector<double> z(m + 1, v0);
    const long n_steps = std::lround(std::ceil(2.0 / dt - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        const double zc = z.back();
        const double zd = z[z.size() - 1 - m];
        z.push_back(zc + dt * (-mp.delta * zc + birth(zd, mp)));
    }
    run_solver(solver, 2.0, 1000000, [](double, const std::vector<double>&) {});
    const double mid = solver.state()[g.n / 2];
    CHECK(mid == doctest::Approx(z.back()).epsilon(1e-10));
}

TEST_CASE("lab solver: nonnegative data stays nonnegative") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    Grid1D g(10.0, 201);
    auto bump = [](double, double x) { return 2.0 * std::exp(-x * x); };
    auto solver = make_lab_solver(mp, g, bump);
    auto series = collect_series(solver, 3.0, 10);
    for (double mn : series.min_val) CHECK(mn >= 0.0);
}

TEST_CASE("solver config validation") {
    Grid1D g(5.0, 51);
    DelayedFieldSolver::Config cfg{g, 1.0};
    cfg.reaction = [](double, double, double) { return 0.0; };
    cfg.r = 1.0;
    cfg.dt = 0.3;
    CHECK_THROWS_AS(DelayedFieldSolver(cfg, [](double, double) { return 0.0; }),
                    ConfigError);
    cfg.dt = 0.0;
    CHECK_THROWS_AS(DelayedFieldSolver(cfg, [](double, double) { return 0.0; }),
                    ConfigError);
}

TEST_CASE("perturbation solver: second-order self convergence") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.5, {});
    auto u0 = [](double, double x) { return 0.2 * std::exp(-x * x); };

    std::vector<std::vector<double>> runs;
    std::vector<Grid1D> grids;
    for (int n : {201, 401, 801}) {
        Grid1D g(20.0, n);
        auto prof = sample_profile(g, vp);
        auto solver = make_perturbation_solver(ws, mp, prof, g, u0);
        run_solver(solver, 1.0, 1000000, [](double, const std::vector<double>&) {});
        runs.push_back(solver.state());
        grids.push_back(g);
    }
    auto err = [&](int a, int b) {
        const int stride = (grids[b].n - 1) / (grids[a].n - 1);
        double e = 0.0;
        for (int i = 0; i < grids[a].n; ++i)
            e = std::max(e, std::abs(runs[a][i] - runs[b][i * stride]));
        return e;
    };
    const double e12 = err(0, 1), e23 = err(1, 2);
    CHECK(e23 < e12);
    CHECK(e12 / e23 > 2.5);
    CHECK(e12 / e23 < 7.0);
}

TEST_CASE("perturbation solver vs heat-kernel Duhamel oracle on first window") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    const double c = 3.0;
    WaveSpec ws{c, 1.0, false};
    Grid1D g(20.0, 201);
    auto prof = sample_profile(g, vp);
    auto u0 = [](double, double x) { return 0.2 * std::exp(-x * x); };

    DelayedFieldSolver::Config cfg{g, mp.D};
    cfg.adv = c;
    cfg.r = mp.r;
    cfg.shift = c * mp.r;
    cfg.dt = stable_dt(g, mp.D, c, mp.r);
    cfg.reaction = [&mp, &prof, c](double u, double udel, double xi) {
        const double ph = prof(xi - c * mp.r);
        return -mp.delta * u + birth(std::max(ph + udel, 0.0), mp) - birth(ph, mp);
    };
    DelayedFieldSolver solver(cfg, u0);
    run_solver(solver, mp.r, 1000000, [](double, const std::vector<double>&) {});

    auto P = [&](double s, double x) {
        const double ph = prof(x);
        return birth(std::max(ph + u0(s, x), 0.0), mp) - birth(ph, mp);
    };
    auto oracle = heat_kernel_step(mp, c, g, u0, P, mp.r);
    double err = 0.0;
    // skip the outermost cells, where the oracle integrates over the profile
    // clamp region
    for (int i = 5; i < g.n - 5; ++i)
        err = std::max(err, std::abs(solver.state()[i] - oracle[i]));
    CHECK(err < 5.0 * g.dx * g.dx);
}

TEST_CASE("antiweight coefficients: characteristic consistency") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto wsc = critical_wave_spec(mp);
    AntiweightCoefficients cc(wsc, mp);
    CHECK(cc.a1 == doctest::Approx(mp.p * cc.k_delay).epsilon(1e-8));
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.4, {});
    AntiweightCoefficients co(ws, mp);
    CHECK(co.a1 > mp.p * std::exp(-ws.lambda * ws.c * mp.r));
    // lambda outside the admissible pair violates the off-critical inequality
    WaveSpec bad{ws.c, 25.0, false};
    CHECK_THROWS_AS(AntiweightCoefficients(bad, mp), PreconditionError);
}

TEST_CASE("antiweighted solver agrees with weighted perturbation run") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    auto ws = critical_wave_spec(mp);
    Grid1D g(20.0, 401);
    auto prof = sample_profile(g, vp);
    auto u0 = [](double, double x) { return 0.1 * std::exp(-x * x); };
    auto u0t = [&ws, u0](double s, double x) { return std::exp(-ws.lambda * x) * u0(s, x); };

    auto pert = make_perturbation_solver(ws, mp, prof, g, u0);
    auto anti = make_antiweighted_solver(ws, mp, prof, g, u0t);
    run_solver(pert, 1.0, 1000000, [](double, const std::vector<double>&) {});
    run_solver(anti, 1.0, 1000000, [](double, const std::vector<double>&) {});

    double err = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double xi = g.xi(i);
        if (std::abs(xi) > 5.0) continue;
        err = std::max(err, std::abs(pert.state()[i] -
                                     std::exp(ws.lambda * xi) * anti.state()[i]));
    }
    CHECK(err < 5.0 * g.dx * g.dx);
}

TEST_CASE("comparison equation dominates the antiweighted field") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    auto ws = critical_wave_spec(mp);
    Grid1D g(20.0, 401);
    auto prof = sample_profile(g, vp);
    auto u0 = [](double, double x) { return 0.1 * std::exp(-x * x); };
    auto u0t = [&ws, u0](double s, double x) { return std::exp(-ws.lambda * x) * u0(s, x); };
    auto u0p = [u0t](double s, double x) { return 2.0 * std::abs(u0t(s, x)); };

    auto anti = make_antiweighted_solver(ws, mp, prof, g, u0t);
    auto comp = make_comparison_solver(ws, mp, g, u0p);
    auto rep = check_boundedness(anti, comp, 5.0);
    CHECK(rep.pass);
    CHECK(rep.min_gap >= -1e-8);
}

TEST_CASE("delayed shift decomposition: integer shift is exact") {
    // pure transport read: field frozen by zero reaction, compare delayed read
    Grid1D g(10.0, 201);
    DelayedFieldSolver::Config cfg{g, 1e-12};
    cfg.r = 0.5;
    cfg.shift = 4.0 * g.dx;
    cfg.dt = 0.1;
    cfg.reaction = [](double, double udel, double) { return udel; };
    auto hist = [](double, double x) { return std::sin(x); };
    DelayedFieldSolver s(cfg, hist);
    s.step();
    // after one step u = u0 + dt * u0(x - shift), diffusion negligible
    for (int i = 20; i < g.n - 20; ++i) {
        const double x = g.xi(i);
        const double expect = std::sin(x) + cfg.dt * std::sin(x - cfg.shift);
        CHECK(s.state()[i] == doctest::Approx(expect).epsilon(1e-9));
    }
}
