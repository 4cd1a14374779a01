#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "blowfly/lindelay.hpp"

using namespace blowfly;

TEST_CASE("fft: roundtrip and known transform") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(64);
    for (auto& v : x) v = u(rng);
    auto spec = fft_of_real(x);
    auto back = real_of_ifft(spec);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
    // delta at j0 transforms to pure phases of modulus 1
    std::vector<double> d(16, 0.0);
    d[3] = 1.0;
    for (const auto& z : fft_of_real(d)) CHECK(std::abs(z) == doctest::Approx(1.0));
}

TEST_CASE("mode symbols: criticality dichotomy and symmetry") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto wsc = critical_wave_spec(mp);
    {
        auto s = mode_coefficients(wsc, mp, 0.0);
        CHECK(s.A.imag() == 0.0);
        CHECK(mode_gap(s) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
        auto s1 = mode_coefficients(wsc, mp, 1.0);
        CHECK(s1.A.imag() ==
              doctest::Approx(wsc.c - 2.0 * mp.D * wsc.lambda).epsilon(1e-12));
    }
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.6, {});
    const AntiweightCoefficients co(ws, mp);
    const double mu0 = co.a1 - mp.p * co.k_delay;
    CHECK(mu0 > 0.0);
    for (double eta : {0.0, 0.7, 2.3, -1.9}) {
        auto s = mode_coefficients(ws, mp, eta);
        CHECK(std::abs(s.B) == doctest::Approx(mp.p * co.k_delay).epsilon(1e-13));
        CHECK(mode_gap(s) == doctest::Approx(mp.D * eta * eta + mu0).epsilon(1e-12));
        auto sm = mode_coefficients(ws, mp, -eta);
        CHECK(sm.A == std::conj(s.A));
        CHECK(std::abs(sm.B - std::conj(s.B)) < 1e-14);
    }
}

TEST_CASE("delay off: drifting decaying Gaussian closed form") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.5, {});
    const AntiweightCoefficients co(ws, mp);
    PeriodicGrid g(40.0, 512);
    const double tau0 = 1.0;
    auto u0 = [&](double, double x) { return std::exp(-x * x / (4.0 * mp.D * tau0)); };
    SpectralSolver::Config cfg{g, 0.0, true};
    cfg.dt = mp.r / std::lround(mp.r / (0.4 * g.dx * g.dx / (2.0 * mp.D)));
    const double t_end = 2.0;
    auto series = evolve_spectral(ws, mp, cfg, u0, t_end, 1000000);
    const double tf = series.t.back();
    double err = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double x = g.xi(i);
        const double exact = std::sqrt(tau0 / (tau0 + tf)) *
                             std::exp(-(x - co.a0 * tf) * (x - co.a0 * tf) /
                                      (4.0 * mp.D * (tau0 + tf))) *
                             std::exp(-co.a1 * tf);
        err = std::max(err, std::abs(series.final_field[i] - exact));
    }
    CHECK(err < 1e-6);
}

TEST_CASE("constant-in-space data reduces to the scalar mode-0 DDE") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.5, {});
    const AntiweightCoefficients co(ws, mp);
    PeriodicGrid g(20.0, 64);
    auto u0 = [](double s, double) { return 1.0 + 0.3 * s; };
    const double dt = mp.r / 200;
    SpectralSolver::Config cfg{g, dt};
    auto series = evolve_spectral(ws, mp, cfg, u0, 4.0, 1000000);
    const double k = mp.p * co.k_delay;
    auto rhs = [&](double, double z, double zd) { return -co.a1 * z + k * zd; };
    auto oracle = integrate_dde_steps(rhs, [](double s) { return 1.0 + 0.3 * s; }, mp.r,
                                      4.0, dt);
    for (int i = 0; i < g.n; ++i)
        CHECK(std::abs(series.final_field[i] - oracle.z.back()) < 1e-8);
}

TEST_CASE("superposition holds to 1e-10") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = critical_wave_spec(mp);
    PeriodicGrid g(30.0, 256);
    auto f = [](double s, double x) { return std::exp(-x * x) * (1.0 + 0.1 * s); };
    auto gfun = [](double, double x) { return std::exp(-(x - 2.0) * (x - 2.0) / 2.0); };
    auto combo = [&](double s, double x) { return 0.7 * f(s, x) - 1.3 * gfun(s, x); };
    SpectralSolver::Config cfg{g, mp.r / 50};
    auto sf = evolve_spectral(ws, mp, cfg, f, 2.0, 1000000);
    auto sg = evolve_spectral(ws, mp, cfg, gfun, 2.0, 1000000);
    auto sc = evolve_spectral(ws, mp, cfg, combo, 2.0, 1000000);
    for (int i = 0; i < g.n; ++i) {
        const double lin = 0.7 * sf.final_field[i] - 1.3 * sg.final_field[i];
        CHECK(std::abs(sc.final_field[i] - lin) < 1e-10);
    }
}

TEST_CASE("spectral vs finite-difference solve of the comparison equation") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = critical_wave_spec(mp);
    auto u0 = [](double, double x) { return std::exp(-x * x); };
    const double t_end = 1.0;
    double gaps[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        const int nsp = 256 << lvl;
        PeriodicGrid pg(20.0, nsp);
        Grid1D fg(20.0, nsp + 1);
        REQUIRE(std::abs(pg.dx - fg.dx) < 1e-14);
        const AntiweightCoefficients co(ws, mp);
        const double dt = stable_dt(fg, mp.D, co.a0, mp.r);
        auto fd = make_comparison_solver(ws, mp, fg, u0);
        REQUIRE(std::abs(fd.dt() - dt) < 1e-15);
        run_solver(fd, t_end, 1000000, [](double, const std::vector<double>&) {});
        SpectralSolver::Config cfg{pg, dt};
        auto sp = evolve_spectral(ws, mp, cfg, u0, t_end, 1000000);
        double gap = 0.0;
        for (int i = 0; i < nsp; ++i)
            gap = std::max(gap, std::abs(sp.final_field[i] - fd.state()[i]));
        gaps[lvl] = gap;
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[0] / gaps[1] > 2.5);
    CHECK(gaps[0] / gaps[1] < 7.0);
}

TEST_CASE("positivity transfer from nonnegative history") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = critical_wave_spec(mp);
    PeriodicGrid g(30.0, 256);
    auto u0 = [](double, double x) { return std::exp(-x * x / 4.0); };
    SpectralSolver::Config cfg{g, mp.r / 100};
    auto series = evolve_spectral(ws, mp, cfg, u0, 5.0, 10);
    for (double mn : series.min_val) CHECK(mn >= -1e-8);
}

TEST_CASE("closed-form spot check of the per-mode formula") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto ws = make_wave_spec(mp, min_speed(mp).c_star + 0.5, {});
    PeriodicGrid g(40.0, 256);
    auto rep = spectral_spot_check(ws, mp, g, mp.r / 400, 3.0);
    CHECK(rep.samples == 10);
    CHECK(rep.max_error < 1e-8);
}

TEST_CASE("linear decay rates: critical algebraic, supercritical exponential") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    auto u0 = [](double, double x) { return std::exp(-x * x / 4.0); };
    const FitWindow window{20.0, 250.0};
    {
        auto ws = critical_wave_spec(mp);
        PeriodicGrid g(250.0, 1024);
        SpectralSolver::Config cfg{g, 0.0};
        cfg.dt = mp.r / std::lround(mp.r / (0.4 * g.dx * g.dx / (2.0 * mp.D)));
        auto series = evolve_spectral(ws, mp, cfg, u0, 250.0, 50);
        auto rep = measure_linear_decay(series.t, series.sup, ws, mp, window);
        CHECK(rep.decaying);
        CHECK(rep.fit.alg_exponent > -0.65);
        CHECK(rep.fit.alg_exponent < -0.35);
    }
    {
        auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
        PeriodicGrid g(220.0, 1024);
        SpectralSolver::Config cfg{g, 0.0};
        cfg.dt = mp.r / std::lround(mp.r / (0.4 * g.dx * g.dx / (2.0 * mp.D)));
        auto series = evolve_spectral(ws, mp, cfg, u0, 120.0, 50);
        auto rep = measure_linear_decay(series.t, series.sup, ws, mp, {20.0, 120.0});
        CHECK(rep.decaying);
        CHECK(rep.fit.exp_rate > 0.0);
        CHECK(rep.fit.r_squared >= 0.99);
        CHECK(rep.mu0 > 0.0);
    }
}
