#include "doctest.h"

#include <cmath>
#include <vector>

#include "blowfly/waves.hpp"

using namespace blowfly;

TEST_CASE("profile residual vanishes on the constant equilibria") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    const double vp = equilibria(mp).v_plus;
    Grid1D g(20.0, 201);
    for (double v : {0.0, vp}) {
        WaveProfile wp{g, std::vector<double>(g.n, v), 3.0, 0.0, 0};
        CHECK(profile_residual(wp, mp) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("classify_profile on constructed data") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.0);
    const double vp = equilibria(mp).v_plus;
    Grid1D g(30.0, 601);
    {
        std::vector<double> phi(g.n);
        for (int i = 0; i < g.n; ++i) phi[i] = vp / (1.0 + std::exp(-g.xi(i)));
        WaveProfile wp{g, phi, 3.0, 0.0, 0};
        CHECK(classify_profile(wp, mp) == ProfileLabel::Monotone);
    }
    {
        std::vector<double> phi(g.n);
        for (int i = 0; i < g.n; ++i) {
            const double x = g.xi(i);
            phi[i] = (x < 0.0) ? vp * std::exp(x)
                               : vp + 0.3 * vp * std::exp(-0.4 * x) * std::sin(2.0 * x);
        }
        WaveProfile wp{g, phi, 3.0, 0.0, 0};
        CHECK(classify_profile(wp, mp) == ProfileLabel::Oscillatory);
    }
}

TEST_CASE("KPP control: r = 0 critical profile is monotone with small residual") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.0);
    auto ws = critical_wave_spec(mp);
    Grid1D g(40.0, 801);
    auto wp = compute_profile(ws, mp, g, 1500.0, 1e-7);
    CHECK(wp.residual < 1e-6);
    CHECK(wp.crossings == 0);
    CHECK(classify_profile(wp, mp) == ProfileLabel::Monotone);
    const double vp = equilibria(mp).v_plus;
    // at the critical speed the front parks against the left cutoff (wall mode)
    CHECK(wp.tail_lambda == 0.0);
    CHECK(std::abs(wp.phi[0]) < 1e-6);
    CHECK(std::abs(wp.phi[g.n - 1] - vp) < 1e-6 * vp);
}

TEST_CASE("supercritical monotone profile: fixed point and tail slope") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
    REQUIRE(classify_regime(mp, ws.c) == RegimeLabel::Monotone);
    Grid1D g(50.0, 1001);
    auto wp = compute_profile(ws, mp, g, 1500.0);
    CHECK(wp.residual < 1e-6);
    CHECK(classify_profile(wp, mp) == ProfileLabel::Monotone);

    auto [l1, l2] = lambda_pair(mp, ws.c);
    const double slope = tail_slope(wp, mp);
    CHECK(slope > 0.8 * l1);
    CHECK(slope < 1.2 * l2);

    // feeding the converged profile back as steady data drifts no faster than
    // its own residual allows
    auto prof = to_profile_on_grid(wp, mp);
    auto solver = make_perturbation_solver(ws, mp, prof, g,
                                           [](double, double) { return 0.0; });
    const double t_end = 5.0;
    run_solver(solver, t_end, 1000000, [](double, const std::vector<double>&) {});
    double drift = 0.0;
    for (double u : solver.state()) drift = std::max(drift, std::abs(u));
    CHECK(drift < 10.0 * std::max(wp.residual, 1e-8) * t_end);
}

TEST_CASE("oscillatory regime: profile rings around v_plus") {
    ModelParams mp(1, 1, std::exp(3.0), 1, 1.0);
    auto thr = delay_thresholds(mp);
    REQUIRE(thr.r_under.has_value());
    REQUIRE(mp.r > *thr.r_under);
    REQUIRE(mp.r < thr.r_bar);
    auto ws = make_wave_spec(mp, 1.1 * min_speed(mp).c_star, {});
    REQUIRE(classify_regime(mp, ws.c) == RegimeLabel::Oscillatory);
    Grid1D g(60.0, 1201);
    auto wp = compute_profile(ws, mp, g, 1500.0);
    CHECK(wp.crossings >= 2);
    CHECK(classify_profile(wp, mp) == ProfileLabel::Oscillatory);
}

TEST_CASE("profile label agrees with the regime classifier across samples") {
    struct Cell {
        double p, r, c_factor;
    };
    const std::vector<Cell> cells{
        {std::exp(1.5), 0.2, 1.15},  // intermediate, r < r_under
        {std::exp(3.0), 0.1, 1.1},   // large, r < r_under
        {std::exp(3.0), 0.9, 1.2},   // large, oscillatory band
    };
    for (const auto& cell : cells) {
        ModelParams mp(1, 1, cell.p, 1, cell.r);
        auto ws = make_wave_spec(mp, cell.c_factor * min_speed(mp).c_star, {});
        const auto regime = classify_regime(mp, ws.c);
        REQUIRE(regime != RegimeLabel::NoWave);
        Grid1D g(60.0, 1201);
        auto wp = compute_profile(ws, mp, g, 1500.0);
        const auto label = classify_profile(wp, mp);
        if (label == ProfileLabel::Ambiguous) continue;
        if (regime == RegimeLabel::Monotone) CHECK(label == ProfileLabel::Monotone);
        if (regime == RegimeLabel::Oscillatory) CHECK(label == ProfileLabel::Oscillatory);
    }
}

TEST_CASE("no-wave regime refuses profile computation") {
    ModelParams mp(1, 1, std::exp(3.0), 1, 1.5);
    auto thr = delay_thresholds(mp);
    REQUIRE(mp.r > thr.r_bar);
    auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
    Grid1D g(40.0, 401);
    CHECK_THROWS_AS(compute_profile(ws, mp, g, 50.0), RegimeError);
}
