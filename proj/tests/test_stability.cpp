#include "doctest.h"

#include <cmath>

#include "blowfly/stability.hpp"

using namespace blowfly;

TEST_CASE("farfield control rate matches the analytic linearization") {
    // b'(v_plus) = delta (1 - ln(p/delta)); for p/delta = e^2 the control rate
    // delta - b'(v_plus) equals 2 delta
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.0);
    CHECK(farfield_control_rate(mp) == doctest::Approx(2.0).epsilon(1e-12));
    ModelParams mp2(1, 0.5, 0.5 * std::exp(3.0), 1, 0.0);
    CHECK(farfield_control_rate(mp2) == doctest::Approx(0.5 * 3.0).epsilon(1e-12));
}

TEST_CASE("perturbation library shapes") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    const double vp = equilibria(mp).v_plus;
    Grid1D g(40.0, 801);
    ProfileOnGrid prof{g, std::vector<double>(g.n), 0.0, vp};
    for (int i = 0; i < g.n; ++i) prof.phi[i] = vp / (1.0 + std::exp(-g.xi(i)));

    SUBCASE("compact bump") {
        Perturbation pb;
        pb.amplitude = 0.2;
        pb.width = 4.0;
        auto u0 = make_perturbation(pb, mp, prof, g.L);
        CHECK(u0(0.0) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(u0(4.0) == 0.0);
        CHECK(u0(-4.0) == 0.0);
        CHECK(u0(3.9) > 0.0);
    }
    SUBCASE("packet is sign-changing and compact") {
        Perturbation pp;
        pp.kind = PerturbationKind::Packet;
        pp.amplitude = 0.1;
        pp.width = 6.0;
        pp.wavenumber = 2.0;
        auto u0 = make_perturbation(pp, mp, prof, g.L);
        CHECK(u0(0.0) == doctest::Approx(0.1).epsilon(1e-12));
        bool pos = false, neg = false;
        for (double x = -6.0; x <= 6.0; x += 0.1) {
            if (u0(x) > 1e-6) pos = true;
            if (u0(x) < -1e-6) neg = true;
        }
        CHECK(pos);
        CHECK(neg);
        CHECK(u0(6.5) == 0.0);
    }
    SUBCASE("large bump peaks at v_plus") {
        Perturbation pl;
        pl.kind = PerturbationKind::LargeBump;
        auto u0 = make_perturbation(pl, mp, prof, g.L);
        CHECK(u0(0.0) == doctest::Approx(vp).epsilon(1e-12));
    }
    SUBCASE("shifted-profile difference vanishes left of the cutoff") {
        Perturbation ps;
        ps.kind = PerturbationKind::ShiftDiff;
        ps.amplitude = 1.0;
        ps.shift_h = 0.5;
        auto u0 = make_perturbation(ps, mp, prof, g.L);
        CHECK(u0(-g.L) == 0.0);
        CHECK(u0(-0.25 * g.L - 1.0) == 0.0);  // default cutoff at -L/4
        CHECK(std::abs(u0(0.0)) > 1e-3);      // difference alive near the front
        // right of the front both translates sit at v_plus
        CHECK(std::abs(u0(30.0)) < 1e-6);
    }
}

TEST_CASE("inadmissible perturbation is rejected") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
    ExperimentSpec spec{mp, ws, Grid1D(40.0, 401)};
    spec.pert.center = -40.0;  // bump straddling the left boundary
    spec.pert.width = 10.0;
    spec.relax_t = 400.0;
    spec.t_end = 1.0;
    CHECK_THROWS_AS(run_stability(spec), ConfigError);
}

TEST_CASE("no-wave regime is rejected") {
    ModelParams mp(1, 1, std::exp(3.0), 1, 1.5);
    WaveSpec ws{1.2 * min_speed(mp).c_star, 1.0, false};
    ExperimentSpec spec{mp, ws, Grid1D(40.0, 401)};
    CHECK_THROWS_AS(run_stability(spec), RegimeError);
}

TEST_CASE("discrete threshold speed sits just above the continuum c*") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 1.0);
    Grid1D g(40.0, 801);
    const auto dc = discrete_min_speed(mp, g.dx);
    CHECK(dc.c > dc.c_continuum);
    CHECK(dc.c < dc.c_continuum * 1.02);  // O(dx^2) offset stays small
    CHECK(dc.lambda > 0.5 * min_speed(mp).lambda_star);
    CHECK(dc.lambda < 1.5 * min_speed(mp).lambda_star);
    // the root really is a root of the semi-discrete symbol
    const double rate = detail::discrete_tail_rate(mp, dc.c, g.dx, dc.lambda);
    CHECK(std::abs(rate) < 1e-6);
}

TEST_CASE("supercritical bump experiment: exponential decay, bounded, transfer-consistent") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
    ExperimentSpec spec{mp, ws, Grid1D(60.0, 1201)};
    spec.pert.amplitude = 0.1;
    spec.pert.width = 5.0;
    spec.t_end = 60.0;
    spec.relax_t = 1500.0;
    spec.window = {20.0, 60.0};
    auto rep = run_stability(spec);

    CHECK(rep.primary_fitted);
    CHECK(rep.decaying);
    CHECK(rep.fit.exp_rate > 0.0);
    CHECK(rep.fit.r_squared > 0.98);
    CHECK(rep.theory_mu_bound > 0.0);
    CHECK(rep.mu0 > 0.0);
    // the measured rate should not beat min{delta, mu0} by a wide margin but can
    // exceed the conservative bound; require it at least be positive and of the
    // same scale
    CHECK(rep.fit.exp_rate < 5.0 * mp.delta);
    CHECK(rep.bounded.pass);
    CHECK(rep.transfer_violation <= 1e-10);
    CHECK(rep.x0 > -spec.grid.L);
    CHECK(rep.x0 < spec.grid.L);
    // far zone decays exponentially with a positive rate
    CHECK(rep.far_zone.fitted);
    CHECK(rep.far_zone.fit.exp_rate > 0.0);
}

TEST_CASE("decay rate is amplitude-independent and sign-shape-independent") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    auto ws = make_wave_spec(mp, 1.2 * min_speed(mp).c_star, {});
    ExperimentSpec base{mp, ws, Grid1D(50.0, 1001)};
    base.t_end = 50.0;
    base.relax_t = 1500.0;
    base.window = {15.0, 50.0};

    ExperimentSpec small = base;
    small.pert.amplitude = 0.02;
    ExperimentSpec large = base;
    large.pert.amplitude = 0.2;
    ExperimentSpec packet = base;
    packet.pert.kind = PerturbationKind::Packet;
    packet.pert.amplitude = 0.1;
    packet.pert.width = 6.0;

    const double mu_s = run_stability(small).fit.exp_rate;
    const double mu_l = run_stability(large).fit.exp_rate;
    const double mu_p = run_stability(packet).fit.exp_rate;
    CHECK(mu_s > 0.0);
    CHECK(mu_l == doctest::Approx(mu_s).epsilon(0.15));
    CHECK(mu_p == doctest::Approx(mu_s).epsilon(0.25));
}

TEST_CASE("faster waves relax at least as fast") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.3);
    const double cs = min_speed(mp).c_star;
    ExperimentSpec lo{mp, make_wave_spec(mp, 1.1 * cs, {}), Grid1D(50.0, 1001)};
    lo.t_end = 50.0;
    lo.relax_t = 1500.0;
    // the faster wave decays into the round-off floor early, so open the
    // window right after the transient
    lo.window = {8.0, 50.0};
    ExperimentSpec hi = lo;
    hi.ws = make_wave_spec(mp, 1.5 * cs, {});

    const auto rep_lo = run_stability(lo);
    const auto rep_hi = run_stability(hi);
    CHECK(rep_lo.primary_fitted);
    CHECK(rep_hi.primary_fitted);
    CHECK(rep_lo.fit.exp_rate > 0.0);
    CHECK(rep_hi.fit.exp_rate > 0.9 * rep_lo.fit.exp_rate);
}
