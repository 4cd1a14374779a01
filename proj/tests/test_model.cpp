#include "doctest.h"

#include <cmath>
#include <random>

#include "blowfly/model.hpp"

using namespace blowfly;

TEST_CASE("parameter validation is fail-fast") {
    CHECK_THROWS_AS(ModelParams(-1, 1, 2, 1, 0), PreconditionError);
    CHECK_THROWS_AS(ModelParams(1, 0, 2, 1, 0), PreconditionError);
    CHECK_THROWS_AS(ModelParams(1, 1, 2, 1, -0.5), PreconditionError);
    CHECK_THROWS_AS(ModelParams(1, 1, std::nan(""), 1, 0), PreconditionError);
    CHECK_NOTHROW(ModelParams(1, 1, 2, 1, 0));
}

TEST_CASE("regime labels") {
    CHECK(ModelParams(1, 1, 2, 1, 0).regime() == RatioRegime::OutOfScope);
    CHECK(ModelParams(1, 1, std::exp(1.5), 1, 0).regime() == RatioRegime::Intermediate);
    CHECK(ModelParams(1, 1, std::exp(2.0), 1, 0).regime() == RatioRegime::Intermediate);
    CHECK(ModelParams(1, 1, std::exp(3.0), 1, 0).regime() == RatioRegime::Large);
    CHECK_THROWS_AS(ModelParams(1, 1, 2, 1, 0).require_in_scope(), RegimeError);
}

TEST_CASE("birth function values") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    CHECK(birth(0.0, mp) == 0.0);
    const double vp = equilibria(mp).v_plus;
    CHECK(vp == doctest::Approx(2.0).epsilon(1e-14));
    // fixed-point identity b(v_+) = delta v_+
    CHECK(birth(vp, mp) == doctest::Approx(mp.delta * vp).epsilon(1e-14));
    // global maximum at v = 1/a
    CHECK(birth(1.0 / mp.a, mp) ==
          doctest::Approx(mp.p / mp.a * std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(birth(-0.1, mp), PreconditionError);
}

TEST_CASE("birth_prime values and bound") {
    ModelParams mp(1, 1, std::exp(2.0), 1, 0.5);
    CHECK(birth_prime(0.0, mp) == doctest::Approx(mp.p));
    CHECK(birth_prime(1.0 / mp.a, mp) == doctest::Approx(0.0));
    const double vp = equilibria(mp).v_plus;
    // b'(v_+) = delta (1 - ln(p/delta)) = -delta here
    CHECK(birth_prime(vp, mp) == doctest::Approx(-mp.delta).epsilon(1e-13));
    CHECK(birth_prime_at_plus(mp) == doctest::Approx(-mp.delta).epsilon(1e-13));

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> vdist(0.0, 50.0);
    for (int i = 0; i < 500; ++i) {
        const double v = vdist(rng);
        CHECK(std::abs(birth_prime(v, mp)) <= mp.p * (1 + 1e-14));
    }
}

TEST_CASE("equilibria closed forms") {
    CHECK(equilibria(ModelParams(1, 1, std::exp(2.0), 1, 0)).v_plus ==
          doctest::Approx(2.0).epsilon(1e-14));
    CHECK(equilibria(ModelParams(1, 1, std::exp(1.0), 2, 0)).v_plus ==
          doctest::Approx(0.5).epsilon(1e-14));
    CHECK(equilibria(ModelParams(1, 2, 2 * std::exp(3.0), 1, 0)).v_plus ==
          doctest::Approx(3.0).epsilon(1e-14));
    CHECK_THROWS_AS(equilibria(ModelParams(1, 2, 1, 1, 0)), RegimeError);
}

TEST_CASE("birth is unimodal") {
    ModelParams mp(1, 1, std::exp(1.7), 0.7, 0.2);
    const double peak = 1.0 / mp.a;
    double prev = birth(0.0, mp);
    for (int i = 1; i <= 100; ++i) {
        const double v = peak * i / 100.0;
        const double cur = birth(v, mp);
        CHECK(cur >= prev);
        prev = cur;
    }
    for (int i = 1; i <= 100; ++i) {
        const double v = peak + 5.0 * i / 100.0;
        const double cur = birth(v, mp);
        CHECK(cur <= prev);
        prev = cur;
    }
}
