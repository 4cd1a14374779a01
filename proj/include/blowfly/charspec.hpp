#ifndef BLOWFLY_CHARSPEC_HPP
#define BLOWFLY_CHARSPEC_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "model.hpp"
#include "rootfind.hpp"

namespace blowfly {

inline constexpr double regime_tol = 1e-9;  // boundary comparisons; ties go to the monotone side

// Characteristic gap at v_- = 0:  g(lambda) = c lambda - D lambda^2 + delta - p e^{-lambda c r}.
// g(lambda) = 0 is the dispersion relation for the decay exponent at xi -> -infinity.
inline double char_gap(const ModelParams& mp, double c, double lambda) {
    return c * lambda - mp.D * lambda * lambda + mp.delta -
           mp.p * std::exp(-lambda * c * mp.r);
}

// d/dlambda of char_gap.
inline double char_gap_dlambda(const ModelParams& mp, double c, double lambda) {
    return c - 2.0 * mp.D * lambda + c * mp.r * mp.p * std::exp(-lambda * c * mp.r);
}

struct MinSpeed {
    double c_star;
    double lambda_star;
    double residual;
};

// Minimal wave speed: the unique tangency of F_c(lambda) = c lambda - D lambda^2 + delta
// and G_c(lambda) = p e^{-lambda c r}.  Solved by damped Newton with continuation in r
// from the r = 0 closed form c = 2 sqrt(D(p - delta)), lambda = sqrt((p - delta)/D).
inline MinSpeed min_speed(const ModelParams& mp) {
    if (mp.ratio() <= 1.0)
        throw RegimeError("min_speed: requires p/delta > 1");
    const double lam0 = std::sqrt((mp.p - mp.delta) / mp.D);
    const double c0 = 2.0 * std::sqrt(mp.D * (mp.p - mp.delta));
    if (mp.r == 0.0) return {c0, lam0, 0.0};

    auto system_at = [&mp](double r) {
        return [&mp, r](double c, double lam, double& F0, double& F1, double& J00,
                        double& J01, double& J10, double& J11) {
            const double E = mp.p * std::exp(-lam * c * r);
            F0 = c * lam - mp.D * lam * lam + mp.delta - E;
            F1 = c - 2.0 * mp.D * lam + c * r * E;
            J00 = lam + lam * r * E;                       // dF0/dc
            J01 = c - 2.0 * mp.D * lam + c * r * E;        // dF0/dlam
            J10 = 1.0 + r * E - c * lam * r * r * E;       // dF1/dc
            J11 = -2.0 * mp.D - c * c * r * r * E;         // dF1/dlam
        };
    };

    double c = c0, lam = lam0;
    int steps = 1;
    for (;;) {
        double cc = c0, ll = lam0;
        bool ok = true;
        for (int k = 1; k <= steps; ++k) {
            const double rk = mp.r * k / steps;
            try {
                auto res = newton2(system_at(rk), cc, ll, 1e-13, 100);
                cc = res.x;
                ll = res.y;
            } catch (const NumericalError&) {
                ok = false;
                break;
            }
        }
        if (ok && cc > 0.0 && ll > 0.0) {
            c = cc;
            lam = ll;
            break;
        }
        steps *= 2;
        if (steps > 4096)
            throw NumericalError("min_speed: continuation in r failed");
    }
    double F0, F1, J[4];
    system_at(mp.r)(c, lam, F0, F1, J[0], J[1], J[2], J[3]);
    return {c, lam, std::max(std::abs(F0), std::abs(F1))};
}

// The two positive characteristic roots lambda_1 < lambda_star < lambda_2 for c > c_star.
inline std::pair<double, double> lambda_pair(const ModelParams& mp, double c) {
    const MinSpeed ms = min_speed(mp);
    if (c <= ms.c_star * (1.0 + 1e-14))
        throw PreconditionError("lambda_pair: requires c > c_star");
    auto g = [&](double lam) { return char_gap(mp, c, lam); };
    // g' is strictly decreasing, so g has a single interior maximum lambda_m.
    auto gp = [&](double lam) { return char_gap_dlambda(mp, c, lam); };
    auto [mlo, mhi] = expand_bracket(gp, 0.0, 1.0);
    const double lam_m = bisect(gp, mlo, mhi, 1e-15);
    if (g(lam_m) <= 0.0)
        throw NumericalError("lambda_pair: gap not positive at interior maximum");
    const double lam1 = bisect(g, 1e-300, lam_m, 1e-16);
    auto [rlo, rhi] = expand_bracket(g, lam_m, 2.0 * lam_m);
    const double lam2 = bisect(g, rlo, rhi, 1e-16);
    return {lam1, lam2};
}

// Delay thresholds.  r_under solves delta(ln(p/delta)-1) r e^{delta r + 1} = 1 and needs
// p/delta > e; r_bar is the Hopf delay, finite only for p/delta > e^2.
struct DelayThresholds {
    std::optional<double> r_under;
    double r_bar;  // +infinity when e < p/delta <= e^2
};

inline DelayThresholds delay_thresholds(const ModelParams& mp) {
    const double L = std::log(mp.ratio());
    DelayThresholds out;
    out.r_bar = std::numeric_limits<double>::infinity();
    if (L > 1.0) {
        const double k = mp.delta * (L - 1.0);
        auto f = [&](double rr) { return k * rr * std::exp(mp.delta * rr + 1.0) - 1.0; };
        auto [lo, hi] = expand_bracket(f, 0.0, 1.0 / mp.delta);
        out.r_under = bisect(f, lo, hi, 1e-15);
    }
    if (L > 2.0) {
        const double s = std::sqrt((L - 2.0) * L);
        out.r_bar = (M_PI - std::atan(s)) / (mp.delta * s);
    }
    return out;
}

// Characteristic equation at v_+ for the decay exponent as xi -> +infinity:
//   -c lambda - D lambda^2 + delta = b'(v_+) e^{lambda c r}.
inline double upper_gap(const ModelParams& mp, double c, double lambda) {
    const double bp = birth_prime_at_plus(mp);
    return -c * lambda - mp.D * lambda * lambda + mp.delta -
           bp * std::exp(lambda * c * mp.r);
}

// Smallest positive root in lambda of the v_+ characteristic equation at given speed c,
// if one exists.  b'(v_+) = 0 reduces to a quadratic with the explicit positive root.
inline std::optional<double> upper_lambda(const ModelParams& mp, double c) {
    const double bp = birth_prime_at_plus(mp);
    if (bp == 0.0)
        return (-c + std::sqrt(c * c + 4.0 * mp.D * mp.delta)) / (2.0 * mp.D);
    auto h = [&](double lam) { return upper_gap(mp, c, lam); };
    // h(0) = delta - bp > 0; scan for a sign change up to the overflow-safe exponent.
    const double lam_max =
        (c * mp.r > 0.0) ? 600.0 / (c * mp.r) : 2.0 * std::sqrt(mp.delta / mp.D) + c / mp.D + 10.0;
    const int n = 4000;
    double prev = h(0.0), prev_lam = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double lam = lam_max * i / n;
        const double val = h(lam);
        if (prev * val <= 0.0)
            return bisect(h, prev_lam, lam, 1e-15);
        prev = val;
        prev_lam = lam;
    }
    return std::nullopt;
}

struct UpperSpeed {
    double c_upper;
    double lambda_upper;
    double residual;
};

// Tangency pair (c^upper, lambda^upper): the largest speed at which the v_+ characteristic
// equation still has a real positive root.  For r below the oscillation threshold r_under
// real roots persist for every speed and no finite tangency exists (absent result).
inline std::optional<UpperSpeed> upper_speed(const ModelParams& mp) {
    if (mp.regime() == RatioRegime::OutOfScope && birth_prime_at_plus(mp) >= 0.0)
        throw RegimeError("upper_speed: requires p/delta > e");
    const double bp = birth_prime_at_plus(mp);
    if (bp >= 0.0 || mp.r == 0.0) return std::nullopt;

    // Interior minimum of h(.; c) over lambda, by sampling plus ternary refinement.
    auto min_h = [&](double c, double& lam_at) {
        const double lam_max = 600.0 / (c * mp.r);
        const int n = 2000;
        double best = std::numeric_limits<double>::infinity(), best_lam = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double lam = lam_max * i / n;
            const double v = upper_gap(mp, c, lam);
            if (v < best) {
                best = v;
                best_lam = lam;
            }
        }
        double lo = std::max(1e-12, best_lam - lam_max / n);
        double hi = best_lam + lam_max / n;
        for (int it = 0; it < 200; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (upper_gap(mp, c, m1) < upper_gap(mp, c, m2))
                hi = m2;
            else
                lo = m1;
        }
        lam_at = 0.5 * (lo + hi);
        return upper_gap(mp, c, lam_at);
    };

    double lam_tmp;
    auto psi = [&](double c) { return min_h(c, lam_tmp); };

    double c_lo = 1e-3;
    if (psi(c_lo) > 0.0) return std::nullopt;  // no root even at small speed
    double c_hi = 1.0;
    int guard = 0;
    while (psi(c_hi) < 0.0) {
        c_lo = c_hi;
        c_hi *= 2.0;
        if (++guard > 40) return std::nullopt;  // roots for every speed: r < r_under
    }
    const double c_seed = bisect(psi, c_lo, c_hi, 1e-10);
    double lam_seed;
    min_h(c_seed, lam_seed);

    auto fj = [&](double c, double lam, double& F0, double& F1, double& J00, double& J01,
                  double& J10, double& J11) {
        const double X = std::exp(lam * c * mp.r);
        F0 = -c * lam - mp.D * lam * lam + mp.delta - bp * X;
        F1 = -c - 2.0 * mp.D * lam - bp * c * mp.r * X;
        J00 = -lam - bp * lam * mp.r * X;
        J01 = -c - 2.0 * mp.D * lam - bp * c * mp.r * X;
        J10 = -1.0 - bp * mp.r * X - bp * c * lam * mp.r * mp.r * X;
        J11 = -2.0 * mp.D - bp * c * c * mp.r * mp.r * X;
    };
    auto res = newton2(fj, c_seed, lam_seed, 1e-12, 100);
    if (res.x <= 0.0 || res.y <= 0.0)
        throw NumericalError("upper_speed: tangency left the positive quadrant");
    return UpperSpeed{res.x, res.y, res.residual};
}

// Delay at which the curves c_star(r) and c_upper(r) intersect (intermediate regime only).
inline std::optional<double> intersection_delay(const ModelParams& mp) {
    if (mp.regime() != RatioRegime::Intermediate) return std::nullopt;
    auto th = delay_thresholds(mp);
    if (!th.r_under) return std::nullopt;
    const double ru = *th.r_under;
    auto diff = [&](double rr) -> double {
        ModelParams m(mp.D, mp.delta, mp.p, mp.a, rr);
        auto up = upper_speed(m);
        if (!up) return 1.0;  // c_upper effectively infinite
        return up->c_upper - min_speed(m).c_star;
    };
    double lo = ru * 1.0001;
    if (diff(lo) < 0.0) return std::nullopt;
    double hi = lo;
    bool found = false;
    for (int i = 0; i < 12; ++i) {
        hi *= 1.5;
        if (diff(hi) < 0.0) {
            found = true;
            break;
        }
        lo = hi;
    }
    if (!found) return std::nullopt;
    return bisect(diff, lo, hi, 1e-9);
}

enum class RegimeLabel { Monotone, Oscillatory, NoWave };

inline const char* to_string(RegimeLabel rl) {
    switch (rl) {
        case RegimeLabel::Monotone: return "monotone";
        case RegimeLabel::Oscillatory: return "oscillatory";
        case RegimeLabel::NoWave: return "no-wave";
    }
    return "?";
}

// Phase classification of the front at (c, r).  Ties within regime_tol resolve toward
// the monotone / no-wave side.
inline RegimeLabel classify_regime(const ModelParams& mp, double c) {
    mp.require_in_scope();
    const auto th = delay_thresholds(mp);
    const double ru = th.r_under.value();
    if (mp.regime() == RatioRegime::Large) {
        if (mp.r >= th.r_bar - regime_tol) return RegimeLabel::NoWave;
        if (mp.r < ru + regime_tol) return RegimeLabel::Monotone;
        return RegimeLabel::Oscillatory;
    }
    // intermediate: e < p/delta <= e^2
    if (mp.r < ru + regime_tol) return RegimeLabel::Monotone;
    const auto r0 = intersection_delay(mp);
    if (r0 && mp.r > *r0 + regime_tol) return RegimeLabel::Oscillatory;
    const auto up = upper_speed(mp);
    const double c_up = up ? up->c_upper : std::numeric_limits<double>::infinity();
    if (c <= c_up + regime_tol) return RegimeLabel::Monotone;
    return RegimeLabel::Oscillatory;
}

// Speed/weight selection for a run: lambda = lambda_star at criticality, otherwise a
// point of (lambda_1, lambda_2), by default the midpoint.
struct WaveSpec {
    double c;
    double lambda;
    bool critical;
};

inline WaveSpec make_wave_spec(const ModelParams& mp, double c,
                               std::optional<double> lambda_override = std::nullopt) {
    const MinSpeed ms = min_speed(mp);
    const double tol = regime_tol * std::max(1.0, ms.c_star);
    if (std::abs(c - ms.c_star) <= tol)
        return {ms.c_star, ms.lambda_star, true};
    if (c < ms.c_star)
        throw PreconditionError("make_wave_spec: c below critical speed");
    auto [l1, l2] = lambda_pair(mp, c);
    double lam = lambda_override ? *lambda_override : 0.5 * (l1 + l2);
    if (lam <= l1 || lam >= l2)
        throw PreconditionError("make_wave_spec: lambda outside (lambda1, lambda2)");
    if (char_gap(mp, c, lam) <= 0.0)
        throw PreconditionError("make_wave_spec: characteristic gap not positive");
    return {c, lam, false};
}

inline WaveSpec critical_wave_spec(const ModelParams& mp) {
    const MinSpeed ms = min_speed(mp);
    return {ms.c_star, ms.lambda_star, true};
}

struct WeightValue {
    double value;
    bool clamped;
};

// w(xi) = e^{-2 lambda xi}, exponent clamped at +-700 on the log scale.
inline WeightValue weight(const WaveSpec& ws, double xi) {
    double ex = -2.0 * ws.lambda * xi;
    bool clamped = false;
    if (ex > 700.0) {
        ex = 700.0;
        clamped = true;
    } else if (ex < -700.0) {
        ex = -700.0;
        clamped = true;
    }
    return {std::exp(ex), clamped};
}

// Everything the `speeds` subcommand reports.
struct SpectralProfile {
    double c_star = 0.0;
    double lambda_star = 0.0;
    double r_under = std::numeric_limits<double>::quiet_NaN();
    double r_bar = std::numeric_limits<double>::infinity();
    double c_upper = std::numeric_limits<double>::quiet_NaN();
    double lambda_upper = std::numeric_limits<double>::quiet_NaN();
    double r0 = std::numeric_limits<double>::quiet_NaN();
    RatioRegime regime = RatioRegime::OutOfScope;
};

inline SpectralProfile spectral_profile(const ModelParams& mp) {
    SpectralProfile sp;
    sp.regime = mp.regime();
    const auto ms = min_speed(mp);
    sp.c_star = ms.c_star;
    sp.lambda_star = ms.lambda_star;
    const auto th = delay_thresholds(mp);
    if (th.r_under) sp.r_under = *th.r_under;
    sp.r_bar = th.r_bar;
    if (birth_prime_at_plus(mp) < 0.0) {
        if (auto up = upper_speed(mp)) {
            sp.c_upper = up->c_upper;
            sp.lambda_upper = up->lambda_upper;
        }
    }
    if (auto r0 = intersection_delay(mp)) sp.r0 = *r0;
    return sp;
}

} // namespace blowfly

#endif
