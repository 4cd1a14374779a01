#ifndef BLOWFLY_MODEL_HPP
#define BLOWFLY_MODEL_HPP

#include <cmath>
#include <string>

#include "errors.hpp"

namespace blowfly {

// Birth/death ratio regimes. Waves behave qualitatively differently in each.
enum class RatioRegime {
    OutOfScope,    // p/delta <= e: monotone theory, not handled here
    Intermediate,  // e < p/delta <= e^2
    Large          // p/delta > e^2
};

inline const char* to_string(RatioRegime rr) {
    switch (rr) {
        case RatioRegime::OutOfScope: return "out-of-scope";
        case RatioRegime::Intermediate: return "intermediate";
        case RatioRegime::Large: return "large";
    }
    return "?";
}

// The five physical constants of the delayed population model.
// Immutable after construction; validation is fail-fast.
struct ModelParams {
    double D;      // diffusion rate
    double delta;  // death coefficient
    double p;      // maximal birth rate
    double a;      // crowding constant
    double r;      // time delay

    ModelParams(double D_, double delta_, double p_, double a_, double r_)
        : D(D_), delta(delta_), p(p_), a(a_), r(r_) {
        auto bad = [](double x) { return !std::isfinite(x); };
        if (bad(D) || bad(delta) || bad(p) || bad(a) || bad(r))
            throw PreconditionError("ModelParams: non-finite parameter");
        if (D <= 0.0) throw PreconditionError("D must be positive");
        if (delta <= 0.0) throw PreconditionError("delta must be positive");
        if (p <= 0.0) throw PreconditionError("p must be positive");
        if (a <= 0.0) throw PreconditionError("a must be positive");
        if (r < 0.0) throw PreconditionError("r must be nonnegative");
    }

    double ratio() const { return p / delta; }

    RatioRegime regime() const {
        const double q = ratio();
        if (q <= std::exp(1.0)) return RatioRegime::OutOfScope;
        if (q <= std::exp(2.0)) return RatioRegime::Intermediate;
        return RatioRegime::Large;
    }

    void require_in_scope() const {
        if (regime() == RatioRegime::OutOfScope)
            throw RegimeError("p/delta <= e: outside the oscillatory-wave regimes");
    }
};

struct Equilibria {
    double v_minus;  // = 0
    double v_plus;   // = ln(p/delta)/a
};

// Birth rate b(v) = p v e^{-a v}.
inline double birth(double v, const ModelParams& mp) {
    if (v < 0.0) throw PreconditionError("birth: negative population");
    return mp.p * v * std::exp(-mp.a * v);
}

// b'(v) = p (1 - a v) e^{-a v}; |b'(v)| <= p for v >= 0.
inline double birth_prime(double v, const ModelParams& mp) {
    if (v < 0.0) throw PreconditionError("birth_prime: negative population");
    return mp.p * (1.0 - mp.a * v) * std::exp(-mp.a * v);
}

inline Equilibria equilibria(const ModelParams& mp) {
    if (mp.ratio() <= 1.0)
        throw RegimeError("equilibria: p/delta <= 1, no positive equilibrium");
    return {0.0, std::log(mp.ratio()) / mp.a};
}

// b'(v_+) = delta (1 - ln(p/delta)); negative in both in-scope regimes.
inline double birth_prime_at_plus(const ModelParams& mp) {
    return mp.delta * (1.0 - std::log(mp.ratio()));
}

} // namespace blowfly

#endif
