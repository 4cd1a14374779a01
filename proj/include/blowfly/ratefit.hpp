#ifndef BLOWFLY_RATEFIT_HPP
#define BLOWFLY_RATEFIT_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"

namespace blowfly {

// Least-squares estimators for the decay laws appearing in the rate theorems:
//   algebraic    log y = log C + alpha log t
//   exponential  log y = log C - mu t
//   mixed        log y = log C - (1/2) log t - mu t

enum class DecayModel { Algebraic, Exponential, Mixed };

struct FitWindow {
    double t_lo;
    double t_hi;
};

struct RateFit {
    DecayModel model = DecayModel::Algebraic;
    double alg_exponent = 0.0;  // alpha (fixed -1/2 for the mixed model)
    double exp_rate = 0.0;      // mu
    double exp_rate_sigma = 0.0;
    double amplitude = 0.0;     // C
    double r_squared = 0.0;
    FitWindow window{0.0, 0.0};
    std::size_t n_samples = 0;
};

namespace detail {

struct OlsLine {
    double intercept, slope, slope_sigma, r_squared;
};

inline OlsLine ols(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("ols: degenerate abscissa");
    OlsLine out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = y[i] - out.intercept - out.slope * x[i];
        ssr += res * res;
    }
    out.r_squared = (syy > 0.0) ? std::max(0.0, 1.0 - ssr / syy) : 1.0;
    out.slope_sigma = (n > 2) ? std::sqrt(ssr / ((n - 2) * sxx)) : 0.0;
    return out;
}

} // namespace detail

inline RateFit fit_decay(const std::vector<double>& t, const std::vector<double>& y,
                         DecayModel model, FitWindow window) {
    if (t.size() != y.size()) throw FitError("fit_decay: length mismatch");
    std::vector<double> x, z;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window.t_lo || t[i] > window.t_hi) continue;
        if (y[i] <= 0.0) throw FitError("fit_decay: nonpositive value in window");
        if (t[i] <= 0.0) throw FitError("fit_decay: nonpositive time in window");
        x.push_back(t[i]);
        z.push_back(std::log(y[i]));
    }
    if (x.size() < 30) throw FitError("fit_decay: fewer than 30 samples in window");
    if (model == DecayModel::Algebraic && x.back() < 10.0 * x.front())
        throw FitError("fit_decay: algebraic fit needs a decade in t");

    RateFit out;
    out.model = model;
    out.window = {x.front(), x.back()};
    out.n_samples = x.size();
    switch (model) {
        case DecayModel::Algebraic: {
            std::vector<double> lx(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
            auto line = detail::ols(lx, z);
            out.alg_exponent = line.slope;
            out.amplitude = std::exp(line.intercept);
            out.r_squared = line.r_squared;
            break;
        }
        case DecayModel::Exponential: {
            auto line = detail::ols(x, z);
            out.exp_rate = -line.slope;
            out.exp_rate_sigma = line.slope_sigma;
            out.amplitude = std::exp(line.intercept);
            out.r_squared = line.r_squared;
            break;
        }
        case DecayModel::Mixed: {
            std::vector<double> zc(z);
            for (std::size_t i = 0; i < x.size(); ++i) zc[i] += 0.5 * std::log(x[i]);
            auto line = detail::ols(x, zc);
            out.alg_exponent = -0.5;
            out.exp_rate = -line.slope;
            out.exp_rate_sigma = line.slope_sigma;
            out.amplitude = std::exp(line.intercept);
            out.r_squared = line.r_squared;
            break;
        }
    }
    return out;
}

// Running forward maximum over a trailing window of one oscillation period.
// Pre-smoothing for rate fits of ringing sup-norm series; preserves the decay
// envelope while removing the near-zero dips that wreck the log fit.
inline std::vector<double> envelope_max(const std::vector<double>& t,
                                        const std::vector<double>& y, double period) {
    if (t.size() != y.size()) throw FitError("envelope_max: length mismatch");
    std::vector<double> out(y.size());
    std::size_t j_hi = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (j_hi < i) j_hi = i;
        while (j_hi + 1 < t.size() && t[j_hi + 1] <= t[i] + period) ++j_hi;
        double m = y[i];
        for (std::size_t j = i; j <= j_hi; ++j) m = std::max(m, y[j]);
        out[i] = m;
    }
    return out;
}

} // namespace blowfly

#endif
