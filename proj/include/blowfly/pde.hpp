#ifndef BLOWFLY_PDE_HPP
#define BLOWFLY_PDE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "charspec.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace blowfly {

// ---------------------------------------------------------------------------
// Explicit method-of-steps solver for
//   u_t = D u_xx - adv u_x + f(u, u(t-r, x - shift), x)
// on [-L, L] with constant Dirichlet boundary values.  The state on [t-r, t]
// lives in a ring of m+1 spatial arrays; the delayed shifted read splits the
// shift into integer*dx plus a fractional remainder handled by interpolation.
// ---------------------------------------------------------------------------

enum class DelayInterp { Cubic, Linear };

class DelayedFieldSolver {
public:
    struct Config {
        Grid1D grid;
        double D;
        double adv = 0.0;       // coefficient of u_x (advection in the moving frame)
        double r = 0.0;         // time delay
        double shift = 0.0;     // spatial delay shift (c r), applied as x - shift
        double left_bc = 0.0;
        double right_bc = 0.0;
        double dt = 0.0;        // must divide r exactly when r > 0
        DelayInterp interp = DelayInterp::Cubic;
        // When set, the left boundary carries the exponential tail u ~ e^{lam xi}
        // instead of a Dirichlet value: u[0] tracks u[1] e^{-lam dx} and reads left
        // of the grid extrapolate along the tail.  Required for pulled fronts,
        // whose speed lives in that tail; a Dirichlet cutoff makes them retreat.
        std::optional<double> left_tail_lambda;
        std::function<double(double u, double udel, double xi)> reaction;
    };

    template <class History>
    DelayedFieldSolver(Config cfg, History history) : cfg_(std::move(cfg)) {
        const auto& g = cfg_.grid;
        if (cfg_.dt <= 0.0) throw ConfigError("solver: dt must be positive");
        if (cfg_.r > 0.0) {
            const double md = cfg_.r / cfg_.dt;
            m_ = std::lround(md);
            if (m_ < 1 || std::abs(md - m_) > 1e-9 * std::max(1.0, md))
                throw ConfigError("solver: dt must divide r exactly");
        } else {
            m_ = 0;
        }
        ring_.assign(m_ + 1, std::vector<double>(g.n));
        for (long k = 0; k <= m_; ++k) {
            const double s = (m_ == 0) ? 0.0 : -cfg_.r + k * cfg_.dt;
            for (int i = 0; i < g.n; ++i) ring_[k][i] = history(s, g.xi(i));
        }
        head_ = m_;
        // shift decomposition for the delayed read
        const double off = cfg_.shift / g.dx;
        shift_int_ = static_cast<long>(std::floor(off));
        shift_frac_ = off - shift_int_;
        if (shift_frac_ < 1e-12) shift_frac_ = 0.0;
        if (shift_frac_ > 1.0 - 1e-12) {
            shift_frac_ = 0.0;
            ++shift_int_;
        }
        scratch_.resize(g.n);
        delayed_scratch_.resize(g.n);
    }

    double t() const { return t_; }
    long step_count() const { return steps_; }
    const Grid1D& grid() const { return cfg_.grid; }
    double dt() const { return cfg_.dt; }
    const std::vector<double>& state() const { return ring_[head_]; }

    // field at time t - r (the oldest ring slot)
    const std::vector<double>& delayed_state() const {
        return ring_[(head_ + 1) % ring_.size()];
    }

    void step() {
        const auto& g = cfg_.grid;
        const auto& u = ring_[head_];
        const auto& ud = (m_ == 0) ? u : ring_[(head_ + 1) % ring_.size()];
        build_shifted(ud, delayed_scratch_);
        auto& un = scratch_;

        const double idx2 = 1.0 / (g.dx * g.dx);
        const double idx1 = 1.0 / (2.0 * g.dx);
        const double dt = cfg_.dt;
        const double D = cfg_.D;
        const double adv = cfg_.adv;
        const int n = g.n;

        un[n - 1] = cfg_.right_bc;
        for (int i = 1; i < n - 1; ++i) {
            const double diff = D * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * idx2;
            double advec = 0.0;
            if (adv > 0.0) {
                advec = (i >= 2) ? adv * (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) * idx1
                                 : adv * (u[i] - u[i - 1]) / g.dx;
            } else if (adv < 0.0) {
                advec = (i <= n - 3) ? adv * (-3.0 * u[i] + 4.0 * u[i + 1] - u[i + 2]) * idx1
                                     : adv * (u[i + 1] - u[i]) / g.dx;
            }
            un[i] = u[i] + dt * (diff - advec +
                                 cfg_.reaction(u[i], delayed_scratch_[i], g.xi(i)));
        }
        un[0] = cfg_.left_tail_lambda
                    ? un[1] * std::exp(-(*cfg_.left_tail_lambda) * g.dx)
                    : cfg_.left_bc;
        head_ = (head_ + 1) % ring_.size();
        ring_[head_].swap(un);
        t_ += dt;
        ++steps_;
        if (steps_ % 64 == 0) check_finite();
    }

    void check_finite() const {
        for (double v : ring_[head_])
            if (!std::isfinite(v))
                throw NumericalError("solver: non-finite field at step " +
                                     std::to_string(steps_));
    }

private:
    // delayed field evaluated at xi_i - shift, boundary-clamped
    void build_shifted(const std::vector<double>& ud, std::vector<double>& out) const {
        const int n = cfg_.grid.n;
        auto at = [&](long j) -> double {
            if (j < 0)
                return cfg_.left_tail_lambda
                           ? ud[0] * std::exp((*cfg_.left_tail_lambda) * j * cfg_.grid.dx)
                           : cfg_.left_bc;
            if (j >= n) return cfg_.right_bc;
            return ud[j];
        };
        if (shift_frac_ == 0.0) {
            for (int i = 0; i < n; ++i) out[i] = at(i - shift_int_);
            return;
        }
        const double fr = shift_frac_;
        if (cfg_.interp == DelayInterp::Linear) {
            for (int i = 0; i < n; ++i) {
                const long j = i - shift_int_;
                out[i] = (1.0 - fr) * at(j) + fr * at(j - 1);
            }
            return;
        }
        // cubic Lagrange on (j-2, j-1, j, j+1); target position j - fr
        const double x = 2.0 - fr;  // relative to j-2
        const double w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        const double w1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        const double w2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        const double w3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        for (int i = 0; i < n; ++i) {
            const long j = i - shift_int_;
            out[i] = w0 * at(j - 2) + w1 * at(j - 1) + w2 * at(j) + w3 * at(j + 1);
        }
    }

    Config cfg_;
    std::vector<std::vector<double>> ring_;
    std::vector<double> scratch_, delayed_scratch_;
    long m_ = 0;
    long shift_int_ = 0;
    double shift_frac_ = 0.0;
    std::size_t head_ = 0;
    double t_ = 0.0;
    long steps_ = 0;
};

// ---------------------------------------------------------------------------
// Run loop with sampled observation.
// ---------------------------------------------------------------------------

struct FieldSeries {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> sup;      // sup |u|
    std::vector<double> min_val;  // min u
    std::vector<double> final_state;
};

template <class Observer>
void run_solver(DelayedFieldSolver& solver, double t_end, long sample_stride, Observer&& obs) {
    obs(solver.t(), solver.state());
    const long n_steps = std::lround(std::ceil(t_end / solver.dt() - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        solver.step();
        if ((s + 1) % sample_stride == 0 || s + 1 == n_steps) obs(solver.t(), solver.state());
    }
}

inline FieldSeries collect_series(DelayedFieldSolver& solver, double t_end, long sample_stride) {
    FieldSeries out;
    out.dt = solver.dt();
    run_solver(solver, t_end, sample_stride, [&](double t, const std::vector<double>& u) {
        double sup = 0.0, mn = std::numeric_limits<double>::infinity();
        for (double v : u) {
            sup = std::max(sup, std::abs(v));
            mn = std::min(mn, v);
        }
        out.t.push_back(t);
        out.sup.push_back(sup);
        out.min_val.push_back(mn);
    });
    out.final_state = solver.state();
    return out;
}

// ---------------------------------------------------------------------------
// The four equation forms.
// ---------------------------------------------------------------------------

// Lab frame: v_t = D v_xx - delta v + b(v(t-r, x)); Dirichlet v(-L) = v0(-L),
// v(+L) = v0(+L) taken from the initial history at t = 0.
template <class History>
DelayedFieldSolver make_lab_solver(const ModelParams& mp, const Grid1D& grid, History v0,
                                   double cfl = 0.4) {
    DelayedFieldSolver::Config cfg{grid, mp.D};
    cfg.r = mp.r;
    cfg.shift = 0.0;
    cfg.left_bc = v0(0.0, -grid.L);
    cfg.right_bc = v0(0.0, grid.L);
    cfg.dt = stable_dt(grid, mp.D, 0.0, mp.r, cfl);
    cfg.reaction = [mp](double u, double udel, double) {
        return -mp.delta * u + birth(std::max(udel, 0.0), mp);
    };
    return DelayedFieldSolver(std::move(cfg), v0);
}

// Extends a profile beyond the grid by its far-field limits.
struct ProfileOnGrid {
    Grid1D grid;
    std::vector<double> phi;
    double v_minus = 0.0, v_plus = 0.0;

    double operator()(double xi) const {
        if (xi <= -grid.L) return v_minus;
        if (xi >= grid.L) return v_plus;
        const double q = (xi + grid.L) / grid.dx;
        const long j = static_cast<long>(std::floor(q));
        const double fr = q - j;
        if (fr < 1e-12) return phi[j];
        const long lo = std::max<long>(0, std::min<long>(j - 1, grid.n - 4));
        const double x = q - lo;
        const double z0 = phi[lo], z1 = phi[lo + 1], z2 = phi[lo + 2], z3 = phi[lo + 3];
        const double c1 = z1 - z0;
        const double c2 = (z2 - 2.0 * z1 + z0) / 2.0;
        const double c3 = (z3 - 3.0 * z2 + 3.0 * z1 - z0) / 6.0;
        return z0 + c1 * x + c2 * x * (x - 1.0) + c3 * x * (x - 1.0) * (x - 2.0);
    }
};

// Moving-frame perturbation around the profile:
//   u_t + c u_xi - D u_xixi + delta u = b(phi(xi-cr) + u(t-r, xi-cr)) - b(phi(xi-cr)).
template <class History>
DelayedFieldSolver make_perturbation_solver(const WaveSpec& ws, const ModelParams& mp,
                                            const ProfileOnGrid& profile, const Grid1D& grid,
                                            History u0, double cfl = 0.4,
                                            DelayInterp interp = DelayInterp::Cubic) {
    DelayedFieldSolver::Config cfg{grid, mp.D};
    cfg.adv = ws.c;
    cfg.r = mp.r;
    cfg.shift = ws.c * mp.r;
    cfg.left_bc = 0.0;
    cfg.right_bc = 0.0;
    cfg.dt = stable_dt(grid, mp.D, ws.c, mp.r, cfl);
    cfg.interp = interp;
    const double c = ws.c, r = mp.r;
    cfg.reaction = [mp, &profile, c, r](double u, double udel, double xi) {
        const double ph = profile(xi - c * r);
        const double shifted = std::max(ph + udel, 0.0);
        return -mp.delta * u + birth(shifted, mp) - birth(ph, mp);
    };
    return DelayedFieldSolver(std::move(cfg), u0);
}

// Anti-weighted form for utilde = e^{-lambda xi} u:
//   utilde_t - D utilde_xixi + a0 utilde_xi + a1 utilde = Ptilde(utilde(t-r, xi-cr)).
// The nonlinear right side is evaluated through the local change of variables,
// falling back to the linearization when the unweighted amplitude underflows.
struct AntiweightCoefficients {
    double a0, a1, k_delay;  // k_delay = e^{-lambda c r}

    AntiweightCoefficients(const WaveSpec& ws, const ModelParams& mp) {
        a0 = ws.c - 2.0 * mp.D * ws.lambda;
        a1 = ws.c * ws.lambda + mp.delta - mp.D * ws.lambda * ws.lambda;
        k_delay = std::exp(-ws.lambda * ws.c * mp.r);
        // consistency with the characteristic analysis: a1 >= p e^{-lambda c r},
        // with equality exactly at criticality
        const double rhs = mp.p * k_delay;
        const double tol = 1e-8 * std::max(1.0, mp.p);
        if (ws.critical) {
            if (std::abs(a1 - rhs) > tol)
                throw PreconditionError("antiweight: a1 != p e^{-lambda c r} at criticality");
        } else {
            if (a1 <= rhs)
                throw PreconditionError("antiweight: a1 <= p e^{-lambda c r} off criticality");
        }
    }
};

template <class History>
DelayedFieldSolver make_antiweighted_solver(const WaveSpec& ws, const ModelParams& mp,
                                            const ProfileOnGrid& profile, const Grid1D& grid,
                                            History u0t, double cfl = 0.4,
                                            DelayInterp interp = DelayInterp::Cubic) {
    const AntiweightCoefficients co(ws, mp);
    DelayedFieldSolver::Config cfg{grid, mp.D};
    cfg.adv = co.a0;
    cfg.r = mp.r;
    cfg.shift = ws.c * mp.r;
    cfg.left_bc = 0.0;
    cfg.right_bc = 0.0;
    cfg.dt = stable_dt(grid, mp.D, co.a0, mp.r, cfl);
    cfg.interp = interp;
    const double c = ws.c, r = mp.r, lam = ws.lambda;
    cfg.reaction = [mp, &profile, co, c, r, lam](double ut, double utdel, double xi) {
        const double ph = profile(xi - c * r);
        // unweight the delayed value at its own position xi - cr
        double ex = lam * (xi - c * r);
        ex = std::clamp(ex, -600.0, 600.0);
        const double w = std::exp(ex);
        const double udel = w * utdel;
        double ptilde;
        if (std::abs(udel) < 1e-8) {
            ptilde = co.k_delay * birth_prime(ph, mp) * utdel;
        } else {
            const double shifted = std::max(ph + udel, 0.0);
            ptilde = co.k_delay * (birth(shifted, mp) - birth(ph, mp)) / w;
        }
        return -co.a1 * ut + ptilde;
    };
    return DelayedFieldSolver(std::move(cfg), u0t);
}

// Linear comparison equation:
//   u+_t - D u+_xixi + a0 u+_xi + a1 u+ = p e^{-lambda c r} u+(t-r, xi-cr).
template <class History>
DelayedFieldSolver make_comparison_solver(const WaveSpec& ws, const ModelParams& mp,
                                          const Grid1D& grid, History u0p, double cfl = 0.4,
                                          DelayInterp interp = DelayInterp::Cubic) {
    const AntiweightCoefficients co(ws, mp);
    DelayedFieldSolver::Config cfg{grid, mp.D};
    cfg.adv = co.a0;
    cfg.r = mp.r;
    cfg.shift = ws.c * mp.r;
    cfg.left_bc = 0.0;
    cfg.right_bc = 0.0;
    cfg.dt = stable_dt(grid, mp.D, co.a0, mp.r, cfl);
    cfg.interp = interp;
    const double k = mp.p * co.k_delay;
    const double a1 = co.a1;
    cfg.reaction = [a1, k](double u, double udel, double) { return -a1 * u + k * udel; };
    return DelayedFieldSolver(std::move(cfg), u0p);
}

// ---------------------------------------------------------------------------
// Heat-kernel Duhamel oracle for the first method-of-steps window of the
// perturbation equation (linear in the unknown for t <= r):
//   u(t,xi) = e^{-delta t} (G(t) * u0(0, .))(xi)
//           + int_0^t e^{-delta(t-s)} (G(t-s) * P(s - r, . - cr))(xi) ds,
//   G(t,eta) = exp(-(eta + c t)^2 / 4 D t) / sqrt(4 pi D t).
// ---------------------------------------------------------------------------

template <class History, class DelayTerm>
std::vector<double> heat_kernel_step(const ModelParams& mp, double c, const Grid1D& grid,
                                     History u0, DelayTerm P, double t, int s_panels = 32) {
    if (t < 0.0 || t > mp.r + 1e-12)
        throw PreconditionError("heat_kernel_step: t must lie in [0, r]");
    const int n = grid.n;
    std::vector<double> out(n, 0.0);
    if (t == 0.0) {
        for (int i = 0; i < n; ++i) out[i] = u0(0.0, grid.xi(i));
        return out;
    }
    auto convolve = [&](double tau, auto field, std::vector<double>& dst) {
        // (G(tau) * field)(xi_i) by trapezoid over the grid, kernel-width truncated
        const double sigma = std::sqrt(4.0 * mp.D * tau);
        const double half_width = 10.0 * sigma + std::abs(c) * tau;
        const long kmax = static_cast<long>(std::ceil(half_width / grid.dx));
        const double norm = grid.dx / std::sqrt(4.0 * M_PI * mp.D * tau);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (long k = -kmax; k <= kmax; ++k) {
                const double eta = k * grid.dx;
                const double g = std::exp(-(eta + c * tau) * (eta + c * tau) /
                                          (4.0 * mp.D * tau));
                acc += g * field(grid.xi(i) - eta);
            }
            dst[i] += norm * acc;
        }
    };

    std::vector<double> tmp(n, 0.0);
    convolve(t, [&](double x) { return u0(0.0, x); }, tmp);
    for (int i = 0; i < n; ++i) out[i] = std::exp(-mp.delta * t) * tmp[i];

    // Duhamel term, composite Simpson in s; the s = t endpoint (tau -> 0) is the
    // identity convolution
    const int np = s_panels + (s_panels % 2);  // even
    std::vector<double> slice(n);
    for (int j = 0; j <= np; ++j) {
        const double s = t * j / np;
        const double w = (j == 0 || j == np) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        std::fill(slice.begin(), slice.end(), 0.0);
        if (j == np) {
            for (int i = 0; i < n; ++i) slice[i] = P(s - mp.r, grid.xi(i) - c * mp.r);
        } else {
            convolve(t - s, [&](double x) { return P(s - mp.r, x - c * mp.r); }, slice);
        }
        const double coef = w * (t / np) / 3.0 * std::exp(-mp.delta * (t - s));
        for (int i = 0; i < n; ++i) out[i] += coef * slice[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boundedness check |utilde| <= u+ (grid version of the comparison lemma).
// Steps both solvers in lockstep and tracks the minimum of u+ - |utilde|.
// ---------------------------------------------------------------------------

struct BoundednessReport {
    double min_gap = std::numeric_limits<double>::infinity();
    double t_at = 0.0;
    double xi_at = 0.0;
    bool pass = false;
};

inline BoundednessReport check_boundedness(DelayedFieldSolver& tilde, DelayedFieldSolver& plus,
                                           double t_end, double tol = 1e-8) {
    if (std::abs(tilde.dt() - plus.dt()) > 1e-15)
        throw ConfigError("check_boundedness: solvers must share dt");
    BoundednessReport rep;
    auto scan = [&]() {
        const auto& ut = tilde.state();
        const auto& up = plus.state();
        for (int i = 0; i < tilde.grid().n; ++i) {
            const double gap = up[i] - std::abs(ut[i]);
            if (gap < rep.min_gap) {
                rep.min_gap = gap;
                rep.t_at = tilde.t();
                rep.xi_at = tilde.grid().xi(i);
            }
        }
    };
    scan();
    const long n_steps = std::lround(std::ceil(t_end / tilde.dt() - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        tilde.step();
        plus.step();
        scan();
    }
    rep.pass = rep.min_gap >= -tol;
    return rep;
}

} // namespace blowfly

#endif
