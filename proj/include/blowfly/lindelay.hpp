#ifndef BLOWFLY_LINDELAY_HPP
#define BLOWFLY_LINDELAY_HPP

#include <complex>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "charspec.hpp"
#include "delayode.hpp"
#include "fft.hpp"
#include "pde.hpp"
#include "ratefit.hpp"

namespace blowfly {

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// Fourier treatment of the linear comparison equation
//   u_t - D u_xixi + a0 u_xi + a1 u = p e^{-lambda c r} u(t-r, xi-cr)
// on a periodic box.  Each mode obeys uhat' + A(eta) uhat = B(eta) uhat(t-r).
// ---------------------------------------------------------------------------

struct PeriodicGrid {
    double L;
    int n;   // power of two
    double dx;

    PeriodicGrid(double L_, int n_) : L(L_), n(n_), dx(2.0 * L_ / n_) {
        if (L <= 0.0) throw ConfigError("PeriodicGrid: L must be positive");
        if (n < 4 || (n & (n - 1)) != 0)
            throw ConfigError("PeriodicGrid: n must be a power of two >= 4");
    }

    double xi(int i) const { return -L + i * dx; }
    double eta(int k) const {  // signed discrete frequency
        const int ks = (k < n / 2) ? k : k - n;
        return M_PI * ks / L;
    }
};

struct ModeSymbols {
    cdouble A;
    cdouble B;
    cdouble B_bar;  // B e^{A r}
};

inline ModeSymbols mode_coefficients(const WaveSpec& ws, const ModelParams& mp, double eta) {
    const AntiweightCoefficients co(ws, mp);
    ModeSymbols s;
    s.A = cdouble(mp.D * eta * eta + co.a1, co.a0 * eta);
    s.B = mp.p * co.k_delay * std::exp(cdouble(0.0, -eta * ws.c * mp.r));
    s.B_bar = s.B * std::exp(s.A * mp.r);
    return s;
}

// Re A(eta) - |B| = D eta^2 + mu0, the per-mode spectral gap.
inline double mode_gap(const ModeSymbols& s) { return s.A.real() - std::abs(s.B); }

class SpectralSolver {
public:
    struct Config {
        PeriodicGrid grid;
        double dt;
        bool delay_off = false;  // drop the B coupling (pure drift-diffusion decay)
    };

    template <class History>
    SpectralSolver(const WaveSpec& ws, const ModelParams& mp, Config cfg, History u0)
        : grid_(cfg.grid), dt_(cfg.dt), r_(mp.r) {
        if (dt_ <= 0.0) throw ConfigError("spectral: dt must be positive");
        if (r_ > 0.0) {
            const double md = r_ / dt_;
            m_ = std::lround(md);
            if (m_ < 1 || std::abs(md - m_) > 1e-9 * std::max(1.0, md))
                throw ConfigError("spectral: dt must divide r exactly");
        }
        const int n = grid_.n;
        A_.resize(n);
        B_.resize(n);
        for (int k = 0; k < n; ++k) {
            const auto s = mode_coefficients(ws, mp, grid_.eta(k));
            A_[k] = s.A;
            B_[k] = cfg.delay_off ? cdouble(0.0, 0.0) : s.B;
        }
        std::vector<double> field(n);
        for (long i = 0; i <= m_; ++i) {
            const double s = (m_ == 0) ? 0.0 : -r_ + i * dt_;
            for (int j = 0; j < n; ++j) field[j] = u0(s, grid_.xi(j));
            slices_.push_back(fft_of_real(field));
        }
    }

    double t() const { return step_ * dt_; }
    double dt() const { return dt_; }
    const PeriodicGrid& grid() const { return grid_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    const std::vector<cdouble>& modes() const { return slices_.back(); }

    std::vector<double> field() const { return real_of_ifft(slices_.back()); }

    void step() {
        const int n = grid_.n;
        const auto& cur = slices_.back();
        std::vector<cdouble> next(n);
        const long i0 = step_;  // delayed slice absolute index (time t - r)
        for (int k = 0; k < n; ++k) {
            const cdouble z = cur[k];
            cdouble d0, dh, d1;
            if (m_ == 0) {
                d0 = z;
            } else {
                d0 = slice_at(i0)[k];
                d1 = slice_at(i0 + 1)[k];
                dh = delayed_half(i0, k);
            }
            const cdouble A = A_[k], B = B_[k];
            auto f = [&](const cdouble& y, const cdouble& yd) { return -A * y + B * yd; };
            cdouble k1, k2, k3, k4;
            if (m_ == 0) {
                k1 = f(z, z);
                const cdouble y2 = z + 0.5 * dt_ * k1;
                k2 = f(y2, y2);
                const cdouble y3 = z + 0.5 * dt_ * k2;
                k3 = f(y3, y3);
                const cdouble y4 = z + dt_ * k3;
                k4 = f(y4, y4);
            } else {
                k1 = f(z, d0);
                k2 = f(z + 0.5 * dt_ * k1, dh);
                k3 = f(z + 0.5 * dt_ * k2, dh);
                k4 = f(z + dt_ * k3, d1);
            }
            next[k] = z + dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        slices_.push_back(std::move(next));
        ++step_;
        while (static_cast<long>(slices_.size()) > m_ + 4) {
            slices_.pop_front();
            ++base_;
        }
    }

    // Health checks per the discretization policy; returns new warnings (also
    // retained in warnings()).
    void check_health() {
        const auto& md = slices_.back();
        double total = 0.0, top = 0.0;
        const int n = grid_.n;
        for (int k = 0; k < n; ++k) {
            const double e = std::norm(md[k]);
            total += e;
            const int ks = (k < n / 2) ? k : n - k;
            if (ks >= (9 * (n / 2)) / 10) top += e;
        }
        if (total > 0.0 && top / total > 1e-6)
            add_warning("aliasing: top decile of modes carries > 1e-6 of energy at t = " +
                        std::to_string(t()));
        auto f = field();
        double edge = 0.0;
        for (int i = 0; i < n; ++i)
            if (std::abs(grid_.xi(i)) > 0.8 * grid_.L) edge = std::max(edge, std::abs(f[i]));
        if (edge > 1e-8)
            add_warning("domain: field above 1e-8 beyond 0.8 L at t = " + std::to_string(t()));
    }

private:
    const std::vector<cdouble>& slice_at(long abs_idx) const {
        return slices_[abs_idx - base_];
    }

    cdouble delayed_half(long i0, int k) const {
        // value at slice time i0 + 0.5, cubic in time, stencil kept inside the
        // smooth segment (solution kinks at slice indices that are multiples of m_)
        long lo = i0 - 1;
        if (m_ >= 3) {
            const long seg_lo = (i0 / m_) * m_;
            lo = std::max(seg_lo, std::min(lo, seg_lo + m_ - 3));
        }
        const long hi_base = base_ + static_cast<long>(slices_.size()) - 4;
        lo = std::max(base_, std::min(lo, hi_base));
        const double x = (i0 + 0.5) - lo;
        const cdouble z0 = slice_at(lo)[k], z1 = slice_at(lo + 1)[k],
                      z2 = slice_at(lo + 2)[k], z3 = slice_at(lo + 3)[k];
        const cdouble c1 = z1 - z0;
        const cdouble c2 = (z2 - 2.0 * z1 + z0) / 2.0;
        const cdouble c3 = (z3 - 3.0 * z2 + 3.0 * z1 - z0) / 6.0;
        return z0 + c1 * x + c2 * x * (x - 1.0) + c3 * x * (x - 1.0) * (x - 2.0);
    }

    void add_warning(const std::string& w) {
        if (warnings_.size() < 100) warnings_.push_back(w);
    }

    PeriodicGrid grid_;
    double dt_;
    double r_;
    long m_ = 0;
    long step_ = 0;
    long base_ = 0;
    std::vector<cdouble> A_, B_;
    std::deque<std::vector<cdouble>> slices_;
    std::vector<std::string> warnings_;
};

struct SpectralSeries {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> sup;
    std::vector<double> min_val;
    std::vector<double> final_field;
    std::vector<std::string> warnings;
};

template <class History>
SpectralSeries evolve_spectral(const WaveSpec& ws, const ModelParams& mp,
                               SpectralSolver::Config cfg, History u0, double t_end,
                               long sample_stride = 1) {
    SpectralSolver solver(ws, mp, cfg, u0);
    SpectralSeries out;
    out.dt = solver.dt();
    auto record = [&]() {
        auto f = solver.field();
        double sup = 0.0, mn = f[0];
        for (double v : f) {
            sup = std::max(sup, std::abs(v));
            mn = std::min(mn, v);
        }
        out.t.push_back(solver.t());
        out.sup.push_back(sup);
        out.min_val.push_back(mn);
    };
    record();
    const long n_steps = std::lround(std::ceil(t_end / solver.dt() - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        solver.step();
        if ((s + 1) % sample_stride == 0 || s + 1 == n_steps) {
            record();
            solver.check_health();
        }
    }
    out.final_field = solver.field();
    out.warnings = solver.warnings();
    return out;
}

// Closed-form spot check of the per-mode formula: for the exponential history
// uhat(s) = e^{-A s} z0 the variation-of-constants solution collapses to
// uhat(t) = e^{-A t} E(t) z0 with E the delayed exponential for B e^{A r}.
struct SpotCheckReport {
    double max_error = 0.0;
    int samples = 0;
};

inline SpotCheckReport spectral_spot_check(const WaveSpec& ws, const ModelParams& mp,
                                           const PeriodicGrid& grid, double dt,
                                           double t_end) {
    if (mp.r <= 0.0) throw PreconditionError("spectral_spot_check: needs r > 0");
    SpotCheckReport rep;
    for (int pick = 0; pick < 10; ++pick) {
        const int k = (pick * grid.n) / 32 % grid.n;
        const auto sym = mode_coefficients(ws, mp, grid.eta(k));
        // single-mode complex DDE, integrated by the same scheme as the solver
        const double md = mp.r / dt;
        const long m = std::lround(md);
        if (m < 1 || std::abs(md - m) > 1e-9 * std::max(1.0, md))
            throw ConfigError("spectral_spot_check: dt must divide r");
        std::vector<cdouble> zs;
        const long n_steps = std::lround(std::ceil(t_end / dt - 1e-12));
        for (long i = 0; i <= m; ++i)
            zs.push_back(std::exp(-sym.A * (-mp.r + i * dt)));
        auto at = [&](double idx) -> cdouble {
            const long i0 = static_cast<long>(std::floor(idx));
            if (idx == i0) return zs[i0];
            long lo = i0 - 1;
            if (m >= 3) {
                const long seg_lo = (i0 / m) * m;
                lo = std::max(seg_lo, std::min(lo, seg_lo + m - 3));
            }
            lo = std::max<long>(0, std::min<long>(lo, static_cast<long>(zs.size()) - 4));
            const double x = idx - lo;
            const cdouble z0 = zs[lo], z1 = zs[lo + 1], z2 = zs[lo + 2], z3 = zs[lo + 3];
            const cdouble c1 = z1 - z0;
            const cdouble c2 = (z2 - 2.0 * z1 + z0) / 2.0;
            const cdouble c3 = (z3 - 3.0 * z2 + 3.0 * z1 - z0) / 6.0;
            return z0 + c1 * x + c2 * x * (x - 1.0) + c3 * x * (x - 1.0) * (x - 2.0);
        };
        auto f = [&](const cdouble& y, const cdouble& yd) { return -sym.A * y + sym.B * yd; };
        for (long n = 0; n < n_steps; ++n) {
            const cdouble z = zs[m + n];
            const cdouble d0 = at(n), dh = at(n + 0.5), d1 = at(n + 1);
            const cdouble k1 = f(z, d0);
            const cdouble k2 = f(z + 0.5 * dt * k1, dh);
            const cdouble k3 = f(z + 0.5 * dt * k2, dh);
            const cdouble k4 = f(z + dt * k3, d1);
            zs.push_back(z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        const double tf = n_steps * dt;
        const cdouble closed =
            std::exp(-sym.A * tf) * delayed_exp_complex(sym.B_bar, mp.r, tf);
        rep.max_error = std::max(rep.max_error, std::abs(zs.back() - closed));
        ++rep.samples;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Rate measurement on a sup-norm series from the linear equation.
// ---------------------------------------------------------------------------

struct LinearDecayReport {
    RateFit fit;
    double mu0 = 0.0;        // c lambda + delta - D lambda^2 - p e^{-lambda c r}
    double mu_ratio = 0.0;   // fitted mu1 / mu0 (zero when mu0 = 0)
    bool decaying = false;
};

inline LinearDecayReport measure_linear_decay(const std::vector<double>& t,
                                              const std::vector<double>& sup,
                                              const WaveSpec& ws, const ModelParams& mp,
                                              FitWindow window) {
    const AntiweightCoefficients co(ws, mp);
    LinearDecayReport rep;
    rep.mu0 = co.a1 - mp.p * co.k_delay;
    // fit in shifted time 1 + t, matching the C (1+t)^{-1/2} e^{-mu1 t} form
    std::vector<double> ts(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) ts[i] = 1.0 + t[i];
    const FitWindow w{1.0 + window.t_lo, 1.0 + window.t_hi};
    if (ws.critical) {
        rep.fit = fit_decay(ts, sup, DecayModel::Algebraic, w);
        rep.decaying = rep.fit.alg_exponent < 0.0;
    } else {
        rep.fit = fit_decay(ts, sup, DecayModel::Mixed, w);
        rep.decaying = rep.fit.exp_rate > 0.0;
        if (rep.mu0 > 0.0) rep.mu_ratio = rep.fit.exp_rate / rep.mu0;
    }
    return rep;
}

} // namespace blowfly

#endif
