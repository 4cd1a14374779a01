#ifndef BLOWFLY_GRID_HPP
#define BLOWFLY_GRID_HPP

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace blowfly {

// Uniform grid on [-L, L] with n points, dx = 2L/(n-1).
struct Grid1D {
    double L;
    int n;
    double dx;

    Grid1D(double L_, int n_) : L(L_), n(n_), dx(2.0 * L_ / (n_ - 1)) {
        if (n < 3) throw ConfigError("Grid1D: need at least 3 points");
        if (L <= 0.0) throw ConfigError("Grid1D: L must be positive");
    }

    double xi(int i) const { return -L + i * dx; }

    std::vector<double> coords() const {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = xi(i);
        return x;
    }
};

// Largest stable explicit-Euler step under the diffusive and advective limits,
// rounded down so that dt divides r exactly (when r > 0).
inline double stable_dt(const Grid1D& g, double D, double adv, double r, double cfl = 0.4) {
    double dt = cfl * g.dx * g.dx / (2.0 * D);
    if (adv != 0.0) dt = std::min(dt, cfl * g.dx / std::abs(adv));
    if (r > 0.0) {
        const long m = std::max<long>(1, static_cast<long>(std::ceil(r / dt - 1e-12)));
        dt = r / m;
    }
    return dt;
}

} // namespace blowfly

#endif
