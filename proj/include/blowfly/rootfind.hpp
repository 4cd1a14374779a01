#ifndef BLOWFLY_ROOTFIND_HPP
#define BLOWFLY_ROOTFIND_HPP

#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"

namespace blowfly {

// Bisection on a bracketed sign change; the bracket must satisfy f(lo)*f(hi) <= 0.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw NumericalError("bisect: root not bracketed");
    for (int i = 0; i < max_iter; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0 || hi - lo < tol * (1.0 + std::abs(mid))) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// Expand [lo, hi] rightward until f changes sign; returns the bracket end.
// Throws if no sign change within max_expand doublings.
template <class F>
std::pair<double, double> expand_bracket(F&& f, double lo, double hi, int max_expand = 60) {
    double flo = f(lo);
    double w = hi - lo;
    for (int i = 0; i < max_expand; ++i) {
        if (flo * f(hi) <= 0.0) return {lo, hi};
        lo = hi;
        flo = f(lo);
        w *= 2.0;
        hi = lo + w;
    }
    throw NumericalError("expand_bracket: no sign change found");
}

// Damped Newton for a 2x2 system. fj fills F and the Jacobian at (x, y).
// Steps are halved while the residual norm fails to decrease.
struct Newton2Result {
    double x, y;
    double residual;  // max-norm of F at the returned point
    int iterations;
};

template <class FJ>
Newton2Result newton2(FJ&& fj, double x, double y, double tol = 1e-13, int max_iter = 100) {
    double F0, F1, J00, J01, J10, J11;
    fj(x, y, F0, F1, J00, J01, J10, J11);
    double res = std::max(std::abs(F0), std::abs(F1));
    for (int it = 0; it < max_iter; ++it) {
        if (res < tol) return {x, y, res, it};
        const double det = J00 * J11 - J01 * J10;
        if (det == 0.0 || !std::isfinite(det))
            throw NumericalError("newton2: singular Jacobian, residual " + std::to_string(res));
        double dx = -(F0 * J11 - F1 * J01) / det;
        double dy = -(J00 * F1 - J10 * F0) / det;
        double step = 1.0;
        double nx = x, ny = y, nres = res;
        double G0, G1, K00, K01, K10, K11;
        for (int h = 0; h < 40; ++h) {
            nx = x + step * dx;
            ny = y + step * dy;
            fj(nx, ny, G0, G1, K00, K01, K10, K11);
            nres = std::max(std::abs(G0), std::abs(G1));
            if (std::isfinite(nres) && nres < res) break;
            step *= 0.5;
        }
        x = nx; y = ny;
        F0 = G0; F1 = G1;
        J00 = K00; J01 = K01; J10 = K10; J11 = K11;
        if (!(nres < res) && nres >= tol)
            throw NumericalError("newton2: stalled, residual " + std::to_string(nres));
        res = nres;
    }
    if (res >= tol)
        throw NumericalError("newton2: no convergence, residual " + std::to_string(res));
    return {x, y, res, max_iter};
}

} // namespace blowfly

#endif
