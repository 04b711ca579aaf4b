#pragma once

#include <cmath>
#include <cstddef>

namespace ned {

/// Golden-section minimization of a unimodal f over [lo, hi]. Ties keep the
/// left subinterval, so among near-equal minima the smaller argument wins.
/// Returns the midpoint of the final bracket.
template <class F>
double golden_min(F&& f, double lo, double hi, double x_tol = 1e-10,
                  std::size_t max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;  // 1/phi
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (std::size_t it = 0; it < max_iter && (b - a) > x_tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace ned
