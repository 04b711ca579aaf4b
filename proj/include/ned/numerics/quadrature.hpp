#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ned/errors.hpp"

namespace ned {

/// Adaptive Gauss-Kronrod (15-point) integration of f over the finite
/// interval [a, b]. Returns 0 for an empty interval; a > b integrates with
/// the sign flipped.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, 15, tol, &err);
    return sign * v;
}

/// Composite Simpson rule for samples y on a uniform grid with spacing h.
/// An odd interval count is finished with the Simpson 3/8 rule; a single
/// interval falls back to the trapezoid.
inline double simpson_uniform(const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    if (n < 2) return 0.0;
    std::size_t intervals = n - 1;
    if (intervals == 1) return 0.5 * h * (y[0] + y[1]);

    double total = 0.0;
    std::size_t even_end = intervals;  // intervals covered by the 1/3 rule
    if (intervals % 2 == 1) {
        if (intervals == 3) {
            return 3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]);
        }
        even_end = intervals - 3;
        const std::size_t i = even_end;  // 3/8 rule on the last three intervals
        total += 3.0 * h / 8.0 * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]);
    }
    double s = y[0] + y[even_end];
    for (std::size_t i = 1; i < even_end; i += 2) s += 4.0 * y[i];
    for (std::size_t i = 2; i < even_end; i += 2) s += 2.0 * y[i];
    total += h / 3.0 * s;
    return total;
}

/// Cumulative trapezoid integral of samples y on a uniform grid: out[i] is
/// the integral from the grid start to node i, out[0] = 0.
inline std::vector<double> cumtrapz_uniform(const std::vector<double>& y, double h) {
    std::vector<double> out(y.size(), 0.0);
    for (std::size_t i = 1; i < y.size(); ++i)
        out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
    return out;
}

}  // namespace ned
