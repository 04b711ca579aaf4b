#pragma once

#include <cmath>

namespace ned {

/// (1 - e^{-x}) / x extended continuously by 1 at x = 0.
inline double phi1(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x + x * x / 6.0;
    return -std::expm1(-x) / x;
}

}  // namespace ned
