#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ned/errors.hpp"

namespace ned {

/// Monotone cubic Hermite interpolant (Fritsch-Carlson slope limiting).
/// Preserves monotonicity of the data, is C^1, and exposes first and second
/// derivatives of the piecewise cubic. Evaluation slightly outside the node
/// hull continues the boundary interval's cubic.
class PchipSpline {
public:
    PchipSpline() = default;

    PchipSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw DomainError("pchip needs >= 2 nodes and matching value count");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw DomainError("pchip nodes must be strictly increasing");
        m_.assign(n, 0.0);
        if (n == 2) {
            m_[0] = m_[1] = slope(0);
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double d0 = slope(i - 1), d1 = slope(i);
            if (d0 * d1 <= 0.0) {
                m_[i] = 0.0;
            } else {
                const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
                const double w1 = 2.0 * h1 + h0, w2 = h1 + 2.0 * h0;
                m_[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        m_[0] = edge_slope(x_[1] - x_[0], x_[2] - x_[1], slope(0), slope(1));
        m_[n - 1] = edge_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3],
                               slope(n - 2), slope(n - 3));
    }

    double operator()(double x) const {
        const auto [i, s] = locate(x);
        if (x == x_[i + 1]) return y_[i + 1];  // node values reproduce exactly
        const auto c = coeffs(i);
        return y_[i] + s * (c.c1 + s * (c.c2 + s * c.c3));
    }

    double prime(double x) const {
        const auto [i, s] = locate(x);
        const auto c = coeffs(i);
        return c.c1 + s * (2.0 * c.c2 + 3.0 * s * c.c3);
    }

    double double_prime(double x) const {
        const auto [i, s] = locate(x);
        const auto c = coeffs(i);
        return 2.0 * c.c2 + 6.0 * s * c.c3;
    }

    const std::vector<double>& xs() const noexcept { return x_; }
    const std::vector<double>& ys() const noexcept { return y_; }

private:
    struct Cubic {
        double c1, c2, c3;
    };

    double slope(std::size_t i) const { return (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]); }

    // Non-centered three-point end slope, limited to keep the end interval
    // shape-preserving.
    static double edge_slope(double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    }

    std::pair<std::size_t, double> locate(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        return {i, x - x_[i]};
    }

    Cubic coeffs(std::size_t i) const {
        const double h = x_[i + 1] - x_[i];
        const double d = slope(i);
        return {m_[i], (3.0 * d - 2.0 * m_[i] - m_[i + 1]) / h,
                (m_[i] + m_[i + 1] - 2.0 * d) / (h * h)};
    }

    std::vector<double> x_, y_, m_;
};

}  // namespace ned
