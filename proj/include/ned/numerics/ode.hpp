#pragma once

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ned/errors.hpp"

namespace ned {

/// Integrates the scalar ODE y' = f(t, y) through every node of `grid`
/// (strictly monotone, increasing or decreasing) with an adaptive
/// Dormand-Prince 5(4) stepper, returning y at each node. grid.front()
/// carries the initial value y0.
template <class F>
std::vector<double> ode_solve_grid(F&& f, double y0, const std::vector<double>& grid,
                                   double abs_tol = 1e-12, double rel_tol = 1e-12) {
    namespace odeint = boost::numeric::odeint;
    using state = std::vector<double>;

    if (grid.size() < 2) throw DomainError("ode grid needs at least two nodes");
    const bool forward = grid.back() > grid.front();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const bool inc = grid[i] > grid[i - 1];
        if (inc != forward) throw DomainError("ode grid must be strictly monotone");
    }

    auto rhs = [&f](const state& y, state& dydt, double t) { dydt[0] = f(t, y[0]); };

    std::vector<double> out;
    out.reserve(grid.size());
    state y{y0};
    auto stepper = odeint::make_controlled(abs_tol, rel_tol,
                                           odeint::runge_kutta_dopri5<state>());
    const double dt0 = (grid[1] - grid[0]) / 8.0;
    try {
        odeint::integrate_times(stepper, rhs, y, grid.begin(), grid.end(), dt0,
                                [&out](const state& s, double) { out.push_back(s[0]); });
    } catch (const std::exception& e) {
        throw SolverError("ode-step", std::string("adaptive ODE step failed: ") + e.what());
    }
    for (double v : out)
        if (!std::isfinite(v)) throw SolverError("ode-step", "ODE solution is not finite");
    return out;
}

/// Classic fixed-step RK4 through the (uniform or non-uniform) nodes of
/// `grid`, one step per interval. Suited to right-hand sides that
/// interpolate tabulated data, where adaptive error control is wasted.
template <class F>
std::vector<double> rk4_grid(F&& f, double y0, const std::vector<double>& grid) {
    if (grid.size() < 2) throw DomainError("ode grid needs at least two nodes");
    std::vector<double> out(grid.size());
    out[0] = y0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double t = grid[i - 1];
        const double h = grid[i] - grid[i - 1];
        const double y = out[i - 1];
        const double k1 = f(t, y);
        const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = f(t + h, y + h * k3);
        out[i] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return out;
}

}  // namespace ned
