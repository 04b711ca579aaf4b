#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ned/discount.hpp"
#include "ned/market.hpp"
#include "ned/policy.hpp"

namespace ned {

/// Knobs for the sophisticated-agent coefficient solvers.
struct SolverConfig {
    int time_nodes = 1001;       // uniform grid nodes on [0, T]
    double fp_tolerance = 1e-8;  // sup-norm threshold on the undamped update
    int fp_max_iters = 200;
    double damping = 0.5;         // relaxation weight in (0, 1]
    double ode_tolerance = 1e-10; // local error tolerance of the adaptive integrator
};

/// Converged coefficient grid plus fixed-point diagnostics. `beta` is set for
/// exponential utility only. `residuals[k]` is the sup-norm of the k-th
/// undamped sweep update; direct (non-iterative) solves report none.
struct SolverResult {
    TimeSeries alpha;
    std::optional<TimeSeries> beta;
    int iterations = 0;
    std::vector<double> residuals;
};

/// Equilibrium log-utility coefficient: integrates
///   d(alpha)/dt = r(T-t) alpha - theta(T-t) - r(T-t) int_0^{T-t} theta
/// backward from alpha(T) = a. The nonlocal term is policy independent here,
/// so no fixed point is needed; theta r = -theta' collapses its quadrature.
SolverResult solve_log_sophisticated(const DiscountModel& discount, double a, double T,
                                     const SolverConfig& config = {});

/// Equilibrium power-utility coefficient via damped Picard sweeps: each sweep
/// freezes the nonlocal term and the equilibrium wealth drift at the current
/// iterate, integrates
///   d(alpha)/dt = (r(T-t) - delta_p) alpha - (1-gamma) alpha^{-gamma/(1-gamma)} + K(t)
/// backward from alpha(T) = a, then relaxes by `damping`. Consumption is
/// c = alpha^{-1/(1-gamma)} W. The wealth-ratio moment inside K uses the exact
/// log-normal drift mu0 + M/(2(1-gamma)) - lambda(tau).
SolverResult solve_power_sophisticated(const DiscountModel& discount,
                                       const MarketModel& market, double gamma, double a,
                                       double T, const SolverConfig& config = {});

/// Equilibrium exponential-utility coefficients. The wealth slope is imposed
/// as the horizon-only Merton beta (then residual-checked against its
/// Riccati), and alpha solves
///   d(alpha)/dt = beta alpha + [delta_e(t) + A(t) - r(T-t)] / gamma
/// backward from alpha(T) = 0 by the same damped Picard scheme, where A is
/// the nonlocal coefficient with the Gaussian exponential moment folded in
/// closed form (exp(M (s-t) / 2)).
SolverResult solve_exp_sophisticated(const DiscountModel& discount,
                                     const MarketModel& market, double gamma, double a,
                                     double T, const SolverConfig& config = {});

/// Nonlocal kernel quadrature int_t^T theta(s-t) [r(s-t) - r(T-t)] H(s) ds.
/// With `subtract_horizon_rate` false the r(T-t) term is dropped, giving the
/// bequest-free variant int theta(s-t) r(s-t) H(s) ds. H must be sampled on a
/// grid spanning [0, T].
double evaluate_k_term(const DiscountModel& discount, const TimeSeries& H, double t,
                       double T, bool subtract_horizon_rate = true);

/// Sup-norm of the Riccati defect d(beta)/dt - (beta^2 - mu0 beta) over the
/// interior grid nodes, using fourth-order finite differences on the stored
/// values. Requires a uniform grid with at least 5 nodes.
double beta_riccati_residual(const MarketModel& market, const TimeSeries& beta);

/// Solves the sophisticated policy for any utility family and wraps it in the
/// common Policy shape used by the closed forms.
Policy sophisticated_policy(const UtilitySpec& utility, const DiscountModel& discount,
                            const MarketModel& market, double T,
                            const SolverConfig& config = {});

/// {"iterations": ..., "residuals": [...], "grid": {...}} for logs and CLI
/// output files.
std::string solver_diagnostics_json(const SolverResult& result);

}  // namespace ned
