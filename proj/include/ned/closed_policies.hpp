#pragma once

#include "ned/discount.hpp"
#include "ned/market.hpp"
#include "ned/policy.hpp"

namespace ned {

/// Merton consumption coefficient at constant rate rho:
/// alpha(t) = [1 - (1 - a rho) e^{-rho (T-t)}]/rho, extended by
/// alpha = (T-t) + a at rho = 0. Consumption is c = W/alpha.
double log_constant_alpha(double rho, double a, double t, double T);

/// c^P = theta(t) W / (a theta(T) + int_t^T theta(s) ds).
double log_precommit_consumption(const DiscountModel& discount, double a, double t,
                                 double T, double W);

/// c^N = W / (a theta(T-t) + int_0^{T-t} theta(u) du).
double log_naive_consumption(const DiscountModel& discount, double a, double t,
                             double T, double W);

/// c^S from the equilibrium coefficient alpha^S(t) = a theta(T-t) +
/// int_0^{T-t} theta(u) du; coincides with the naive rule.
double log_sophisticated_consumption(const DiscountModel& discount, double a, double t,
                                     double T, double W);

/// Merton consumption at constant rate rho for power utility:
/// c = W / y(t), y(t) = a^{1/(1-gamma)} e^{-nu (T-t)} + (1 - e^{-nu (T-t)})/nu
/// with nu = (rho - delta_p)/(1-gamma); the rho = delta_p degeneracy is the
/// continuous extension y = a^{1/(1-gamma)} + (T-t).
double power_constant_consumption(double rho, const MarketModel& market, double gamma,
                                  double a, double t, double T, double W);

/// c^P = W / y^P(t) with
/// y^P(t) = a^{ex} (theta(T)/theta(t) e^{delta_p (T-t)})^{ex}
///        + int_t^T (theta(s)/theta(t) e^{delta_p (s-t)})^{ex} ds, ex = 1/(1-gamma).
double power_precommit_consumption(const DiscountModel& discount, const MarketModel& market,
                                   double gamma, double a, double t, double T, double W);

/// c^N: same kernel with theta(s-t), theta(T-t) in place of the ratios.
double power_naive_consumption(const DiscountModel& discount, const MarketModel& market,
                               double gamma, double a, double t, double T, double W);

/// Exponential-utility coefficient pair on a uniform grid.
struct ExpCoeffs {
    TimeSeries alpha;
    TimeSeries beta;
};

/// Merton coefficients at constant rate rho for exponential utility:
/// beta from beta_exp and
/// alpha(t) = -(1/gamma) int_t^T e^{-mu0 (s-t)} (beta(t)/beta(s)) (delta_e(s) - rho) ds.
ExpCoeffs exp_constant_coeffs(double rho, const MarketModel& market, double gamma,
                              double a, double T, int nodes = 1001);

/// alpha^P: the same kernel with rho replaced by r(s).
TimeSeries exp_precommit_alpha(const DiscountModel& discount, const MarketModel& market,
                               double gamma, double a, double T, int nodes = 1001);

/// alpha^N: the same kernel with rho replaced by r(s - t).
TimeSeries exp_naive_alpha(const DiscountModel& discount, const MarketModel& market,
                           double gamma, double a, double T, int nodes = 1001);

/// Assembles the closed-form Policy for the given utility/agent pair on a
/// uniform grid of `nodes` time points. Sophisticated power and exponential
/// agents have no closed form and are served by the fixed-point solver.
Policy closed_policy(const UtilitySpec& utility, const AgentKind& agent,
                     const DiscountModel& discount, const MarketModel& market, double T,
                     int nodes = 1001);

}  // namespace ned
