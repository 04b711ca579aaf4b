#include "ned/closed_policies.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "ned/numerics/quadrature.hpp"
#include "ned/numerics/special.hpp"

namespace ned {
namespace {

void require_horizon(double t, double T) {
    if (!(T >= 0.0) || !std::isfinite(T) || !(t >= 0.0 && t <= T))
        throw DomainError("times must satisfy 0 <= t <= T with finite T");
}

void require_bequest(double a) {
    if (!(a >= 0.0) || !std::isfinite(a))
        throw DomainError("bequest weight a must be finite and >= 0");
}

void require_positive_wealth(double W) {
    if (!(W > 0.0))
        throw DomainError("consumption rules need strictly positive wealth");
}

void require_power_exponent(double gamma) {
    if (!std::isfinite(gamma) || gamma >= 1.0 || gamma == 0.0)
        throw DomainError("power utility needs gamma < 1, gamma != 0");
}

double checked_inverse(double denom, double W, const char* rule) {
    if (!(denom > 0.0))
        throw DomainError("boundary-singularity",
                          std::string(rule) + " has no remaining horizon and no bequest weight");
    return W / denom;
}

std::vector<double> uniform_grid(double T, int nodes) {
    if (nodes < 11) throw DomainError("coefficient grids need at least 11 nodes");
    std::vector<double> t(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) t[static_cast<std::size_t>(i)] = T * i / (nodes - 1);
    t.back() = T;
    return t;
}

// y(t) = a^{ex} e^{-nu (T-t)} + (T-t) phi1(nu (T-t)), nu = (rho - delta_p)/(1-gamma).
double power_y_constant(double rho, const MarketModel& market, double gamma, double a,
                        double t, double T) {
    const double ex = 1.0 / (1.0 - gamma);
    const double nu = (rho - delta_p(market, gamma)) * ex;
    const double tau = T - t;
    return std::pow(a, ex) * std::exp(-nu * tau) + tau * phi1(nu * tau);
}

double power_y_precommit(const DiscountModel& discount, const MarketModel& market,
                         double gamma, double a, double t, double T) {
    const double ex = 1.0 / (1.0 - gamma);
    const double dp = delta_p(market, gamma);
    const double theta_t = discount.factor(t);
    const double terminal =
        std::pow(a * discount.factor(T) / theta_t * std::exp(dp * (T - t)), ex);
    const double integral = integrate(
        [&](double s) {
            return std::pow(discount.factor(s) / theta_t * std::exp(dp * (s - t)), ex);
        },
        t, T);
    return terminal + integral;
}

double power_y_naive(const DiscountModel& discount, const MarketModel& market, double gamma,
                     double a, double t, double T) {
    const double ex = 1.0 / (1.0 - gamma);
    const double dp = delta_p(market, gamma);
    const double tau = T - t;
    const double terminal = std::pow(a * discount.factor(tau) * std::exp(dp * tau), ex);
    const double integral = integrate(
        [&](double u) { return std::pow(discount.factor(u) * std::exp(dp * u), ex); }, 0.0,
        tau);
    return terminal + integral;
}

// alpha(t) = -(1/gamma) int_t^T e^{-mu0 (s-t)} (beta(t)/beta(s)) (delta_e(s) - r(.)) ds
// evaluated on a uniform grid; `rate` receives (s, t).
TimeSeries exp_alpha_grid(const MarketModel& market, double gamma, double a, double T,
                          int nodes, const std::function<double(double, double)>& rate) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw DomainError("exponential utility needs gamma > 0");
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("exponential utility needs bequest weight a > 0");
    require_horizon(0.0, T);
    const auto spec = UtilitySpec::exponential(gamma, a);
    const double mu0 = market.mu0();
    auto grid = uniform_grid(T, nodes);
    std::vector<double> alpha(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const double beta_t = beta_exp(market, t, T);
        alpha[i] = -integrate(
                       [&](double s) {
                           return std::exp(-mu0 * (s - t)) * beta_t / beta_exp(market, s, T) *
                                  (delta_e(market, spec, s, T) - rate(s, t));
                       },
                       t, T) /
                   gamma;
    }
    return TimeSeries(std::move(grid), std::move(alpha));
}

TimeSeries beta_grid(const MarketModel& market, double T, int nodes) {
    auto grid = uniform_grid(T, nodes);
    std::vector<double> beta(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) beta[i] = beta_exp(market, grid[i], T);
    return TimeSeries(std::move(grid), std::move(beta));
}

void require_rate(double rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw DomainError("constant benchmark rate must satisfy rho >= 0");
}

}  // namespace

double log_constant_alpha(double rho, double a, double t, double T) {
    require_rate(rho);
    require_bequest(a);
    require_horizon(t, T);
    const double tau = T - t;
    return tau * phi1(rho * tau) + a * std::exp(-rho * tau);
}

double log_precommit_consumption(const DiscountModel& discount, double a, double t, double T,
                                 double W) {
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    const double denom = a * discount.factor(T) + discount.factor_integral(t, T);
    return checked_inverse(denom, discount.factor(t) * W, "pre-commitment log rule");
}

double log_naive_consumption(const DiscountModel& discount, double a, double t, double T,
                             double W) {
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    const double tau = T - t;
    const double denom = a * discount.factor(tau) + discount.factor_integral(0.0, tau);
    return checked_inverse(denom, W, "naive log rule");
}

double log_sophisticated_consumption(const DiscountModel& discount, double a, double t,
                                     double T, double W) {
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    // Equilibrium coefficient alpha^S(t) = a theta(T-t) + int_0^{T-t} theta;
    // the closed form of the linear alpha^S ODE.
    const double tau = T - t;
    const double alpha_s = a * discount.factor(tau) + discount.factor_integral(0.0, tau);
    return checked_inverse(alpha_s, W, "sophisticated log rule");
}

double power_constant_consumption(double rho, const MarketModel& market, double gamma,
                                  double a, double t, double T, double W) {
    require_rate(rho);
    require_power_exponent(gamma);
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    return checked_inverse(power_y_constant(rho, market, gamma, a, t, T), W,
                           "constant-rate power rule");
}

double power_precommit_consumption(const DiscountModel& discount, const MarketModel& market,
                                   double gamma, double a, double t, double T, double W) {
    require_power_exponent(gamma);
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    return checked_inverse(power_y_precommit(discount, market, gamma, a, t, T), W,
                           "pre-commitment power rule");
}

double power_naive_consumption(const DiscountModel& discount, const MarketModel& market,
                               double gamma, double a, double t, double T, double W) {
    require_power_exponent(gamma);
    require_bequest(a);
    require_horizon(t, T);
    require_positive_wealth(W);
    return checked_inverse(power_y_naive(discount, market, gamma, a, t, T), W,
                           "naive power rule");
}

ExpCoeffs exp_constant_coeffs(double rho, const MarketModel& market, double gamma, double a,
                              double T, int nodes) {
    require_rate(rho);
    auto alpha = exp_alpha_grid(market, gamma, a, T, nodes,
                                [rho](double, double) { return rho; });
    return {std::move(alpha), beta_grid(market, T, nodes)};
}

TimeSeries exp_precommit_alpha(const DiscountModel& discount, const MarketModel& market,
                               double gamma, double a, double T, int nodes) {
    return exp_alpha_grid(market, gamma, a, T, nodes,
                          [&discount](double s, double) { return discount.rate(s); });
}

TimeSeries exp_naive_alpha(const DiscountModel& discount, const MarketModel& market,
                           double gamma, double a, double T, int nodes) {
    return exp_alpha_grid(market, gamma, a, T, nodes,
                          [&discount](double s, double t) { return discount.rate(s - t); });
}

Policy closed_policy(const UtilitySpec& utility, const AgentKind& agent,
                     const DiscountModel& discount, const MarketModel& market, double T,
                     int nodes) {
    require_horizon(0.0, T);
    if (!(T > 0.0)) throw DomainError("policy horizon must be positive");

    if (agent.kind == AgentKind::Kind::Sophisticated &&
        utility.kind != UtilitySpec::Kind::Log)
        throw DomainError("unsupported-agent",
                          "sophisticated " + utility.name() +
                              " policies come from the fixed-point solver, not closed forms");

    switch (utility.kind) {
        case UtilitySpec::Kind::Log: {
            auto grid = uniform_grid(T, nodes);
            std::vector<double> alpha(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double t = grid[i];
                const double tau = T - t;
                switch (agent.kind) {
                    case AgentKind::Kind::ConstantRate:
                        alpha[i] = log_constant_alpha(agent.rho, utility.a, t, T);
                        break;
                    case AgentKind::Kind::PreCommitment:
                        alpha[i] = (utility.a * discount.factor(T) +
                                    discount.factor_integral(t, T)) /
                                   discount.factor(t);
                        break;
                    case AgentKind::Kind::Naive:
                    case AgentKind::Kind::Sophisticated:
                        alpha[i] = utility.a * discount.factor(tau) +
                                   discount.factor_integral(0.0, tau);
                        break;
                }
            }
            return Policy{utility, agent, market.merton_ratio(),
                          TimeSeries(std::move(grid), std::move(alpha)), std::nullopt, T};
        }
        case UtilitySpec::Kind::Power: {
            auto grid = uniform_grid(T, nodes);
            std::vector<double> alpha(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double t = grid[i];
                double y = 0.0;
                switch (agent.kind) {
                    case AgentKind::Kind::ConstantRate:
                        y = power_y_constant(agent.rho, market, utility.gamma, utility.a, t, T);
                        break;
                    case AgentKind::Kind::PreCommitment:
                        y = power_y_precommit(discount, market, utility.gamma, utility.a, t, T);
                        break;
                    case AgentKind::Kind::Naive:
                        y = power_y_naive(discount, market, utility.gamma, utility.a, t, T);
                        break;
                    case AgentKind::Kind::Sophisticated:
                        break;  // rejected above
                }
                alpha[i] = std::pow(y, 1.0 - utility.gamma);
            }
            return Policy{utility, agent, market.merton_ratio() / (1.0 - utility.gamma),
                          TimeSeries(std::move(grid), std::move(alpha)), std::nullopt, T};
        }
        case UtilitySpec::Kind::Exponential: {
            TimeSeries alpha = [&] {
                switch (agent.kind) {
                    case AgentKind::Kind::ConstantRate:
                        return exp_constant_coeffs(agent.rho, market, utility.gamma, utility.a,
                                                   T, nodes)
                            .alpha;
                    case AgentKind::Kind::PreCommitment:
                        return exp_precommit_alpha(discount, market, utility.gamma, utility.a,
                                                   T, nodes);
                    default:
                        return exp_naive_alpha(discount, market, utility.gamma, utility.a, T,
                                               nodes);
                }
            }();
            return Policy{utility, agent, market.merton_ratio(), std::move(alpha),
                          beta_grid(market, T, nodes), T};
        }
    }
    throw DomainError("unknown utility kind");
}

}  // namespace ned
