#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "ned/errors.hpp"
#include "ned/market.hpp"
#include "ned/numerics/interp.hpp"

namespace ned {

/// Which agent's fixed point a policy represents. ConstantRate is the
/// classical Merton benchmark at exponential discounting with rate rho.
struct AgentKind {
    enum class Kind { ConstantRate, PreCommitment, Naive, Sophisticated };

    Kind kind;
    double rho;  // ConstantRate only

    static AgentKind constant_rate(double rho);
    static AgentKind pre_commitment() { return {Kind::PreCommitment, 0.0}; }
    static AgentKind naive() { return {Kind::Naive, 0.0}; }
    static AgentKind sophisticated() { return {Kind::Sophisticated, 0.0}; }

    std::string name() const;
};

/// Immutable time grid + values with shape-preserving cubic interpolation.
class TimeSeries {
public:
    TimeSeries(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const { return spline_(t); }
    double derivative(double t) const { return spline_.prime(t); }

    const std::vector<double>& times() const noexcept { return spline_.xs(); }
    const std::vector<double>& values() const noexcept { return spline_.ys(); }

private:
    PchipSpline spline_;
};

/// A solved consumption/portfolio rule. `alpha` is the consumption
/// coefficient of the value function (alpha, alpha^P, alpha^N or alpha^S);
/// `beta` is the exponential-utility wealth slope and is absent otherwise.
/// `portfolio_coeff` is the constant weight vector for log/power utility and
/// the Sigma^{-1}(mu - mu0 1) direction, to be scaled by 1/(gamma beta(t) W),
/// for exponential utility.
struct Policy {
    UtilitySpec utility;
    AgentKind agent;
    Eigen::VectorXd portfolio_coeff;
    TimeSeries alpha;
    std::optional<TimeSeries> beta;
    double horizon;
};

/// Optimal portfolio weights. Constant in (t, W) and equal across agents for
/// log and power utility; proportional to 1/(gamma beta(t) W) for
/// exponential utility (undefined at W = 0).
Eigen::VectorXd portfolio_rule(const UtilitySpec& utility, const MarketModel& market,
                               double t, double T, double W);

/// c(W, t) under `policy`: W/alpha (log), alpha^{-1/(1-gamma)} W (power), or
/// alpha + beta W - ln(a gamma beta)/gamma (exponential, may be negative).
double consumption_from_policy(const Policy& policy, double W, double t);

/// Portfolio weights under `policy`, using its stored coefficient vector.
Eigen::VectorXd portfolio_from_policy(const Policy& policy, double W, double t);

}  // namespace ned
