#include "ned/policy.hpp"

#include <cmath>
#include <utility>

namespace ned {
namespace {

void require_time_in(double t, double T) {
    if (!(t >= 0.0 && t <= T))
        throw DomainError("time must lie in [0, T]");
}

void require_positive_wealth(double W) {
    if (!(W > 0.0))
        throw DomainError("log/power rules need strictly positive wealth");
}

}  // namespace

AgentKind AgentKind::constant_rate(double rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw ConfigError("constant-rate benchmark needs rho >= 0");
    return {Kind::ConstantRate, rho};
}

std::string AgentKind::name() const {
    switch (kind) {
        case Kind::ConstantRate: return "constant-rate";
        case Kind::PreCommitment: return "pre-commitment";
        case Kind::Naive: return "naive";
        case Kind::Sophisticated: return "sophisticated";
    }
    return "unknown";
}

TimeSeries::TimeSeries(std::vector<double> times, std::vector<double> values)
    : spline_(std::move(times), std::move(values)) {}

Eigen::VectorXd portfolio_rule(const UtilitySpec& utility, const MarketModel& market,
                               double t, double T, double W) {
    switch (utility.kind) {
        case UtilitySpec::Kind::Log:
            require_positive_wealth(W);
            return market.merton_ratio();
        case UtilitySpec::Kind::Power:
            require_positive_wealth(W);
            return market.merton_ratio() / (1.0 - utility.gamma);
        case UtilitySpec::Kind::Exponential: {
            if (W == 0.0)
                throw DomainError("division-by-zero",
                                  "exponential portfolio weights are undefined at W = 0");
            const double beta = beta_exp(market, t, T);
            return market.merton_ratio() / (utility.gamma * beta * W);
        }
    }
    throw DomainError("unknown utility kind");
}

double consumption_from_policy(const Policy& policy, double W, double t) {
    require_time_in(t, policy.horizon);
    switch (policy.utility.kind) {
        case UtilitySpec::Kind::Log: {
            require_positive_wealth(W);
            const double alpha = policy.alpha(t);
            if (!(alpha > 0.0))
                throw DomainError("positivity-violation",
                                  "log consumption coefficient must be positive");
            return W / alpha;
        }
        case UtilitySpec::Kind::Power: {
            require_positive_wealth(W);
            const double alpha = policy.alpha(t);
            if (!(alpha > 0.0))
                throw DomainError("positivity-violation",
                                  "power consumption coefficient must be positive");
            return std::pow(alpha, -1.0 / (1.0 - policy.utility.gamma)) * W;
        }
        case UtilitySpec::Kind::Exponential: {
            if (!policy.beta)
                throw DomainError("exponential policy is missing its beta grid");
            const double beta = (*policy.beta)(t);
            const double gamma = policy.utility.gamma;
            const double arg = policy.utility.a * gamma * beta;
            if (!(arg > 0.0))
                throw DomainError("exponential consumption needs a * gamma * beta > 0");
            return policy.alpha(t) + beta * W - std::log(arg) / gamma;
        }
    }
    throw DomainError("unknown utility kind");
}

Eigen::VectorXd portfolio_from_policy(const Policy& policy, double W, double t) {
    require_time_in(t, policy.horizon);
    switch (policy.utility.kind) {
        case UtilitySpec::Kind::Log:
        case UtilitySpec::Kind::Power:
            require_positive_wealth(W);
            return policy.portfolio_coeff;
        case UtilitySpec::Kind::Exponential: {
            if (W == 0.0)
                throw DomainError("division-by-zero",
                                  "exponential portfolio weights are undefined at W = 0");
            if (!policy.beta)
                throw DomainError("exponential policy is missing its beta grid");
            return policy.portfolio_coeff / (policy.utility.gamma * (*policy.beta)(t) * W);
        }
    }
    throw DomainError("unknown utility kind");
}

}  // namespace ned
