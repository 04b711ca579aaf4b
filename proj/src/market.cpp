#include "ned/market.hpp"

#include <cmath>
#include <sstream>

#include "ned/numerics/special.hpp"

namespace ned {
namespace {

void require_interval(double t, double T) {
    if (!(t >= 0.0 && t <= T) || !std::isfinite(T))
        throw DomainError("times must satisfy 0 <= t <= T");
}

}  // namespace

UtilitySpec UtilitySpec::log_utility(double a) {
    if (!(a >= 0.0) || !std::isfinite(a))
        throw ConfigError("log utility needs bequest weight a >= 0");
    return {Kind::Log, 0.0, a};
}

UtilitySpec UtilitySpec::power(double gamma, double a) {
    if (!std::isfinite(gamma) || gamma >= 1.0 || gamma == 0.0)
        throw ConfigError("power utility needs gamma < 1, gamma != 0");
    if (!(a >= 0.0) || !std::isfinite(a))
        throw ConfigError("power utility needs bequest weight a >= 0");
    return {Kind::Power, gamma, a};
}

UtilitySpec UtilitySpec::exponential(double gamma, double a) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ConfigError("exponential utility needs gamma > 0");
    if (!(a > 0.0) || !std::isfinite(a))
        throw ConfigError("exponential utility needs bequest weight a > 0");
    return {Kind::Exponential, gamma, a};
}

std::string UtilitySpec::name() const {
    switch (kind) {
        case Kind::Log: return "log";
        case Kind::Power: return "power";
        case Kind::Exponential: return "exponential";
    }
    return "unknown";
}

MarketModel::MarketModel(double mu0, Eigen::VectorXd mu, Eigen::MatrixXd sigma_bar)
    : mu0_(mu0), mu_(std::move(mu)), sigma_bar_(std::move(sigma_bar)) {
    if (!std::isfinite(mu0_)) throw ConfigError("risk-free rate must be finite");
    if (mu_.size() == 0) throw ConfigError("market needs at least one asset");
    if (!mu_.allFinite()) throw ConfigError("drift vector must be finite");
    if (sigma_bar_.rows() != mu_.size())
        throw ConfigError("sigma_bar must have one row per asset");
    if (sigma_bar_.cols() == 0 || !sigma_bar_.allFinite())
        throw ConfigError("sigma_bar must be a finite, non-empty matrix");

    sigma_ = sigma_bar_ * sigma_bar_.transpose();
    llt_.compute(sigma_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (llt_.info() != Eigen::Success || !(lo > 0.0))
        throw ConfigError("sigma_bar sigma_bar' must be positive definite");
    condition_ = hi / lo;
}

void MarketModel::require_well_conditioned() const {
    if (condition_ > 1e12) {
        std::ostringstream msg;
        msg << "covariance condition estimate " << condition_
            << " exceeds 1e12; solves would be unreliable";
        throw DomainError("ill-conditioned-market", msg.str());
    }
}

Eigen::VectorXd MarketModel::merton_ratio() const {
    require_well_conditioned();
    return llt_.solve(excess());
}

double MarketModel::excess_quadratic() const {
    require_well_conditioned();
    return excess().dot(llt_.solve(excess()));
}

double delta_p(const MarketModel& market, double gamma) {
    if (!std::isfinite(gamma) || gamma >= 1.0 || gamma == 0.0)
        throw DomainError("delta_p needs gamma < 1, gamma != 0");
    return market.mu0() * gamma + 0.5 * gamma / (1.0 - gamma) * market.excess_quadratic();
}

double beta_exp(const MarketModel& market, double t, double T) {
    require_interval(t, T);
    const double tau = T - t;
    const double mu0 = market.mu0();
    // Both terms of the denominator are positive for every real mu0, so the
    // logistic blow-up of the textbook form cannot occur here; the guard
    // documents the contract for perturbed arithmetic.
    const double den = std::exp(-mu0 * tau) + tau * phi1(mu0 * tau);
    if (!(den > 0.0) || !std::isfinite(den)) {
        std::ostringstream msg;
        msg << "value-exponent slope diverges at horizon " << tau << " for mu0 = " << mu0;
        throw SolverError("singular-beta", msg.str(), {den});
    }
    return 1.0 / den;
}

double delta_e(const MarketModel& market, const UtilitySpec& utility, double t, double T) {
    if (utility.kind != UtilitySpec::Kind::Exponential)
        throw DomainError("delta_e is defined for exponential utility only");
    const double beta = beta_exp(market, t, T);
    const double arg = utility.a * utility.gamma * beta;
    if (!(arg > 0.0))
        throw DomainError("delta_e needs a * gamma * beta > 0");
    return beta - 0.5 * market.excess_quadratic() - beta * std::log(arg);
}

}  // namespace ned
