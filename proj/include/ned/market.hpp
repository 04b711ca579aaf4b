#pragma once

#include <Eigen/Dense>

#include <string>

#include "ned/errors.hpp"

namespace ned {

/// Utility family for the consumption problem. `gamma` is the power exponent
/// or the absolute risk aversion; `a` weights the terminal (bequest) payoff.
struct UtilitySpec {
    enum class Kind { Log, Power, Exponential };

    Kind kind;
    double gamma;  // unused for Log
    double a;

    static UtilitySpec log_utility(double a);
    static UtilitySpec power(double gamma, double a);
    static UtilitySpec exponential(double gamma, double a);

    std::string name() const;
};

/// Constant-coefficient market: risk-free rate mu0, drift vector mu, and
/// diffusion loadings sigma_bar (m assets on L independent Brownian motions).
/// Sigma = sigma_bar sigma_bar' is validated positive definite at
/// construction and cached with its factorization.
class MarketModel {
public:
    MarketModel(double mu0, Eigen::VectorXd mu, Eigen::MatrixXd sigma_bar);

    double mu0() const noexcept { return mu0_; }
    const Eigen::VectorXd& mu() const noexcept { return mu_; }
    const Eigen::MatrixXd& sigma_bar() const noexcept { return sigma_bar_; }
    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    Eigen::Index assets() const noexcept { return mu_.size(); }

    /// Excess drift mu - mu0 * 1.
    Eigen::VectorXd excess() const { return mu_.array() - mu0_; }

    /// Solution of Sigma x = mu - mu0 * 1 (the common direction of every
    /// optimal portfolio in this model).
    Eigen::VectorXd merton_ratio() const;

    /// M = (mu - mu0*1)' Sigma^{-1} (mu - mu0*1) >= 0.
    double excess_quadratic() const;

private:
    void require_well_conditioned() const;

    double mu0_;
    Eigen::VectorXd mu_;
    Eigen::MatrixXd sigma_bar_, sigma_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double condition_;
};

/// delta^p = mu0 gamma + (1/2) gamma/(1-gamma) M, the growth constant of the
/// power-utility value coefficient. Requires gamma < 1, gamma != 0.
double delta_p(const MarketModel& market, double gamma);

/// Slope of the exponential-utility value exponent:
/// beta(t) = mu0 / (1 + (mu0 - 1) e^{-mu0 (T-t)}), evaluated in the
/// equivalent form 1 / (e^{-mu0 tau} + tau phi1(mu0 tau)) which is stable
/// near mu0 = 0. Satisfies beta(T) = 1 and beta' + mu0 beta - beta^2 = 0.
double beta_exp(const MarketModel& market, double t, double T);

/// delta^e(t) = beta(t) - M/2 - beta(t) ln(a gamma beta(t)) for an
/// exponential utility.
double delta_e(const MarketModel& market, const UtilitySpec& utility, double t, double T);

}  // namespace ned
