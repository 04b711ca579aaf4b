#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ned/errors.hpp"

namespace ned {

/// Instantaneous discount rate r(s) and discount factor
/// theta(tau) = exp(-int_0^tau r(s) ds).
///
/// Invariants: r(s) >= 0 on the usable horizon; theta(0) = 1; theta is
/// strictly positive and nonincreasing. Implementations are immutable and
/// safe to share across threads.
class DiscountModel {
public:
    virtual ~DiscountModel() = default;

    /// r(s) for s >= 0. Negative s is a domain error.
    virtual double rate(double s) const = 0;

    /// theta(tau) for tau >= 0, in (0, 1]. Closed form where the model
    /// admits one, quadrature of r otherwise.
    virtual double factor(double tau) const = 0;

    /// int_{tau0}^{tau1} theta(u) du for 0 <= tau0 <= tau1. Exact for
    /// Constant and ExpMixture, adaptive quadrature otherwise.
    virtual double factor_integral(double tau0, double tau1) const;

    /// lim_{s->inf} r(s).
    virtual double rate_limit() const = 0;

    /// Probe on 1e3 nodes over [0, horizon]: true when r is nonincreasing
    /// there (within roundoff). Gates the subadditivity and overconsumption
    /// properties, which assume the paper's impatience condition.
    bool is_nonincreasing(double horizon) const;

    virtual std::string kind() const = 0;

protected:
    static void require_nonnegative_time(double s, const char* what);
    static void require_ordered(double tau0, double tau1);
};

/// r(s) = rho.
class ConstantDiscount final : public DiscountModel {
public:
    explicit ConstantDiscount(double rho);

    double rate(double s) const override;
    double factor(double tau) const override;
    double factor_integral(double tau0, double tau1) const override;
    double rate_limit() const override { return rho_; }
    std::string kind() const override { return "constant"; }

    double rho() const noexcept { return rho_; }

private:
    double rho_;
};

/// r(s) = rho + b e^{-gamma_d s}; theta has the closed form
/// exp(-rho tau - b (1 - e^{-gamma_d tau}) / gamma_d).
class BarroDiscount final : public DiscountModel {
public:
    BarroDiscount(double rho, double b, double gamma_d);

    double rate(double s) const override;
    double factor(double tau) const override;
    double rate_limit() const override { return rho_; }
    std::string kind() const override { return "barro"; }

private:
    double rho_, b_, gamma_d_;
};

/// theta(s) = sum_i w_i e^{-r_i s} with positive weights summing to one and
/// positive rates; r(s) = -theta'(s)/theta(s) evaluated in a form that stays
/// stable for large s (all exponents rebased to the smallest rate).
class MixtureDiscount final : public DiscountModel {
public:
    MixtureDiscount(std::vector<double> weights, std::vector<double> rates);

    double rate(double s) const override;
    double factor(double tau) const override;
    double factor_integral(double tau0, double tau1) const override;
    double rate_limit() const override { return min_rate_; }
    std::string kind() const override { return "mixture"; }

    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& rates() const noexcept { return rates_; }

private:
    std::vector<double> weights_, rates_;
    double min_rate_;
};

/// Rate sampled at time nodes, linear in between, constant beyond the ends.
/// The cumulative integral of the piecewise-linear rate is exact (piecewise
/// quadratic), so theta never needs quadrature.
class TabulatedDiscount final : public DiscountModel {
public:
    TabulatedDiscount(std::vector<double> times, std::vector<double> values);

    double rate(double s) const override;
    double factor(double tau) const override;
    double rate_limit() const override { return values_.back(); }
    std::string kind() const override { return "tabulated"; }

private:
    double cumulative_rate(double s) const;  // int_0^s r

    std::vector<double> times_, values_, cum_;
};

}  // namespace ned
