#include "ned/discount.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ned/numerics/quadrature.hpp"
#include "ned/numerics/special.hpp"

namespace ned {

void DiscountModel::require_nonnegative_time(double s, const char* what) {
    if (!(s >= 0.0)) {
        std::ostringstream os;
        os << what << " must be nonnegative, got " << s;
        throw DomainError(os.str());
    }
}

void DiscountModel::require_ordered(double tau0, double tau1) {
    require_nonnegative_time(tau0, "integration bound");
    if (!(tau1 >= tau0)) {
        std::ostringstream os;
        os << "integration bounds must satisfy tau0 <= tau1, got [" << tau0 << ", " << tau1
           << "]";
        throw DomainError(os.str());
    }
}

double DiscountModel::factor_integral(double tau0, double tau1) const {
    require_ordered(tau0, tau1);
    if (tau0 == tau1) return 0.0;
    return integrate([this](double u) { return factor(u); }, tau0, tau1, 1e-9);
}

bool DiscountModel::is_nonincreasing(double horizon) const {
    if (!(horizon > 0.0)) throw DomainError("probe horizon must be positive");
    const int n = 1000;
    double prev = rate(0.0);
    for (int k = 1; k <= n; ++k) {
        const double cur = rate(horizon * k / n);
        if (cur > prev + 1e-12 * std::max(1.0, std::abs(prev))) return false;
        prev = cur;
    }
    return true;
}

ConstantDiscount::ConstantDiscount(double rho) : rho_(rho) {
    if (!(rho >= 0.0)) throw ConfigError("constant discount rate must be >= 0");
}

double ConstantDiscount::rate(double s) const {
    require_nonnegative_time(s, "time");
    return rho_;
}

double ConstantDiscount::factor(double tau) const {
    require_nonnegative_time(tau, "elapsed time");
    return std::exp(-rho_ * tau);
}

double ConstantDiscount::factor_integral(double tau0, double tau1) const {
    require_ordered(tau0, tau1);
    if (rho_ == 0.0) return tau1 - tau0;
    return (std::exp(-rho_ * tau0) - std::exp(-rho_ * tau1)) / rho_;
}

BarroDiscount::BarroDiscount(double rho, double b, double gamma_d)
    : rho_(rho), b_(b), gamma_d_(gamma_d) {
    if (!(gamma_d > 0.0)) throw ConfigError("barro decay rate gamma_d must be > 0");
    if (!(rho >= 0.0) || !(rho + b >= 0.0))
        throw ConfigError("barro rates must keep r(s) >= 0 (need rho >= 0 and rho + b >= 0)");
}

double BarroDiscount::rate(double s) const {
    require_nonnegative_time(s, "time");
    return rho_ + b_ * std::exp(-gamma_d_ * s);
}

double BarroDiscount::factor(double tau) const {
    require_nonnegative_time(tau, "elapsed time");
    return std::exp(-rho_ * tau - b_ * tau * phi1(gamma_d_ * tau));
}

MixtureDiscount::MixtureDiscount(std::vector<double> weights, std::vector<double> rates)
    : weights_(std::move(weights)), rates_(std::move(rates)) {
    if (weights_.empty() || weights_.size() != rates_.size())
        throw ConfigError("mixture needs matching, non-empty weight and rate lists");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0)) throw ConfigError("mixture weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "mixture weights must sum to 1, got " << sum;
        throw ConfigError(os.str());
    }
    for (double r : rates_)
        if (!(r > 0.0)) throw ConfigError("mixture rates must be positive");
    min_rate_ = *std::min_element(rates_.begin(), rates_.end());
}

double MixtureDiscount::rate(double s) const {
    require_nonnegative_time(s, "time");
    // Rebase every exponent to the smallest rate: exponents stay <= 0 and the
    // ratio tends to min_rate_ exactly as s grows.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double e = std::exp(-(rates_[i] - min_rate_) * s);
        num += weights_[i] * rates_[i] * e;
        den += weights_[i] * e;
    }
    return num / den;
}

double MixtureDiscount::factor(double tau) const {
    require_nonnegative_time(tau, "elapsed time");
    double v = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        v += weights_[i] * std::exp(-rates_[i] * tau);
    return v;
}

double MixtureDiscount::factor_integral(double tau0, double tau1) const {
    require_ordered(tau0, tau1);
    double v = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        v += weights_[i] * (std::exp(-rates_[i] * tau0) - std::exp(-rates_[i] * tau1)) /
             rates_[i];
    return v;
}

TabulatedDiscount::TabulatedDiscount(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size())
        throw ConfigError("tabulated discount needs matching, non-empty node and value lists");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!(times_[i] >= 0.0)) throw ConfigError("tabulated nodes must be >= 0");
        if (i > 0 && !(times_[i] > times_[i - 1]))
            throw ConfigError("tabulated nodes must be strictly increasing");
        if (!(values_[i] >= 0.0)) throw ConfigError("tabulated rates must be >= 0");
    }
    // Exact cumulative integral of the piecewise-linear rate at each node,
    // including the constant segment before the first node.
    cum_.resize(times_.size());
    cum_[0] = values_[0] * times_[0];
    for (std::size_t i = 1; i < times_.size(); ++i)
        cum_[i] = cum_[i - 1] +
                  0.5 * (values_[i - 1] + values_[i]) * (times_[i] - times_[i - 1]);
}

double TabulatedDiscount::rate(double s) const {
    require_nonnegative_time(s, "time");
    if (s <= times_.front()) return values_.front();
    if (s >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double t0 = times_[i], t1 = times_[i + 1];
    const double w = (s - t0) / (t1 - t0);
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

double TabulatedDiscount::cumulative_rate(double s) const {
    if (s <= times_.front()) return values_.front() * s;
    if (s >= times_.back()) return cum_.back() + values_.back() * (s - times_.back());
    const auto it = std::upper_bound(times_.begin(), times_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double dt = s - times_[i];
    return cum_[i] + 0.5 * (values_[i] + rate(s)) * dt;
}

double TabulatedDiscount::factor(double tau) const {
    require_nonnegative_time(tau, "elapsed time");
    return std::exp(-cumulative_rate(tau));
}

}  // namespace ned
