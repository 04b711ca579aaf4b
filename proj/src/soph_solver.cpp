#include "ned/soph_solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include "ned/closed_policies.hpp"
#include "ned/errors.hpp"
#include "ned/numerics/ode.hpp"
#include "ned/numerics/quadrature.hpp"

namespace ned {
namespace {

void validate_config(const SolverConfig& config) {
    if (config.time_nodes < 11)
        throw ConfigError("solver grid needs at least 11 time nodes");
    if (!(config.fp_tolerance > 0.0) || !std::isfinite(config.fp_tolerance))
        throw ConfigError("fp_tolerance must be positive");
    if (!(config.ode_tolerance > 0.0) || !std::isfinite(config.ode_tolerance))
        throw ConfigError("ode_tolerance must be positive");
    if (!(config.damping > 0.0 && config.damping <= 1.0))
        throw ConfigError("damping must lie in (0, 1]");
    if (config.fp_max_iters < 1) throw ConfigError("fp_max_iters must be >= 1");
}

void validate_horizon(double T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon must be positive");
}

std::vector<double> uniform_grid(double T, int nodes) {
    std::vector<double> t(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) t[static_cast<std::size_t>(i)] = T * i / (nodes - 1);
    t.back() = T;
    return t;
}

// Linear interpolation of tabulated values on the uniform grid behind the
// solver sweeps, where shape preservation buys nothing over locality.
double lerp_uniform(const std::vector<double>& v, double h, double x) {
    const double s = x / h;
    const auto j = static_cast<std::size_t>(
        std::clamp(std::floor(s), 0.0, static_cast<double>(v.size() - 2)));
    const double u = std::clamp(s - static_cast<double>(j), 0.0, 1.0);
    return v[j] * (1.0 - u) + v[j + 1] * u;
}

// theta(kh) and r(kh) tables; every kernel argument in the sweeps is a grid
// delay, so both functions are only ever needed at these nodes.
struct DelayTables {
    std::vector<double> theta, rate;

    DelayTables(const DiscountModel& discount, double h, std::size_t n)
        : theta(n), rate(n) {
        for (std::size_t k = 0; k < n; ++k) {
            theta[k] = discount.factor(static_cast<double>(k) * h);
            rate[k] = discount.rate(static_cast<double>(k) * h);
        }
    }
};

// Trapezoid of kernel[j-i] * q[j] over j in [i, n-1] at spacing h, where
// kernel(k) = theta(kh) (rate(kh) - rate_at_horizon).
double tail_trapezoid(const DelayTables& tables, const std::vector<double>& q,
                      std::size_t i, double rate_horizon, double h) {
    const std::size_t n = q.size();
    if (i + 1 >= n) return 0.0;
    double acc = 0.0;
    for (std::size_t j = i; j < n; ++j) {
        const std::size_t k = j - i;
        double term = tables.theta[k] * (tables.rate[k] - rate_horizon) * q[j];
        if (j == i || j == n - 1) term *= 0.5;
        acc += term;
    }
    return acc * h;
}

struct SweepOutcome {
    std::vector<double> alpha;
    int iterations = 0;
    std::vector<double> residuals;
};

// Damped Picard driver shared by the power and exponential solvers. `sweep`
// maps the current iterate to the next undamped one; the residual is the
// sup-norm of the undamped update.
template <class Sweep>
SweepOutcome picard_iterate(std::vector<double> alpha, const SolverConfig& config,
                            Sweep&& sweep) {
    SweepOutcome out;
    out.residuals.reserve(static_cast<std::size_t>(config.fp_max_iters));
    for (int iter = 0; iter < config.fp_max_iters; ++iter) {
        const std::vector<double> next = sweep(alpha, out.residuals);
        double resid = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i)
            resid = std::max(resid, std::abs(next[i] - alpha[i]));
        out.residuals.push_back(resid);
        for (std::size_t i = 0; i < alpha.size(); ++i)
            alpha[i] = config.damping * next[i] + (1.0 - config.damping) * alpha[i];
        if (resid < config.fp_tolerance) {
            out.alpha = std::move(alpha);
            out.iterations = iter + 1;
            return out;
        }
    }
    std::ostringstream msg;
    msg << "fixed point not converged after " << config.fp_max_iters
        << " sweeps; last residual " << (out.residuals.empty() ? 0.0 : out.residuals.back())
        << " vs tolerance " << config.fp_tolerance;
    throw SolverError("non-convergence", msg.str(), out.residuals);
}

}  // namespace

SolverResult solve_log_sophisticated(const DiscountModel& discount, double a, double T,
                                     const SolverConfig& config) {
    validate_config(config);
    validate_horizon(T);
    if (!(a >= 0.0) || !std::isfinite(a))
        throw DomainError("bequest weight a must be finite and >= 0");

    auto grid = uniform_grid(T, config.time_nodes);
    std::vector<double> backward(grid.rbegin(), grid.rend());
    // theta r = -theta' turns the nonlocal integral into
    // [1 - theta(tau)] - r(tau) int_0^tau theta, tau = T - t.
    const auto rhs = [&](double t, double alpha) {
        const double tau = T - t;
        const double r = discount.rate(tau);
        return r * alpha - discount.factor(tau) - r * discount.factor_integral(0.0, tau);
    };
    std::vector<double> values =
        ode_solve_grid(rhs, a, backward, config.ode_tolerance, config.ode_tolerance);
    std::reverse(values.begin(), values.end());
    // alpha(T) = a may be zero; every earlier node carries the positive
    // integral of theta and must stay positive
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (!(values[i] > 0.0))
            throw SolverError("positivity-violation",
                              "log consumption coefficient left the positive cone");
    return SolverResult{TimeSeries(std::move(grid), std::move(values)), std::nullopt, 0, {}};
}

SolverResult solve_power_sophisticated(const DiscountModel& discount,
                                       const MarketModel& market, double gamma, double a,
                                       double T, const SolverConfig& config) {
    validate_config(config);
    validate_horizon(T);
    if (!std::isfinite(gamma) || gamma >= 1.0 || gamma == 0.0)
        throw DomainError("power utility needs gamma < 1, gamma != 0");
    if (a == 0.0)
        throw DomainError("unsupported-terminal",
                          "power equilibrium coefficient needs a > 0: the terminal "
                          "consumption exponent is singular at a = 0");
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("bequest weight a must be finite and positive");

    const auto n = static_cast<std::size_t>(config.time_nodes);
    const auto grid = uniform_grid(T, config.time_nodes);
    const double h = grid[1] - grid[0];
    const double ex = 1.0 / (1.0 - gamma);
    const double dp = delta_p(market, gamma);
    // exact log-normal wealth-ratio moment: drift mu0 + M/(2(1-gamma))
    const double drift = market.mu0() + 0.5 * market.excess_quadratic() * ex;
    const DelayTables tables(discount, h, n);

    // warm start from the naive coefficient, which shares the terminal value
    // and the constant-rate limit
    std::vector<double> alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = power_naive_consumption(discount, market, gamma, a, grid[i], T, 1.0);
        alpha[i] = std::pow(c, gamma - 1.0);
    }
    alpha.back() = a;

    const auto sweep = [&](const std::vector<double>& cur,
                           const std::vector<double>& residuals) {
        std::vector<double> lam(n), delta(n), pw(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(cur[i] > 0.0) || !std::isfinite(cur[i]))
                throw SolverError("positivity-violation",
                                  "power coefficient left the positive cone mid-iteration",
                                  residuals);
            lam[i] = std::pow(cur[i], -ex);
            delta[i] = drift - lam[i];
            pw[i] = std::pow(cur[i], -gamma * ex);
        }
        const std::vector<double> cum_delta = cumtrapz_uniform(delta, h);

        std::vector<double> q(n), kterm(n);
        for (std::size_t j = 0; j < n; ++j) q[j] = pw[j] * std::exp(gamma * cum_delta[j]);
        for (std::size_t i = 0; i < n; ++i)
            kterm[i] = std::exp(-gamma * cum_delta[i]) *
                       tail_trapezoid(tables, q, i, tables.rate[n - 1 - i], h);

        const auto rhs = [&](double t, double al) {
            if (!(al > 0.0))
                throw SolverError("positivity-violation",
                                  "power coefficient left the positive cone mid-sweep",
                                  residuals);
            return (discount.rate(T - t) - dp) * al - (1.0 - gamma) * std::pow(al, -gamma * ex) +
                   lerp_uniform(kterm, h, t);
        };
        std::vector<double> backward(grid.rbegin(), grid.rend());
        std::vector<double> next = rk4_grid(rhs, a, backward);
        std::reverse(next.begin(), next.end());
        for (double v : next)
            if (!(v > 0.0) || !std::isfinite(v))
                throw SolverError("positivity-violation",
                                  "power coefficient left the positive cone mid-sweep",
                                  residuals);
        return next;
    };

    SweepOutcome out = picard_iterate(std::move(alpha), config, sweep);
    return SolverResult{TimeSeries(grid, std::move(out.alpha)), std::nullopt, out.iterations,
                        std::move(out.residuals)};
}

SolverResult solve_exp_sophisticated(const DiscountModel& discount,
                                     const MarketModel& market, double gamma, double a,
                                     double T, const SolverConfig& config) {
    validate_config(config);
    validate_horizon(T);
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw DomainError("exponential utility needs gamma > 0");
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("exponential utility needs bequest weight a > 0");

    const auto n = static_cast<std::size_t>(config.time_nodes);
    const auto grid = uniform_grid(T, config.time_nodes);
    const double h = grid[1] - grid[0];
    const double big_m = market.excess_quadratic();
    const auto spec = UtilitySpec::exponential(gamma, a);
    const DelayTables tables(discount, h, n);

    std::vector<double> beta(n), dle(n), log_term(n);
    for (std::size_t i = 0; i < n; ++i) {
        beta[i] = beta_exp(market, grid[i], T);
        dle[i] = delta_e(market, spec, grid[i], T);
        log_term[i] = std::log(a * gamma * beta[i]) / gamma;
    }

    const auto sweep = [&](const std::vector<double>& cur,
                           const std::vector<double>& residuals) {
        // equilibrium wealth-drift intercept and its beta-weighted cumulative
        std::vector<double> bb(n);
        for (std::size_t i = 0; i < n; ++i)
            bb[i] = beta[i] * (big_m / (gamma * beta[i]) - cur[i] + log_term[i]);
        const std::vector<double> phi = cumtrapz_uniform(bb, h);

        // Gaussian exponential moment folded in closed form: exp(M (s-t)/2)
        std::vector<double> q(n), acoef(n);
        for (std::size_t j = 0; j < n; ++j)
            q[j] = beta[j] * std::exp(-gamma * (cur[j] + phi[j]) + 0.5 * big_m * grid[j]);
        for (std::size_t i = 0; i < n; ++i)
            acoef[i] = -std::exp(gamma * (cur[i] + phi[i]) - 0.5 * big_m * grid[i]) *
                       tail_trapezoid(tables, q, i, tables.rate[n - 1 - i], h);
        for (double v : acoef)
            if (!std::isfinite(v))
                throw SolverError("nonlocal-overflow",
                                  "exponential nonlocal coefficient is not finite",
                                  residuals);

        const auto rhs = [&](double t, double al) {
            return beta_exp(market, t, T) * al +
                   (delta_e(market, spec, t, T) + lerp_uniform(acoef, h, t) -
                    discount.rate(T - t)) /
                       gamma;
        };
        std::vector<double> backward(grid.rbegin(), grid.rend());
        std::vector<double> next = rk4_grid(rhs, 0.0, backward);
        std::reverse(next.begin(), next.end());
        for (double v : next)
            if (!std::isfinite(v))
                throw SolverError("positivity-violation",
                                  "exponential coefficient is not finite mid-sweep",
                                  residuals);
        return next;
    };

    SweepOutcome out = picard_iterate(std::vector<double>(n, 0.0), config, sweep);
    return SolverResult{TimeSeries(grid, std::move(out.alpha)),
                        TimeSeries(grid, std::move(beta)), out.iterations,
                        std::move(out.residuals)};
}

double evaluate_k_term(const DiscountModel& discount, const TimeSeries& H, double t,
                       double T, bool subtract_horizon_rate) {
    validate_horizon(T);
    if (!(t >= 0.0 && t <= T)) throw DomainError("k-term time must lie in [0, T]");
    const double scale = std::max(1.0, T);
    if (std::abs(H.times().front()) > 1e-9 * scale ||
        std::abs(H.times().back() - T) > 1e-9 * scale)
        throw DomainError("k-term utility grid must span [0, T]");
    if (t >= T) return 0.0;
    const double rate_horizon = subtract_horizon_rate ? discount.rate(T - t) : 0.0;
    return integrate(
        [&](double s) {
            return discount.factor(s - t) * (discount.rate(s - t) - rate_horizon) * H(s);
        },
        t, T);
}

double beta_riccati_residual(const MarketModel& market, const TimeSeries& beta) {
    const auto& ts = beta.times();
    const auto& bs = beta.values();
    const std::size_t n = ts.size();
    if (n < 5) throw DomainError("riccati residual needs at least 5 grid nodes");
    const double h = (ts.back() - ts.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(ts[i] - ts[i - 1] - h) > 1e-9 * std::max(1.0, h))
            throw DomainError("riccati residual needs a uniform grid");
    const double mu0 = market.mu0();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double d =
            (-bs[i + 2] + 8.0 * bs[i + 1] - 8.0 * bs[i - 1] + bs[i - 2]) / (12.0 * h);
        worst = std::max(worst, std::abs(d - (bs[i] * bs[i] - mu0 * bs[i])));
    }
    return worst;
}

Policy sophisticated_policy(const UtilitySpec& utility, const DiscountModel& discount,
                            const MarketModel& market, double T,
                            const SolverConfig& config) {
    switch (utility.kind) {
        case UtilitySpec::Kind::Log: {
            auto result = solve_log_sophisticated(discount, utility.a, T, config);
            return Policy{utility, AgentKind::sophisticated(), market.merton_ratio(),
                          std::move(result.alpha), std::nullopt, T};
        }
        case UtilitySpec::Kind::Power: {
            auto result =
                solve_power_sophisticated(discount, market, utility.gamma, utility.a, T, config);
            return Policy{utility, AgentKind::sophisticated(),
                          market.merton_ratio() / (1.0 - utility.gamma),
                          std::move(result.alpha), std::nullopt, T};
        }
        case UtilitySpec::Kind::Exponential: {
            auto result =
                solve_exp_sophisticated(discount, market, utility.gamma, utility.a, T, config);
            return Policy{utility, AgentKind::sophisticated(), market.merton_ratio(),
                          std::move(result.alpha), std::move(result.beta), T};
        }
    }
    throw DomainError("unknown utility kind");
}

std::string solver_diagnostics_json(const SolverResult& result) {
    nlohmann::json j;
    j["iterations"] = result.iterations;
    j["residuals"] = result.residuals;
    j["grid"] = {{"nodes", result.alpha.times().size()},
                 {"t_min", result.alpha.times().front()},
                 {"t_max", result.alpha.times().back()},
                 {"has_beta", result.beta.has_value()}};
    return j.dump(2);
}

}  // namespace ned
