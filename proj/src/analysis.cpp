#include "ned/analysis.hpp"

#include <json.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <utility>

#include "ned/closed_policies.hpp"
#include "ned/errors.hpp"

namespace ned {

namespace {

/// int_0^inf f, for integrands decaying exponentially (enforced by callers
/// through the transversality guards).
double halfline_integral(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> quad;
    double error = 0.0, l1 = 0.0;
    const double value = quad.integrate(
        [&](double t) { return std::isfinite(t) ? f(t) : 0.0; }, 1e-10, &error, &l1);
    if (!std::isfinite(value))
        throw DomainError("transversality-violation", "half-line consumption integral diverged");
    return value;
}

/// theta(t)^ex e^{ex dp t}, evaluated in log space so that an underflowing
/// theta and an overflowing growth factor never meet as 0 * inf. Once theta
/// underflows, the tilt cannot rescue it under the rbar > dp guard (the true
/// kernel is below e^{-(rbar-dp) t} with t > 744/rbar), so 0 is returned.
double tilted_kernel(const DiscountModel& discount, double ex, double dp, double t) {
    const double log_theta = std::log(discount.factor(t));
    if (log_theta == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(ex * (log_theta + dp * t));
}

/// I(D) = int_0^inf (r(tau) - rbar) theta(tau) e^{gamma D tau} dtau.
double drift_tilted_gap_integral(const DiscountModel& discount, double rbar, double gamma,
                                 double D) {
    return halfline_integral([&](double tau) {
        const double kernel = std::exp(std::log(discount.factor(tau)) + gamma * D * tau);
        return kernel == 0.0 ? 0.0 : (discount.rate(tau) - rbar) * kernel;
    });
}

/// Root of lambda (1 - gamma - I(drift - lambda)) = rbar - dp in lambda. The
/// bracket keeps gamma (drift - lambda) < rbar, which makes I converge no
/// matter how slowly r approaches rbar; for nonincreasing rates the left side
/// is increasing in lambda, so bisection is safe.
double soph_constant_root(const DiscountModel& discount, double rbar, double dp, double gamma,
                          double drift) {
    const auto residual = [&](double lam) {
        const double i = drift_tilted_gap_integral(discount, rbar, gamma, drift - lam);
        return lam * (1.0 - gamma - i) - (rbar - dp);
    };
    double lo = 1e-12, hi = 10.0;
    if (gamma > 0.0) lo = std::max(lo, drift - rbar / gamma + 1e-10);
    if (gamma < 0.0) hi = std::min(hi, drift - rbar / gamma - 1e-10);
    if (!(lo < hi) || !(residual(lo) < 0.0) || !(residual(hi) > 0.0))
        throw SolverError("fixed-point",
                          "sophisticated infinite-horizon propensity is not bracketed");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> uniform_grid(double t_end, int nodes) {
    std::vector<double> t(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (nodes - 1);
    return t;
}

std::size_t argmax_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t best = 0;
    double worst = -1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > worst) {
            worst = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

double propensity(const Policy& policy, double t) {
    if (policy.utility.kind == UtilitySpec::Kind::Exponential)
        throw DomainError("unsupported-utility",
                          "propensity needs consumption proportional to wealth; exponential "
                          "consumption is affine in W");
    return consumption_from_policy(policy, 1.0, t);
}

InfiniteHorizonPropensities infinite_horizon_propensities(
    std::shared_ptr<const DiscountModel> discount, const MarketModel& market,
    const UtilitySpec& utility) {
    if (!discount) throw ConfigError("infinite-horizon propensities need a discount model");
    if (utility.kind == UtilitySpec::Kind::Exponential)
        throw DomainError("unsupported-utility",
                          "infinite-horizon propensities need consumption proportional to "
                          "wealth; exponential consumption is affine in W");

    const bool is_log = utility.kind == UtilitySpec::Kind::Log;
    const double gamma = is_log ? 0.0 : utility.gamma;
    const double dp = is_log ? 0.0 : delta_p(market, gamma);
    const double ex = 1.0 / (1.0 - gamma);
    const double rbar = discount->rate_limit();
    if (!(rbar > dp)) {
        std::ostringstream os;
        os << "consumption integrals diverge: need rate limit > delta_p, got " << rbar
           << " <= " << dp;
        throw DomainError("transversality-violation", os.str());
    }

    InfiniteHorizonPropensities out;
    // lambda^P(t) = tilde_theta(t)^ex / int_t^inf tilde_theta(s)^ex ds with
    // tilde_theta = theta e^{dp s}; constants collapse it to (rho - dp)/(1-gamma).
    out.lambda_pre = [discount, ex, dp](double t) {
        const double numerator = tilted_kernel(*discount, ex, dp, t);
        const double tail = halfline_integral(
            [&](double u) { return tilted_kernel(*discount, ex, dp, t + u); });
        return numerator / tail;
    };

    const double total =
        halfline_integral([&](double s) { return tilted_kernel(*discount, ex, dp, s); });
    out.lambda_naive = 1.0 / total;

    if (is_log) {
        // Drift-free kernel: the sophisticated fixed point collapses onto the
        // naive constant under either Delta reading.
        out.lambda_soph_limit = out.lambda_naive;
        out.lambda_soph_naive_delta = out.lambda_naive;
    } else {
        const double drift =
            market.mu0() + market.excess_quadratic() / (2.0 * (1.0 - gamma));
        out.lambda_soph_limit = soph_constant_root(*discount, rbar, dp, gamma, drift);
        const double anchored = drift - out.lambda_naive;
        if (!(gamma * anchored < rbar))
            throw SolverError("fixed-point",
                              "anchored drift gap makes the sophisticated kernel diverge");
        const double i = drift_tilted_gap_integral(*discount, rbar, gamma, anchored);
        out.lambda_soph_naive_delta = (rbar - dp) / (1.0 - gamma - i);
    }

    out.effective_rate_naive = (1.0 - gamma) * out.lambda_naive + dp;
    out.effective_rate_soph = (1.0 - gamma) * out.lambda_soph_limit + dp;
    return out;
}

EquivalenceVerdict observational_equivalence_log(const DiscountModel& discount, double a,
                                                 double rho_candidate, double T) {
    if (!(a >= 0.0)) {
        std::ostringstream os;
        os << "bequest weight must be >= 0, got " << a;
        throw DomainError(os.str());
    }
    if (!(rho_candidate > 0.0)) {
        std::ostringstream os;
        os << "candidate rate must be > 0, got " << rho_candidate;
        throw DomainError(os.str());
    }
    if (!(T > 0.0)) {
        std::ostringstream os;
        os << "horizon must be > 0, got " << T;
        throw DomainError(os.str());
    }

    EquivalenceVerdict verdict;
    for (int k = 0; k <= 40; ++k) {
        const double tau = T - T * k / 40.0;  // remaining horizon at t = T k/40
        const double lhs = a * discount.factor(tau) + discount.factor_integral(0.0, tau);
        const double rhs =
            (a - 1.0 / rho_candidate) * std::exp(-rho_candidate * tau) + 1.0 / rho_candidate;
        verdict.max_deviation = std::max(verdict.max_deviation, std::abs(lhs - rhs));
    }
    verdict.equivalent = verdict.max_deviation < 1e-9;
    return verdict;
}

ComparisonReport compare_agents(const ProblemSpec& problem, const SolverConfig& config,
                                const std::optional<MPEGrid>& oracle_grid, unsigned threads) {
    if (!problem.discount) throw ConfigError("agent comparison needs a discount model");
    if (!(problem.horizon > 0.0)) {
        std::ostringstream os;
        os << "comparison horizon must be positive, got " << problem.horizon;
        throw ConfigError(os.str());
    }
    const bool exponential = problem.utility.kind == UtilitySpec::Kind::Exponential;
    if (!exponential && !(problem.w0 > 0.0)) {
        std::ostringstream os;
        os << "log/power comparison needs positive initial wealth, got " << problem.w0;
        throw ConfigError(os.str());
    }

    const DiscountModel& discount = *problem.discount;
    const MarketModel& market = problem.market;
    const double T = problem.horizon;

    ComparisonReport report;
    report.utility = problem.utility;
    report.horizon = T;
    report.w0 = problem.w0;
    const double t_end = (!exponential && problem.utility.a == 0.0) ? 0.99 * T : T;
    report.times = uniform_grid(t_end, 101);

    const std::vector<AgentKind> kinds = {AgentKind::constant_rate(discount.rate(0.0)),
                                          AgentKind::pre_commitment(), AgentKind::naive(),
                                          AgentKind::sophisticated()};
    std::vector<std::optional<Policy>> policies(kinds.size());
    report.agents.resize(kinds.size());
    report.complete = true;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        AgentReport& col = report.agents[i];
        col.agent = kinds[i];
        try {
            Policy policy =
                kinds[i].kind == AgentKind::Kind::Sophisticated
                    ? sophisticated_policy(problem.utility, discount, market, T, config)
                    : closed_policy(problem.utility, kinds[i], discount, market, T);
            col.consumption.reserve(report.times.size());
            for (double t : report.times)
                col.consumption.push_back(consumption_from_policy(policy, problem.w0, t));
            if (!exponential) {
                col.propensity.reserve(report.times.size());
                for (double t : report.times) col.propensity.push_back(propensity(policy, t));
            } else if (policy.beta) {
                col.wealth_slope.reserve(report.times.size());
                for (double t : report.times) col.wealth_slope.push_back((*policy.beta)(t));
            }
            col.portfolio_weights = portfolio_from_policy(policy, problem.w0, 0.0);
            col.present = true;
            policies[i] = std::move(policy);
        } catch (const Error& e) {
            col.present = false;
            col.omission = std::string(e.kind()) + ": " + e.what();
            report.complete = false;
        }
    }

    for (std::size_t i = 0; i < report.agents.size(); ++i) {
        for (std::size_t j = i + 1; j < report.agents.size(); ++j) {
            const AgentReport& a = report.agents[i];
            const AgentReport& b = report.agents[j];
            if (!a.present || !b.present) continue;
            const std::size_t at = argmax_abs_diff(a.consumption, b.consumption);
            report.consumption_gaps.push_back({a.agent.name(), b.agent.name(),
                                               std::abs(a.consumption[at] - b.consumption[at]),
                                               report.times[at]});
        }
    }

    const AgentReport& pre = report.agents[1];
    const AgentReport& nai = report.agents[2];
    const AgentReport& sop = report.agents[3];

    if (!exponential && nai.present && sop.present &&
        problem.utility.kind == UtilitySpec::Kind::Log) {
        const std::size_t at = argmax_abs_diff(nai.consumption, sop.consumption);
        const double gap = std::abs(nai.consumption[at] - sop.consumption[at]);
        report.checks.push_back({"naive-matches-sophisticated", gap <= 1e-10, gap,
                                 report.times[at],
                                 "sup |c^N - c^S|; the log naive and equilibrium rules are "
                                 "the same formula"});
    }

    if (!exponential && pre.present && nai.present) {
        const double eq0 = std::abs(pre.propensity[0] - nai.propensity[0]);
        report.checks.push_back({"propensities-equal-at-start", eq0 <= 1e-12, eq0, 0.0,
                                 "|lambda^P(0) - lambda^N(0)|"});
        if (discount.is_nonincreasing(T)) {
            double worst = std::numeric_limits<double>::infinity();
            std::size_t at = 1;
            for (std::size_t k = 1; k < report.times.size(); ++k) {
                const double slack = nai.propensity[k] - pre.propensity[k];
                if (slack < worst) {
                    worst = slack;
                    at = k;
                }
            }
            report.checks.push_back({"precommit-propensity-at-most-naive", worst >= -1e-12,
                                     worst, report.times[at],
                                     "min over t > 0 of lambda^N - lambda^P for a "
                                     "nonincreasing discount rate"});
        }
    }

    {
        const AgentReport* ref = nullptr;
        double worst = 0.0;
        double at = 0.0;
        for (const AgentReport& col : report.agents) {
            if (!col.present) continue;
            if (!ref) {
                ref = &col;
                continue;
            }
            const double gap =
                (col.portfolio_weights - ref->portfolio_weights).lpNorm<Eigen::Infinity>();
            worst = std::max(worst, gap);
        }
        if (ref)
            report.checks.push_back({"portfolio-rule-shared",
                                     worst <= (exponential ? 1e-12 : 0.0), worst, at,
                                     exponential
                                         ? "max pairwise weight gap at (w0, 0); shared slope "
                                           "beta implies shared dollar exposure"
                                         : "max pairwise weight gap; the vector depends on "
                                           "the market alone, so columns must be identical"});
    }

    if (exponential) {
        const AgentReport* ref = nullptr;
        double worst = 0.0;
        double at = 0.0;
        for (const AgentReport& col : report.agents) {
            if (!col.present || col.wealth_slope.empty()) continue;
            if (!ref) {
                ref = &col;
                continue;
            }
            for (std::size_t k = 0; k < report.times.size(); ++k) {
                const double gap = std::abs(col.wealth_slope[k] - ref->wealth_slope[k]);
                if (gap > worst) {
                    worst = gap;
                    at = report.times[k];
                }
            }
        }
        if (ref)
            report.checks.push_back({"wealth-slope-shared", worst <= 1e-12, worst, at,
                                     "max |beta_agent - beta_benchmark| on the grid"});

        if (pre.present && nai.present && policies[1] && policies[2]) {
            const double h = 1e-5;
            const auto slope = [&](const Policy& p) {
                return (p.alpha(h) - p.alpha(0.0)) / h;
            };
            const double margin = slope(*policies[2]) - slope(*policies[1]);
            report.checks.push_back({"precommit-alpha-slope-at-start", margin >= -1e-12,
                                     margin, 0.0,
                                     "(alpha^N)'(0) - (alpha^P)'(0), forward difference with "
                                     "step 1e-5"});
        }
    }

    if (oracle_grid && sop.present && policies[3]) {
        MPEGrid coarse_grid = *oracle_grid;
        MPEGrid fine_grid = *oracle_grid;
        fine_grid.n_steps *= 2;
        OracleCrossCheck check;
        check.coarse = extract_policy(backward_induction(discount, market, problem.utility, T,
                                                         coarse_grid,
                                                         RecursionKind::Equilibrium, threads),
                                      market, 0.0, problem.w0)
                           .consumption;
        check.fine = extract_policy(backward_induction(discount, market, problem.utility, T,
                                                       fine_grid, RecursionKind::Equilibrium,
                                                       threads),
                                    market, 0.0, problem.w0)
                         .consumption;
        check.extrapolated = 2.0 * check.fine - check.coarse;
        check.solver = consumption_from_policy(*policies[3], problem.w0, 0.0);
        check.relative_gap = std::abs(check.solver - check.extrapolated) /
                             std::abs(check.solver);
        report.oracle = check;
    }

    return report;
}

std::string comparison_report_json(const ComparisonReport& report) {
    nlohmann::json j;
    j["utility"] = {{"kind", report.utility.name()},
                    {"gamma", report.utility.gamma},
                    {"bequest", report.utility.a}};
    j["horizon"] = report.horizon;
    j["w0"] = report.w0;
    j["times"] = report.times;
    j["complete"] = report.complete;
    j["agents"] = nlohmann::json::array();
    for (const AgentReport& col : report.agents) {
        nlohmann::json a;
        a["agent"] = col.agent.name();
        a["present"] = col.present;
        if (!col.present) {
            a["omission"] = col.omission;
        } else {
            a["consumption"] = col.consumption;
            if (!col.propensity.empty()) a["propensity"] = col.propensity;
            if (!col.wealth_slope.empty()) a["wealth_slope"] = col.wealth_slope;
            a["portfolio_weights"] = std::vector<double>(
                col.portfolio_weights.data(),
                col.portfolio_weights.data() + col.portfolio_weights.size());
        }
        j["agents"].push_back(std::move(a));
    }
    j["consumption_gaps"] = nlohmann::json::array();
    for (const GapEntry& g : report.consumption_gaps)
        j["consumption_gaps"].push_back({{"first", g.first},
                                         {"second", g.second},
                                         {"gap", g.gap},
                                         {"witness_t", g.witness_t}});
    j["checks"] = nlohmann::json::array();
    for (const CheckEntry& c : report.checks)
        j["checks"].push_back({{"name", c.name},
                               {"holds", c.holds},
                               {"value", c.value},
                               {"witness_t", c.witness_t},
                               {"note", c.note}});
    if (report.oracle)
        j["oracle_cross_check"] = {{"coarse", report.oracle->coarse},
                                   {"fine", report.oracle->fine},
                                   {"extrapolated", report.oracle->extrapolated},
                                   {"solver", report.oracle->solver},
                                   {"relative_gap", report.oracle->relative_gap}};
    return j.dump(2);
}

void write_comparison_csv(const ComparisonReport& report, std::ostream& out) {
    out << std::setprecision(17);
    out << "agent,rule,t,value\n";
    for (const AgentReport& col : report.agents) {
        if (!col.present) continue;
        const std::string& name = col.agent.name();
        for (std::size_t k = 0; k < report.times.size(); ++k)
            out << name << ",consumption," << report.times[k] << ',' << col.consumption[k]
                << '\n';
        for (std::size_t k = 0; k < col.propensity.size(); ++k)
            out << name << ",propensity," << report.times[k] << ',' << col.propensity[k]
                << '\n';
        for (std::size_t k = 0; k < col.wealth_slope.size(); ++k)
            out << name << ",wealth_slope," << report.times[k] << ',' << col.wealth_slope[k]
                << '\n';
        for (Eigen::Index m = 0; m < col.portfolio_weights.size(); ++m)
            out << name << ",portfolio_weight_" << (m + 1) << ",0,"
                << col.portfolio_weights[m] << '\n';
    }
}

}  // namespace ned
