#include "ned/mpe_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>
#include <vector>

#include "ned/errors.hpp"
#include "ned/numerics/gauss_hermite.hpp"
#include "ned/numerics/golden.hpp"
#include "ned/numerics/interp.hpp"
#include "ned/numerics/parallel.hpp"

namespace ned {

namespace {

bool wealth_is_positive(const UtilitySpec& u) {
    return u.kind != UtilitySpec::Kind::Exponential;
}

double flow_utility_of(const UtilitySpec& u, double c) {
    switch (u.kind) {
        case UtilitySpec::Kind::Log:
            return std::log(c);
        case UtilitySpec::Kind::Power:
            return std::pow(c, u.gamma) / u.gamma;
        case UtilitySpec::Kind::Exponential:
            return -std::exp(-u.gamma * c) / u.gamma;
    }
    throw DomainError("unknown utility kind");
}

double bequest_of(const UtilitySpec& u, double w) {
    switch (u.kind) {
        case UtilitySpec::Kind::Log:
            return u.a * std::log(w);
        case UtilitySpec::Kind::Power:
            return u.a * std::pow(w, u.gamma) / u.gamma;
        case UtilitySpec::Kind::Exponential:
            return -(u.a / u.gamma) * std::exp(-u.gamma * w);
    }
    throw DomainError("unknown utility kind");
}

void validate_grid(const MPEGrid& grid, const UtilitySpec& utility) {
    if (grid.n_steps < 2) throw DomainError("oracle grid needs n_steps >= 2");
    if (grid.hermite_points < 3) throw DomainError("oracle grid needs hermite_points >= 3");
    if (grid.wealth_nodes.size() < 2)
        throw DomainError("oracle grid needs at least 2 wealth nodes");
    for (std::size_t i = 0; i < grid.wealth_nodes.size(); ++i) {
        const double w = grid.wealth_nodes[i];
        if (!std::isfinite(w)) throw DomainError("oracle wealth nodes must be finite");
        if (i > 0 && !(w > grid.wealth_nodes[i - 1]))
            throw DomainError("oracle wealth nodes must be strictly increasing");
        if (wealth_is_positive(utility) && !(w > 0.0))
            throw DomainError("wealth nodes must be positive for log/power utility");
    }
}

/// Control box for one wealth node. Consumption is a level; exposure is
/// the scalar loading on the variance-minimizing direction Sigma^{-1}
/// (mu - mu0 1).
struct ControlBox {
    double c_lo, c_hi;
    double eta_lo, eta_hi;
};

ControlBox control_box(const UtilitySpec& u, double wealth, double hull_max_abs) {
    if (wealth_is_positive(u)) return {1e-8 * wealth, 20.0 * wealth, 0.0, 50.0};
    const double span = 4.0 * hull_max_abs + 1.0;
    return {-span, span, 0.0, 50.0 * (1.0 + 1.0 / u.gamma)};
}

/// Stage objective machinery shared by the backward sweep and the public
/// stage_objective entry point: flow_weight * u(c) * eps + E[Z(W')].
///
/// Off-hull continuation values continue the spline linearly from the edge
/// (C^1 tails); a flat clamp would bound the downside of large gambles and
/// reward them spuriously. For log/power, a candidate whose next wealth is
/// nonpositive at any Hermite node is ruin and scores -infinity.
struct StageEvaluator {
    const PchipSpline* z;
    const GaussHermiteRule* rule;
    const UtilitySpec* utility;
    bool crra;
    double mu0, big_m, sqrt_m;
    double eps, sqrt_eps;
    double flow_weight;
    double x_lo, x_hi;    // coordinate hull
    double z_lo, z_hi;    // continuation at the hull edges
    double m_lo, m_hi;    // edge slopes for the linear tails

    double coord(double w) const { return crra ? std::log(w) : w; }

    void bind(const PchipSpline& spline) {
        z = &spline;
        x_lo = spline.xs().front();
        x_hi = spline.xs().back();
        z_lo = spline.ys().front();
        z_hi = spline.ys().back();
        m_lo = spline.prime(x_lo);
        m_hi = spline.prime(x_hi);
    }

    double next_wealth(double w, double c, double eta, double xi) const {
        if (crra)
            return w * (1.0 + (mu0 + eta * big_m) * eps) - c * eps +
                   eta * sqrt_m * w * sqrt_eps * xi;
        return w * (1.0 + mu0 * eps) + (eta * big_m - c) * eps + eta * sqrt_m * sqrt_eps * xi;
    }

    double continuation_at(double wn) const {
        if (crra && !(wn > 0.0)) return -std::numeric_limits<double>::infinity();
        const double x = coord(wn);
        if (x < x_lo) return z_lo + m_lo * (x - x_lo);
        if (x > x_hi) return z_hi + m_hi * (x - x_hi);
        return (*z)(x);
    }

    double operator()(double w, double c, double eta) const {
        double acc = 0.0;
        for (std::size_t m = 0; m < rule->nodes.size(); ++m)
            acc += rule->weights[m] * continuation_at(next_wealth(w, c, eta, rule->nodes[m]));
        return flow_weight * flow_utility_of(*utility, c) * eps + acc;
    }

    /// Largest exposure keeping next wealth positive at every Hermite node
    /// (with a small margin so searched objectives stay finite). Exponential
    /// utility has no positivity constraint.
    double admissible_exposure(double w, double c, double box_hi) const {
        if (!crra) return box_hi;
        const double base = w * (1.0 + mu0 * eps) - c * eps;
        if (!(base > 0.0)) return 0.0;
        const double slope = w * (big_m * eps + sqrt_m * sqrt_eps * rule->nodes.front());
        if (slope >= 0.0) return box_hi;
        return std::min(box_hi, 0.999 * base / -slope);
    }

    /// Exposure maximizer from the local quadratic expansion of E[Z] around
    /// the riskless drifted wealth: eta* = -Z_W / (W Z_WW) for log/power,
    /// -Z_W / Z_WW for exponential. Falls back to a direct search when the
    /// interpolated curvature is not concave.
    double best_exposure(double w, double c, const ControlBox& box) const {
        if (big_m <= 0.0) return 0.0;
        const double eta_cap = admissible_exposure(w, c, box.eta_hi);
        if (!(eta_cap > 0.0)) return 0.0;
        double xd = w * (1.0 + mu0 * eps) - c * eps;
        if (crra && xd <= 0.0) return 0.0;
        const double xc = std::clamp(coord(xd), x_lo, x_hi);
        const double zp = z->prime(xc);
        const double zpp = z->double_prime(xc);
        double zw, zww;
        if (crra) {
            zw = zp / xd;
            zww = (zpp - zp) / (xd * xd);
        } else {
            zw = zp;
            zww = zpp;
        }
        double eta;
        if (zww < 0.0 && std::isfinite(zw)) {
            eta = -zw / (crra ? w * zww : zww);
        } else {
            eta = golden_min([&](double e) { return -(*this)(w, c, e); }, box.eta_lo, eta_cap,
                             1e-10 * (eta_cap - box.eta_lo));
        }
        return std::clamp(eta, box.eta_lo, eta_cap);
    }
};

}  // namespace

MPEGrid MPEGrid::standard(const UtilitySpec& utility, double w0, int n_steps, int wealth_count,
                          int hermite_points, double half_span) {
    if (!(w0 > 0.0) || !std::isfinite(w0))
        throw DomainError("oracle grid needs a positive reference wealth");
    MPEGrid grid;
    grid.n_steps = n_steps;
    grid.hermite_points = hermite_points;
    if (wealth_is_positive(utility)) {
        const int count = wealth_count > 0 ? wealth_count : 201;
        const double span = half_span > 0.0 ? half_span : 6.0;
        grid.wealth_nodes.resize(count);
        for (int i = 0; i < count; ++i) {
            const double x = -span + 2.0 * span * i / (count - 1);
            grid.wealth_nodes[i] = w0 * std::exp(x);
        }
    } else {
        const int count = wealth_count > 0 ? wealth_count : 401;
        const double span = (half_span > 0.0 ? half_span : 10.0) * w0;
        grid.wealth_nodes.resize(count);
        for (int i = 0; i < count; ++i)
            grid.wealth_nodes[i] = -span + 2.0 * span * i / (count - 1);
    }
    return grid;
}

StageFunctions backward_induction(const DiscountModel& discount, const MarketModel& market,
                                  const UtilitySpec& utility, double horizon,
                                  const MPEGrid& grid, RecursionKind recursion,
                                  unsigned threads) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("oracle horizon must be positive");
    validate_grid(grid, utility);

    const int n_steps = grid.n_steps;
    const auto& nodes = grid.wealth_nodes;
    const std::size_t n = nodes.size();
    const std::size_t q = static_cast<std::size_t>(grid.hermite_points);
    const GaussHermiteRule rule = gauss_hermite(q);
    const double eps = horizon / n_steps;
    const bool equilibrium = recursion == RecursionKind::Equilibrium;
    const bool crra = wealth_is_positive(utility);
    const double hull_max_abs = std::max(std::abs(nodes.front()), std::abs(nodes.back()));

    StageFunctions out;
    out.grid = grid;
    out.utility = utility;
    out.recursion = recursion;
    out.horizon = horizon;
    out.theta.resize(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) out.theta[k] = discount.factor(k * eps);
    out.flow_weight.assign(n_steps, 1.0);
    out.value.assign(n_steps + 1, std::vector<double>(n, 0.0));
    out.flow_utility.assign(n_steps, std::vector<double>(n, 0.0));
    out.consumption.assign(n_steps, std::vector<double>(n, 0.0));
    out.exposure.assign(n_steps, std::vector<double>(n, 0.0));
    out.continuation.assign(n_steps, std::vector<double>(n, 0.0));

    for (std::size_t i = 0; i < n; ++i) out.value[n_steps][i] = bequest_of(utility, nodes[i]);

    std::vector<double> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = crra ? std::log(nodes[i]) : nodes[i];

    StageEvaluator eval;
    eval.rule = &rule;
    eval.utility = &out.utility;
    eval.crra = crra;
    eval.mu0 = market.mu0();
    eval.big_m = market.excess_quadratic();
    eval.sqrt_m = std::sqrt(eval.big_m);
    eval.eps = eps;
    eval.sqrt_eps = std::sqrt(eps);

    // E[H_{j+k} | next-period wealth at each node] for every surviving k,
    // propagated through the per-stage transition operator. fam.back() is
    // the k=1 entry.
    std::vector<std::vector<double>> fam;
    std::vector<double> zbuf(n), scratch(n);

    // Transition deposits: linear weights onto the two bracketing nodes,
    // Hermite weight folded in. Rebuilt per stage from the stored policy.
    struct Deposit {
        std::size_t lo;
        double w_lo, w_hi;
    };
    std::vector<Deposit> transition(n * q);

    std::vector<unsigned char> c_contact(n), eta_contact(n);

    for (int j = n_steps - 1; j >= 0; --j) {
        const double theta_w = equilibrium ? out.theta[n_steps - j - 1] : 1.0;
        out.flow_weight[j] = theta_w;

        if (equilibrium) {
            for (std::size_t i = 0; i < n; ++i)
                zbuf[i] = out.theta[n_steps - j] * out.value[j + 1][i];
            for (int k = 1; k <= n_steps - j - 1; ++k) {
                const double coef = out.theta[n_steps - j - 1] * out.theta[k] -
                                    out.theta[n_steps - j] * out.theta[k - 1];
                const auto& hk = fam[fam.size() - static_cast<std::size_t>(k)];
                for (std::size_t i = 0; i < n; ++i) zbuf[i] += coef * eps * hk[i];
            }
        } else {
            const double ratio = out.theta[j + 1] / out.theta[j];
            for (std::size_t i = 0; i < n; ++i) zbuf[i] = ratio * out.value[j + 1][i];
        }
        out.continuation[j] = zbuf;
        const PchipSpline zspline(coords, zbuf);
        eval.bind(zspline);
        eval.flow_weight = theta_w;

        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double w = nodes[i];
                const ControlBox box = control_box(utility, w, hull_max_abs);
                const double c_tol = 1e-10 * (box.c_hi - box.c_lo);
                const double c_star = golden_min(
                    [&](double c) { return -eval(w, c, eval.best_exposure(w, c, box)); },
                    box.c_lo, box.c_hi, c_tol);
                const double eta_star = eval.best_exposure(w, c_star, box);
                out.value[j][i] = eval(w, c_star, eta_star) / theta_w;
                out.consumption[j][i] = c_star;
                out.exposure[j][i] = eta_star;
                out.flow_utility[j][i] = flow_utility_of(utility, c_star);
                c_contact[i] = static_cast<unsigned char>(c_star <= box.c_lo + 2.0 * c_tol ||
                                                          c_star >= box.c_hi - 2.0 * c_tol);
                eta_contact[i] = static_cast<unsigned char>(
                    eval.big_m > 0.0 && eta_star >= box.eta_hi - 1e-12 * box.eta_hi);
            }
        });
        for (std::size_t i = 0; i < n; ++i) {
            out.diagnostics.consumption_box_contacts += c_contact[i];
            out.diagnostics.exposure_box_contacts += eta_contact[i];
        }

        if (equilibrium && j > 0) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t m = 0; m < q; ++m) {
                    const double wn = eval.next_wealth(nodes[i], out.consumption[j][i],
                                                       out.exposure[j][i], rule.nodes[m]);
                    if (crra && wn <= 0.0)
                        ++out.diagnostics.negative_wealth_clamps;
                    else if (wn < nodes.front() || wn > nodes.back())
                        ++out.diagnostics.wealth_hull_contacts;
                    const auto it = std::upper_bound(nodes.begin(), nodes.end(), wn);
                    std::size_t p =
                        it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
                    p = std::min(p, n - 2);
                    const double u =
                        std::clamp((wn - nodes[p]) / (nodes[p + 1] - nodes[p]), 0.0, 1.0);
                    transition[i * q + m] = {p, rule.weights[m] * (1.0 - u),
                                             rule.weights[m] * u};
                }
            }
            for (auto& arr : fam) {
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (std::size_t m = 0; m < q; ++m) {
                        const Deposit& d = transition[i * q + m];
                        acc += d.w_lo * arr[d.lo] + d.w_hi * arr[d.lo + 1];
                    }
                    scratch[i] = acc;
                }
                arr.swap(scratch);
            }
            fam.push_back(out.flow_utility[j]);
        }
    }
    return out;
}

double stage_objective(const StageFunctions& stage, const MarketModel& market, int j,
                       double wealth, double consumption, double exposure,
                       int hermite_points) {
    const int n_steps = stage.grid.n_steps;
    if (j < 0 || j >= n_steps) throw DomainError("stage index out of range");
    const auto& nodes = stage.grid.wealth_nodes;
    if (wealth < nodes.front() || wealth > nodes.back())
        throw DomainError("wealth outside the oracle grid hull");

    const std::size_t q =
        static_cast<std::size_t>(hermite_points > 0 ? hermite_points : stage.grid.hermite_points);
    const GaussHermiteRule rule = gauss_hermite(q);
    const bool crra = wealth_is_positive(stage.utility);
    std::vector<double> coords(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        coords[i] = crra ? std::log(nodes[i]) : nodes[i];
    const PchipSpline zspline(coords, stage.continuation[j]);

    StageEvaluator eval;
    eval.rule = &rule;
    eval.utility = &stage.utility;
    eval.crra = crra;
    eval.mu0 = market.mu0();
    eval.big_m = market.excess_quadratic();
    eval.sqrt_m = std::sqrt(eval.big_m);
    eval.eps = stage.epsilon();
    eval.sqrt_eps = std::sqrt(eval.eps);
    eval.bind(zspline);
    eval.flow_weight = stage.flow_weight[j];
    return eval(wealth, consumption, exposure);
}

PolicyPoint extract_policy(const StageFunctions& stage, const MarketModel& market, double t,
                           double wealth) {
    const int n_steps = stage.grid.n_steps;
    const auto& nodes = stage.grid.wealth_nodes;
    if (t < 0.0 || t > stage.horizon) throw DomainError("policy time outside [0, horizon]");
    if (wealth < nodes.front() || wealth > nodes.back())
        throw DomainError("wealth outside the oracle grid hull");

    const double s = t / stage.epsilon();
    int j = std::min(static_cast<int>(std::floor(s)), n_steps - 1);
    const double frac = s - j;

    const bool crra = wealth_is_positive(stage.utility);
    std::vector<double> coords(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        coords[i] = crra ? std::log(nodes[i]) : nodes[i];
    const double xq = crra ? std::log(wealth) : wealth;

    const auto at_stage = [&](int jj) {
        const PchipSpline cs(coords, stage.consumption[jj]);
        const PchipSpline es(coords, stage.exposure[jj]);
        return std::pair<double, double>{cs(xq), es(xq)};
    };

    auto [c, eta] = at_stage(j);
    if (frac > 0.0 && j + 1 < n_steps) {
        const auto [c1, eta1] = at_stage(j + 1);
        c = (1.0 - frac) * c + frac * c1;
        eta = (1.0 - frac) * eta + frac * eta1;
    }
    PolicyPoint p;
    p.consumption = c;
    p.exposure = eta;
    p.portfolio = eta * market.merton_ratio();
    return p;
}

CoefficientPath coefficient_recursion(const DiscountModel& discount, const MarketModel& market,
                                      const UtilitySpec& utility, double horizon, int n_steps,
                                      int hermite_points, RecursionKind recursion) {
    if (utility.kind == UtilitySpec::Kind::Exponential)
        throw DomainError("coefficient recursion requires policies linear in wealth");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("oracle horizon must be positive");
    if (n_steps < 2) throw DomainError("oracle grid needs n_steps >= 2");
    if (hermite_points < 3) throw DomainError("oracle grid needs hermite_points >= 3");

    const bool logu = utility.kind == UtilitySpec::Kind::Log;
    const double gamma = utility.gamma;
    const GaussHermiteRule rule = gauss_hermite(static_cast<std::size_t>(hermite_points));
    const double eps = horizon / n_steps;
    const double sqrt_eps = std::sqrt(eps);
    const double mu0 = market.mu0();
    const double big_m = market.excess_quadratic();
    const double sqrt_m = std::sqrt(big_m);
    const bool equilibrium = recursion == RecursionKind::Equilibrium;

    std::vector<double> theta(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) theta[k] = discount.factor(k * eps);

    // E[g(W'/W)] for one step at propensity lam and exposure eta, where g is
    // ln for log utility and x^gamma for power. Requires the wealth ratio to
    // stay positive at every quadrature node; callers screen with ruined().
    const auto ratio_moment = [&](double lam, double eta) {
        double acc = 0.0;
        for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
            const double g =
                1.0 + (mu0 + eta * big_m - lam) * eps + eta * sqrt_m * sqrt_eps * rule.nodes[m];
            acc += rule.weights[m] * (logu ? std::log(g) : std::pow(g, gamma));
        }
        return acc;
    };
    // With eta >= 0 the smallest ratio is at the most negative quadrature node.
    const auto ruined = [&](double lam, double eta) {
        const double g_min =
            1.0 + (mu0 + eta * big_m - lam) * eps + eta * sqrt_m * sqrt_eps * rule.nodes.front();
        return !(g_min > 0.0);
    };

    constexpr double lam_lo = 1e-8, lam_hi = 20.0;
    constexpr double eta_lo = 0.0, eta_hi = 50.0;

    CoefficientPath path;
    path.times.resize(n_steps);
    path.propensity.resize(n_steps);
    path.exposure.resize(n_steps);
    path.value_scale.resize(n_steps);

    std::vector<double> scale(n_steps + 1, 0.0);  // A_j
    scale[n_steps] = utility.a;
    std::vector<double> hcoef(n_steps, 0.0);  // ln(lam_j) resp. lam_j^gamma
    // suffix aggregate of the per-step ratio moments under equilibrium play:
    // sums for log, products for power
    std::vector<double> suffix(n_steps + 1, logu ? 0.0 : 1.0);

    for (int j = n_steps - 1; j >= 0; --j) {
        const double theta_w = equilibrium ? theta[n_steps - j - 1] : 1.0;
        double p_slope;
        if (equilibrium) {
            p_slope = theta[n_steps - j] * scale[j + 1];
            for (int k = 1; k <= n_steps - j - 1; ++k) {
                const double coef =
                    theta[n_steps - j - 1] * theta[k] - theta[n_steps - j] * theta[k - 1];
                if (logu)
                    p_slope += coef * eps;
                else
                    p_slope += coef * eps * hcoef[j + k] * (suffix[j + 1] / suffix[j + k]);
            }
        } else {
            p_slope = (theta[j + 1] / theta[j]) * scale[j + 1];
        }

        // stage objective at unit wealth; additive terms independent of the
        // controls are dropped
        const auto objective = [&](double lam, double eta) {
            if (ruined(lam, eta)) return -std::numeric_limits<double>::infinity();
            const double m = ratio_moment(lam, eta);
            if (logu) return theta_w * eps * std::log(lam) + p_slope * m;
            return theta_w * eps * std::pow(lam, gamma) / gamma + p_slope * m / gamma;
        };
        const auto eta_for = [&](double lam) {
            if (big_m <= 0.0) return 0.0;
            const double base = 1.0 + (mu0 - lam) * eps;
            if (!(base > 0.0)) return 0.0;
            const double slope = big_m * eps + sqrt_m * sqrt_eps * rule.nodes.front();
            const double cap = slope < 0.0 ? std::min(eta_hi, 0.999 * base / -slope) : eta_hi;
            return golden_min([&](double e) { return -objective(lam, e); }, eta_lo, cap,
                              1e-11 * (cap - eta_lo));
        };
        const double lam = golden_min([&](double l) { return -objective(l, eta_for(l)); },
                                      lam_lo, lam_hi, 1e-11 * (lam_hi - lam_lo));
        const double eta = eta_for(lam);
        const double m = ratio_moment(lam, eta);

        if (logu) {
            scale[j] = eps + p_slope / theta_w;
            hcoef[j] = std::log(lam);
            suffix[j] = m + suffix[j + 1];
        } else {
            scale[j] = (theta_w * eps * std::pow(lam, gamma) + p_slope * m) / theta_w;
            hcoef[j] = std::pow(lam, gamma);
            suffix[j] = m * suffix[j + 1];
        }
        path.times[j] = j * eps;
        path.propensity[j] = lam;
        path.exposure[j] = eta;
        path.value_scale[j] = scale[j];
    }
    return path;
}

void write_policy_csv(const StageFunctions& stage, const MarketModel& market,
                      std::ostream& out) {
    const Eigen::VectorXd direction = market.merton_ratio();
    const Eigen::Index m = direction.size();
    out << "j,t,W,c";
    for (Eigen::Index k = 0; k < m; ++k) out << ",w_" << (k + 1);
    out << ",V,H\n";
    char buf[32];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    const double eps = stage.epsilon();
    for (int j = 0; j < stage.grid.n_steps; ++j) {
        for (std::size_t i = 0; i < stage.grid.wealth_nodes.size(); ++i) {
            out << j << ',';
            put(j * eps);
            out << ',';
            put(stage.grid.wealth_nodes[i]);
            out << ',';
            put(stage.consumption[j][i]);
            for (Eigen::Index k = 0; k < m; ++k) {
                out << ',';
                put(stage.exposure[j][i] * direction(k));
            }
            out << ',';
            put(stage.value[j][i]);
            out << ',';
            put(stage.flow_utility[j][i]);
            out << '\n';
        }
    }
}

}  // namespace ned
