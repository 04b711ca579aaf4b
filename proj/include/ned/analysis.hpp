#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ned/discount.hpp"
#include "ned/market.hpp"
#include "ned/mpe_oracle.hpp"
#include "ned/policy.hpp"
#include "ned/soph_solver.hpp"

namespace ned {

/// lambda(t) = c(W, t) / W for policies whose consumption is proportional to
/// wealth (log and power utility). Exponential consumption is affine in W, so
/// no wealth-free propensity exists and such policies are rejected.
double propensity(const Policy& policy, double t);

/// Infinite-horizon propensities to consume. The pre-commitment propensity
/// stays a function of elapsed time; the naive and sophisticated ones are
/// constants. `effective_rate_*` is the constant discount rate rho solving
/// lambda = (rho - delta_p) / (1 - gamma), i.e. the rate under which a
/// constant-rate agent consumes at the same propensity (equal to lambda
/// itself for log utility).
///
/// The sophisticated constant depends on a wealth-drift gap Delta the model
/// leaves open, so it is reported under BOTH readings rather than guessing:
///  * `lambda_soph_limit`: Delta = mu0 + M/(2(1-gamma)) - lambda^S, solved
///    self-consistently (the gap generated by the equilibrium rule itself);
///  * `lambda_soph_naive_delta`: Delta anchored at the naive constant,
///    Delta = mu0 + M/(2(1-gamma)) - lambda^N.
/// For log utility the kernel is drift-free and all constants coincide with
/// 1 / int_0^inf theta.
struct InfiniteHorizonPropensities {
    std::function<double(double)> lambda_pre;
    double lambda_naive = 0.0;
    double lambda_soph_limit = 0.0;
    double lambda_soph_naive_delta = 0.0;
    double effective_rate_naive = 0.0;
    double effective_rate_soph = 0.0;
};

/// Computes the limits above from the discount curve and the market. The
/// returned `lambda_pre` keeps `discount` alive, hence the shared pointer.
/// Requires lim r(t) = rbar to exist with rbar > delta_p (rbar > 0 for log);
/// otherwise the consumption integrals diverge and a
/// "transversality-violation" domain error is thrown. Exponential utility is
/// rejected (consumption is not proportional to wealth).
InfiniteHorizonPropensities infinite_horizon_propensities(
    std::shared_ptr<const DiscountModel> discount, const MarketModel& market,
    const UtilitySpec& utility);

/// Outcome of the constant-rate equivalence test for the log naive rule.
struct EquivalenceVerdict {
    bool equivalent = false;  ///< max_deviation < 1e-9
    double max_deviation = 0.0;
};

/// Tests whether a naive log agent under `discount` with bequest weight `a`
/// is observationally identical to a constant-rate agent at `rho_candidate`:
///   a theta(T-t) + int_0^{T-t} theta(u) du  ==  (a - 1/rho) e^{-rho(T-t)} + 1/rho
/// checked on the 41-node grid t = T k/40. Requires a >= 0 and
/// rho_candidate > 0.
EquivalenceVerdict observational_equivalence_log(const DiscountModel& discount, double a,
                                                 double rho_candidate, double T);

/// The problem instance shared by every agent in a comparison. The discount
/// model is held by pointer because reports can outlive the call.
struct ProblemSpec {
    std::shared_ptr<const DiscountModel> discount;
    MarketModel market;
    UtilitySpec utility;
    double horizon = 1.0;
    double w0 = 1.0;
};

/// One agent's slice of the comparison: formula values on the shared time
/// grid, or the reason its construction failed.
struct AgentReport {
    AgentKind agent = AgentKind::naive();
    bool present = false;
    std::string omission;               ///< error text when absent
    std::vector<double> consumption;    ///< c(w0, t) on the grid
    std::vector<double> propensity;     ///< c/W; empty for exponential utility
    std::vector<double> wealth_slope;   ///< exponential beta(t); empty otherwise
    Eigen::VectorXd portfolio_weights;  ///< at (w0, t = 0)
};

/// Sup-norm gap between two agents' consumption columns and the grid time
/// attaining it.
struct GapEntry {
    std::string first;
    std::string second;
    double gap = 0.0;
    double witness_t = 0.0;
};

/// One comparative-statics check. `value` is the measured statistic named in
/// `note` (a deviation, or a minimal slack where negative means violated);
/// `witness_t` is the grid time where the statistic binds tightest.
struct CheckEntry {
    std::string name;
    bool holds = false;
    double value = 0.0;
    double witness_t = 0.0;
    std::string note;
};

/// Discrete-time equilibrium cross-check of the sophisticated rule at
/// (w0, 0): backward-induction consumption at n_steps and 2 n_steps, plus the
/// step-extrapolated value 2 fine - coarse the solver is compared against.
struct OracleCrossCheck {
    double coarse = 0.0;
    double fine = 0.0;
    double extrapolated = 0.0;
    double solver = 0.0;
    double relative_gap = 0.0;  ///< |solver - extrapolated| / |solver|
};

/// Side-by-side agent comparison: consumption/propensity columns, pairwise
/// gaps, and the comparative-statics checks, on a 101-node time grid. The
/// grid stops at 0.99 horizon for bequest-free log/power problems because
/// consumption diverges at the horizon.
struct ComparisonReport {
    UtilitySpec utility = UtilitySpec::log_utility(0.0);
    double horizon = 0.0;
    double w0 = 1.0;
    std::vector<double> times;
    std::vector<AgentReport> agents;
    std::vector<GapEntry> consumption_gaps;
    std::vector<CheckEntry> checks;
    std::optional<OracleCrossCheck> oracle;
    bool complete = false;  ///< every agent column present
};

/// Builds the four agents (constant-rate benchmark at rho = r(0),
/// pre-commitment, naive, sophisticated via the fixed-point solver) and
/// evaluates the comparison tables and checks. Per-agent failures are
/// recorded as omissions instead of aborting the report. When `oracle_grid`
/// is given, the sophisticated rule is additionally cross-checked against the
/// discrete-time equilibrium at n_steps and 2 n_steps.
ComparisonReport compare_agents(const ProblemSpec& problem, const SolverConfig& config = {},
                                const std::optional<MPEGrid>& oracle_grid = std::nullopt,
                                unsigned threads = 1);

/// Full report as a JSON document (floats round-trip exactly).
std::string comparison_report_json(const ComparisonReport& report);

/// Long-format `agent,rule,t,value` rows: consumption, propensity and wealth
/// slope per grid time, portfolio weights at t = 0.
void write_comparison_csv(const ComparisonReport& report, std::ostream& out);

}  // namespace ned
