#pragma once

#include <Eigen/Core>

#include <ostream>
#include <vector>

#include "ned/discount.hpp"
#include "ned/market.hpp"

namespace ned {

/// How the backward recursion treats the passage of time.
enum class RecursionKind {
    /// Equilibrium recursion of the intra-personal game: each stage
    /// re-weights future utility flows with its own discount curve.
    Equilibrium,
    /// Standard dynamic programming under the time-0 discount weights
    /// (the plan the time-0 self would commit to).
    PreCommitment,
};

/// Discretization of the consumption/portfolio problem: N uniform time
/// steps, a strictly increasing wealth grid, and a Gauss-Hermite rule for
/// each Brownian increment.
struct MPEGrid {
    int n_steps = 64;
    std::vector<double> wealth_nodes;
    int hermite_points = 7;

    /// Canonical grid centered on w0: log-spaced over [w0 e^-6, w0 e^6]
    /// with 201 nodes for log/power utility, linear over [-10 w0, 10 w0]
    /// with 401 nodes for exponential. `wealth_count` 0 keeps the default
    /// count; half_span 0 keeps the default span (6 log units or 10 w0).
    static MPEGrid standard(const UtilitySpec& utility, double w0, int n_steps,
                            int wealth_count = 0, int hermite_points = 7,
                            double half_span = 0.0);
};

/// Counters describing where the discretization touched its guard rails.
/// Transition counters are accumulated over the equilibrium flow at the
/// stored maximizers; box counters count stage maximizers pinned at a
/// control-box edge.
struct OracleDiagnostics {
    long negative_wealth_clamps = 0;  ///< transitions with next wealth <= 0
    long wealth_hull_contacts = 0;    ///< transitions deposited outside the grid hull
    long consumption_box_contacts = 0;
    long exposure_box_contacts = 0;
};

/// Backward-induction output. Arrays are indexed [stage][wealth node];
/// `value` has n_steps + 1 rows (row N is the bequest function on the
/// grid), the others have n_steps rows. `continuation` stores the combined
/// future term Z_j so that the stage objective is
///   flow_weight[j] * u(c) * eps + E[Z_j(W')].
struct StageFunctions {
    MPEGrid grid;
    UtilitySpec utility;
    RecursionKind recursion = RecursionKind::Equilibrium;
    double horizon = 0.0;

    std::vector<double> theta;        ///< theta(k eps), k = 0..N
    std::vector<double> flow_weight;  ///< stage weight on the utility flow

    std::vector<std::vector<double>> value;
    std::vector<std::vector<double>> flow_utility;
    std::vector<std::vector<double>> consumption;
    std::vector<std::vector<double>> exposure;
    std::vector<std::vector<double>> continuation;

    OracleDiagnostics diagnostics;

    double epsilon() const { return horizon / grid.n_steps; }
    double stage_time(int j) const { return j * epsilon(); }
};

/// Consumption level, scalar risky exposure, and the materialized portfolio
/// (weights for log/power, dollar positions for exponential).
struct PolicyPoint {
    double consumption = 0.0;
    double exposure = 0.0;
    Eigen::VectorXd portfolio;
};

/// Solves the discrete-time equilibrium (or pre-commitment) dynamic program
/// on the grid by backward induction over stages N-1..0, maximizing each
/// stage objective over (consumption, risky exposure) at every wealth node.
StageFunctions backward_induction(const DiscountModel& discount, const MarketModel& market,
                                  const UtilitySpec& utility, double horizon,
                                  const MPEGrid& grid,
                                  RecursionKind recursion = RecursionKind::Equilibrium,
                                  unsigned threads = 1);

/// Stage-j objective for a candidate control (consumption, exposure) at
/// `wealth`, evaluated with the stored continuation and Hermite quadrature
/// over the next-period wealth. `hermite_points` 0 uses the grid's rule.
double stage_objective(const StageFunctions& stage, const MarketModel& market, int j,
                       double wealth, double consumption, double exposure,
                       int hermite_points = 0);

/// Interpolated stage maximizer at (t, wealth): monotone cubic across the
/// wealth grid, linear blend between adjacent stages in time. On-node,
/// on-stage queries return the stored maximizer exactly.
PolicyPoint extract_policy(const StageFunctions& stage, const MarketModel& market, double t,
                           double wealth);

/// Scalar recursion for utilities whose stage policies are linear in
/// wealth (log and power): propensity[j] = c_j / W and exposure[j] solve
/// the same stage problems with the wealth dependence factored out, so no
/// wealth grid or interpolation enters. Used as a cross-check on the
/// grid-based path; rejects exponential utility.
struct CoefficientPath {
    std::vector<double> times;
    std::vector<double> propensity;
    std::vector<double> exposure;
    std::vector<double> value_scale;  ///< multiplier of ln W resp. W^gamma/gamma
};

CoefficientPath coefficient_recursion(const DiscountModel& discount, const MarketModel& market,
                                      const UtilitySpec& utility, double horizon, int n_steps,
                                      int hermite_points = 7,
                                      RecursionKind recursion = RecursionKind::Equilibrium);

/// Writes `j,t,W,c,w_1..w_m,V,H` rows for every stage and wealth node.
void write_policy_csv(const StageFunctions& stage, const MarketModel& market,
                      std::ostream& out);

}  // namespace ned
