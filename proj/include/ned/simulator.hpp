#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ned/market.hpp"
#include "ned/policy.hpp"

namespace ned {

/// Time-stepping scheme for the wealth SDE. Only Euler-Maruyama is
/// implemented; the drift and diffusion are smooth, so first-order weak
/// accuracy is all the downstream checks require.
enum class SdeScheme { EulerMaruyama };

/// Description of one Monte Carlo run over the policy's horizon [0, T].
/// Identical specs produce bitwise-identical results on one platform,
/// independent of thread count: variates are counter-based per (path, step)
/// and reductions run in a fixed chunk order.
struct SimulationSpec {
    std::int64_t n_paths = 10000;
    int n_steps = 256;
    std::uint64_t seed = 0;
    /// Initial wealth. Must be positive for log/power policies; any real
    /// value is accepted for exponential policies.
    double W0 = 1.0;
    SdeScheme scheme = SdeScheme::EulerMaruyama;
    /// Pairs path 2m+1 with the sign-flipped normals of path 2m.
    bool antithetic = false;
    /// Keeps every (wealth, consumption) sample for export.
    bool retain_paths = false;
};

/// Per-step sample statistics over paths, plus bankruptcy diagnostics.
/// All vectors have n_steps + 1 entries, one per grid node including t = 0
/// and t = T. Standard deviations use the n-1 divisor and are 0 when only
/// one path is simulated.
struct SimulationResult {
    std::vector<double> times;
    std::vector<double> mean_wealth;
    std::vector<double> std_wealth;
    std::vector<double> mean_consumption;
    std::vector<double> std_consumption;
    /// Paths whose wealth hit the absorbing floor at or before each node.
    std::vector<std::int64_t> bankrupt_by_step;
    std::int64_t bankrupt_paths = 0;
    /// Retained samples, row-major by path, n_paths x (n_steps + 1) each.
    /// Empty unless SimulationSpec::retain_paths is set.
    std::vector<double> wealth_paths;
    std::vector<double> consumption_paths;
};

/// Simulates dW = [pi'(mu - mu0 1) + mu0 W - c] dt + pi' sigma_bar dz under
/// `policy`, re-evaluating consumption and the portfolio each step. pi is
/// the dollar exposure vector: W times the weight vector for log/power,
/// Sigma^{-1}(mu - mu0 1)/(gamma beta(t)) for exponential utility. For
/// log/power policies a path whose wealth falls to 0 or below is absorbed
/// at 1e-12 * W0 and counted as bankrupt. `threads` = 0 uses all cores.
SimulationResult simulate(const Policy& policy, const MarketModel& market,
                          const SimulationSpec& spec, unsigned threads = 0);

/// Deterministic companion of `simulate`: E[W] solves a linear ODE because
/// consumption is proportional to W (log/power, rate mu0 + w'(mu - mu0 1)
/// - lambda(t)) or affine in W (exponential, slope mu0 - beta(t)).
/// Integrated adaptively to 1e-10 and returned on a uniform grid over [0, T].
TimeSeries mean_wealth_ode(const Policy& policy, const MarketModel& market, double W0,
                           double T);

/// Writes per-step statistics as CSV with header
/// t,mean_W,std_W,mean_c,std_c,bankrupt_count (17 significant digits).
void write_simulation_csv(const SimulationResult& result, const std::string& path);

/// Writes retained paths as flat little-endian float64 records
/// [path, step, W, c], one record per (path, node) sample.
void write_paths_binary(const SimulationResult& result, const std::string& path);

}  // namespace ned
