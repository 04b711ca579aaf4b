#include "ned/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "ned/numerics/ode.hpp"
#include "ned/numerics/parallel.hpp"
#include "ned/numerics/rng.hpp"

namespace ned {

namespace {

constexpr std::int64_t kChunkPaths = 1024;

/// Per-step policy coefficients. Consumption is rate[k] * W for log/power
/// and c0[k] + cw[k] * W for exponential utility, so the hot loop never
/// touches the splines.
struct StepTables {
    std::vector<double> rate;
    std::vector<double> c0, cw;
    std::vector<double> drift_x, diff_x;
    double mu0 = 0.0;
    double wdrift = 0.0;
    double wvol = 0.0;
    bool proportional = true;
};

StepTables build_tables(const Policy& policy, const MarketModel& market,
                        const std::vector<double>& times) {
    StepTables tab;
    tab.mu0 = market.mu0();
    tab.proportional = policy.utility.kind != UtilitySpec::Kind::Exponential;
    const std::size_t n = times.size();
    if (tab.proportional) {
        tab.rate.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            tab.rate[k] = consumption_from_policy(policy, 1.0, times[k]);
        const Eigen::VectorXd& w = policy.portfolio_coeff;
        tab.wdrift = w.dot(market.excess());
        tab.wvol = std::sqrt(std::max(0.0, w.dot(market.sigma() * w)));
    } else {
        if (!policy.beta)
            throw DomainError("exponential policy is missing its wealth-slope grid");
        const double gamma = policy.utility.gamma;
        const double big_m = market.excess_quadratic();
        tab.c0.resize(n);
        tab.cw.resize(n);
        tab.drift_x.resize(n);
        tab.diff_x.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double b = (*policy.beta)(times[k]);
            if (!(b > 0.0))
                throw DomainError("boundary-singularity",
                                  "exponential policy slope must stay positive");
            tab.c0[k] = consumption_from_policy(policy, 0.0, times[k]);
            tab.cw[k] = b;
            tab.drift_x[k] = big_m / (gamma * b);
            tab.diff_x[k] = std::sqrt(big_m) / (gamma * b);
        }
    }
    return tab;
}

void validate_initial_wealth(const Policy& policy, double w0) {
    if (!std::isfinite(w0)) throw ConfigError("W0 must be finite");
    if (policy.utility.kind != UtilitySpec::Kind::Exponential && !(w0 > 0.0))
        throw ConfigError("W0 must be positive for log/power policies");
}

struct ChunkAccum {
    std::vector<double> sw, sw2, sc, sc2;
    std::vector<std::int64_t> nb;

    void init(std::size_t nodes) {
        sw.assign(nodes, 0.0);
        sw2.assign(nodes, 0.0);
        sc.assign(nodes, 0.0);
        sc2.assign(nodes, 0.0);
        nb.assign(nodes, 0);
    }
};

}  // namespace

SimulationResult simulate(const Policy& policy, const MarketModel& market,
                          const SimulationSpec& spec, unsigned threads) {
    if (spec.n_paths < 1) throw ConfigError("n_paths must be at least 1");
    if (spec.n_steps < 1) throw ConfigError("n_steps must be at least 1");
    if (!(policy.horizon > 0.0)) throw ConfigError("policy horizon must be positive");
    validate_initial_wealth(policy, spec.W0);

    const double T = policy.horizon;
    const int n = spec.n_steps;
    const std::int64_t paths = spec.n_paths;
    const std::size_t nodes = static_cast<std::size_t>(n) + 1;
    const double dt = T / n;
    const double sqrt_dt = std::sqrt(dt);
    const double floor_w = 1e-12 * spec.W0;

    std::vector<double> times(nodes);
    for (std::size_t k = 0; k < nodes; ++k) times[k] = T * static_cast<double>(k) / n;

    const StepTables tab = build_tables(policy, market, times);
    const CounterRng rng(spec.seed);

    SimulationResult res;
    res.times = times;
    if (spec.retain_paths) {
        const std::int64_t samples = paths * static_cast<std::int64_t>(nodes);
        if (samples > (std::int64_t{1} << 31))
            throw ConfigError("retain_paths would exceed the in-memory sample budget");
        res.wealth_paths.resize(static_cast<std::size_t>(samples));
        res.consumption_paths.resize(static_cast<std::size_t>(samples));
    }

    const std::int64_t n_chunks = (paths + kChunkPaths - 1) / kChunkPaths;
    std::vector<ChunkAccum> chunks(static_cast<std::size_t>(n_chunks));

    const auto run_chunk = [&](std::size_t c) {
        ChunkAccum& acc = chunks[c];
        acc.init(nodes);
        const std::int64_t lo = static_cast<std::int64_t>(c) * kChunkPaths;
        const std::int64_t hi = std::min(lo + kChunkPaths, paths);
        for (std::int64_t p = lo; p < hi; ++p) {
            double W = spec.W0;
            bool bankrupt = false;
            for (int k = 0; k <= n; ++k) {
                const std::size_t uk = static_cast<std::size_t>(k);
                const double cons = tab.proportional ? tab.rate[uk] * W
                                                     : tab.c0[uk] + tab.cw[uk] * W;
                acc.sw[uk] += W;
                acc.sw2[uk] += W * W;
                acc.sc[uk] += cons;
                acc.sc2[uk] += cons * cons;
                if (spec.retain_paths) {
                    const std::size_t at = static_cast<std::size_t>(p) * nodes + uk;
                    res.wealth_paths[at] = W;
                    res.consumption_paths[at] = cons;
                }
                if (k == n) break;
                if (bankrupt) continue;
                const double z =
                    spec.antithetic
                        ? ((p & 1) ? -1.0 : 1.0) *
                              rng.normal(static_cast<std::uint64_t>(p >> 1), uk, 0)
                        : rng.normal(static_cast<std::uint64_t>(p), uk, 0);
                if (tab.proportional) {
                    W = W * (1.0 + (tab.mu0 + tab.wdrift - tab.rate[uk]) * dt +
                             tab.wvol * sqrt_dt * z);
                    if (!(W > 0.0)) {
                        W = floor_w;
                        bankrupt = true;
                        ++acc.nb[uk + 1];
                    }
                } else {
                    W = W + (tab.mu0 * W + tab.drift_x[uk] - cons) * dt +
                        tab.diff_x[uk] * sqrt_dt * z;
                }
            }
        }
    };

    const unsigned th = threads ? threads : default_threads();
    parallel_for(static_cast<std::size_t>(n_chunks), th,
                 [&](std::size_t chunk_begin, std::size_t chunk_end) {
                     for (std::size_t c = chunk_begin; c < chunk_end; ++c) run_chunk(c);
                 });

    res.mean_wealth.resize(nodes);
    res.std_wealth.resize(nodes);
    res.mean_consumption.resize(nodes);
    res.std_consumption.resize(nodes);
    res.bankrupt_by_step.assign(nodes, 0);

    std::vector<double> sw(nodes, 0.0), sw2(nodes, 0.0), sc(nodes, 0.0), sc2(nodes, 0.0);
    std::vector<std::int64_t> nb(nodes, 0);
    for (const ChunkAccum& acc : chunks) {
        for (std::size_t k = 0; k < nodes; ++k) {
            sw[k] += acc.sw[k];
            sw2[k] += acc.sw2[k];
            sc[k] += acc.sc[k];
            sc2[k] += acc.sc2[k];
            nb[k] += acc.nb[k];
        }
    }

    const double np = static_cast<double>(paths);
    for (std::size_t k = 0; k < nodes; ++k) {
        res.mean_wealth[k] = sw[k] / np;
        res.mean_consumption[k] = sc[k] / np;
        if (paths > 1) {
            res.std_wealth[k] =
                std::sqrt(std::max(0.0, (sw2[k] - sw[k] * sw[k] / np) / (np - 1.0)));
            res.std_consumption[k] =
                std::sqrt(std::max(0.0, (sc2[k] - sc[k] * sc[k] / np) / (np - 1.0)));
        } else {
            res.std_wealth[k] = 0.0;
            res.std_consumption[k] = 0.0;
        }
        res.bankrupt_by_step[k] = (k == 0 ? 0 : res.bankrupt_by_step[k - 1]) + nb[k];
    }
    res.bankrupt_paths = res.bankrupt_by_step.back();
    return res;
}

TimeSeries mean_wealth_ode(const Policy& policy, const MarketModel& market, double W0,
                           double T) {
    validate_initial_wealth(policy, W0);
    if (!(T > 0.0)) throw DomainError("horizon must be positive");
    if (T > policy.horizon * (1.0 + 1e-12) + 1e-12)
        throw DomainError("policy does not cover the requested horizon");

    constexpr std::size_t kNodes = 1001;
    std::vector<double> grid(kNodes);
    for (std::size_t i = 0; i < kNodes; ++i)
        grid[i] = T * static_cast<double>(i) / (kNodes - 1);

    std::vector<double> values;
    switch (policy.utility.kind) {
        case UtilitySpec::Kind::Log:
        case UtilitySpec::Kind::Power: {
            const Eigen::VectorXd& w = policy.portfolio_coeff;
            const double growth = market.mu0() + w.dot(market.excess());
            values = ode_solve_grid(
                [&](double t, double m) {
                    return (growth - consumption_from_policy(policy, 1.0, t)) * m;
                },
                W0, grid, 1e-13, 1e-10);
            break;
        }
        case UtilitySpec::Kind::Exponential: {
            if (!policy.beta)
                throw DomainError("exponential policy is missing its wealth-slope grid");
            const double gamma = policy.utility.gamma;
            const double big_m = market.excess_quadratic();
            values = ode_solve_grid(
                [&](double t, double m) {
                    const double b = (*policy.beta)(t);
                    const double c0 = consumption_from_policy(policy, 0.0, t);
                    return (market.mu0() - b) * m + big_m / (gamma * b) - c0;
                },
                W0, grid, 1e-13, 1e-10);
            break;
        }
        default:
            throw DomainError("unsupported-policy",
                            "mean-wealth ODE needs consumption linear or affine in W");
    }
    return TimeSeries(std::move(grid), std::move(values));
}

void write_simulation_csv(const SimulationResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "t,mean_W,std_W,mean_c,std_c,bankrupt_count\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < result.times.size(); ++k) {
        out << result.times[k] << ',' << result.mean_wealth[k] << ','
            << result.std_wealth[k] << ',' << result.mean_consumption[k] << ','
            << result.std_consumption[k] << ',' << result.bankrupt_by_step[k] << '\n';
    }
    if (!out) throw IoError("failed while writing " + path);
}

void write_paths_binary(const SimulationResult& result, const std::string& path) {
    static_assert(std::endian::native == std::endian::little,
                  "binary path dump is specified little-endian");
    if (result.wealth_paths.empty())
        throw DomainError("paths were not retained; set retain_paths in the spec");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const std::size_t nodes = result.times.size();
    const std::size_t paths = result.wealth_paths.size() / nodes;
    std::vector<double> record(4);
    for (std::size_t p = 0; p < paths; ++p) {
        for (std::size_t k = 0; k < nodes; ++k) {
            record[0] = static_cast<double>(p);
            record[1] = static_cast<double>(k);
            record[2] = result.wealth_paths[p * nodes + k];
            record[3] = result.consumption_paths[p * nodes + k];
            out.write(reinterpret_cast<const char*>(record.data()),
                      static_cast<std::streamsize>(4 * sizeof(double)));
        }
    }
    if (!out) throw IoError("failed while writing " + path);
}

}  // namespace ned
