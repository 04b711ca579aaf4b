#include "ned/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ned/closed_policies.hpp"
#include "ned/discount.hpp"
#include "ned/market.hpp"

using namespace ned;

namespace {

MarketModel equity_market() {
    Eigen::VectorXd mu(1);
    mu << 0.08;
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    return MarketModel(0.03, mu, sb);
}

Policy log_constant_policy(double a, double T) {
    const ConstantDiscount rho(0.1);
    return closed_policy(UtilitySpec::log_utility(a), AgentKind::naive(), rho,
                         equity_market(), T, 2001);
}

/// Exact mean of the Euler iterates: the diffusion term has zero mean and is
/// independent of W_k, so E[W_{k+1}] = E[W_k](1 + (mubar - lambda(t_k)) dt).
double euler_mean_exact(const Policy& policy, const MarketModel& market, int n_steps,
                        double T) {
    const double growth = market.mu0() + policy.portfolio_coeff.dot(market.excess());
    const double dt = T / n_steps;
    double m = 1.0;
    for (int k = 0; k < n_steps; ++k)
        m *= 1.0 + (growth - consumption_from_policy(policy, 1.0, dt * k)) * dt;
    return m;
}

}  // namespace

TEST_CASE("simulated mean wealth matches the exact euler mean and the mean ODE") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);

    SimulationSpec spec;
    spec.n_paths = 100000;
    spec.n_steps = 256;
    spec.seed = 2026;
    const SimulationResult r = simulate(pol, mkt, spec);

    const double euler = euler_mean_exact(pol, mkt, 256, 1.0);
    const TimeSeries ode = mean_wealth_ode(pol, mkt, 1.0, 1.0);
    CHECK(euler == doctest::Approx(0.534688755).epsilon(2e-9));
    CHECK(ode(1.0) == doctest::Approx(0.534633832).epsilon(2e-9));

    const double se = r.std_wealth.back() / std::sqrt(double(spec.n_paths));
    CHECK(se == doctest::Approx(4.294e-4).epsilon(0.05));
    CHECK(std::fabs(r.mean_wealth.back() - euler) < 3.0 * se);
    CHECK(std::fabs(r.mean_wealth.back() - ode(1.0)) < 3.0 * se);
    CHECK(r.bankrupt_paths == 0);

    // terminal consumption rate is 1/a = 1, so mean c(T) equals mean W(T)
    CHECK(r.mean_consumption.back() ==
          doctest::Approx(r.mean_wealth.back()).epsilon(1e-12));

    // constant propensity case: a = 1/rho makes lambda identically rho
    const Policy flat = log_constant_policy(10.0, 1.0);
    const TimeSeries ode_flat = mean_wealth_ode(flat, mkt, 1.0, 1.0);
    CHECK(ode_flat(1.0) == doctest::Approx(std::exp(0.0925 - 0.1)).epsilon(1e-9));
}

TEST_CASE("euler weak bias shrinks linearly in the step size") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);
    const TimeSeries ode = mean_wealth_ode(pol, mkt, 1.0, 1.0);
    const double exact = ode(1.0);

    // The deterministic part of the error is the euler-mean recursion minus
    // the ODE mean; halving dt halves it.
    const double b64 = euler_mean_exact(pol, mkt, 64, 1.0) - exact;
    const double b128 = euler_mean_exact(pol, mkt, 128, 1.0) - exact;
    const double b256 = euler_mean_exact(pol, mkt, 256, 1.0) - exact;
    CHECK(b64 > 0.0);
    CHECK(b64 / b128 == doctest::Approx(2.0).epsilon(0.03));
    CHECK(b128 / b256 == doctest::Approx(2.0).epsilon(0.03));

    // The Monte Carlo mean scatters around the euler mean within noise.
    for (int n : {64, 128, 256}) {
        SimulationSpec spec;
        spec.n_paths = 20000;
        spec.n_steps = n;
        spec.seed = 2026;
        const SimulationResult r = simulate(pol, mkt, spec);
        const double se = r.std_wealth.back() / std::sqrt(double(spec.n_paths));
        CHECK(std::fabs(r.mean_wealth.back() - euler_mean_exact(pol, mkt, n, 1.0)) <
              3.0 * se);
    }
}

TEST_CASE("zero exposure and zero consumption reproduce risk-free growth") {
    // Market with mu0 = 1e-3; the policy holds no risky asset and consumes
    // W/1e300 ~ 0, so every path compounds deterministically. 2^14 steps
    // bring the compounding error (mu0 T)^2/(2 n) ~ 3e-11 under the pin.
    Eigen::VectorXd mu(1);
    mu << 0.002;
    Eigen::MatrixXd sb(1, 1);
    sb << 0.1;
    const MarketModel mkt(0.001, mu, sb);
    const Policy freeze{UtilitySpec::log_utility(1.0), AgentKind::naive(),
                        Eigen::VectorXd::Zero(1),
                        TimeSeries({0.0, 1.0}, {1e300, 1e300}), std::nullopt, 1.0};

    SimulationSpec spec;
    spec.n_paths = 4;
    spec.n_steps = 1 << 14;
    spec.seed = 7;
    spec.retain_paths = true;
    const SimulationResult r = simulate(freeze, mkt, spec);

    const double target = std::exp(0.001);
    CHECK(std::fabs(r.mean_wealth.back() - target) / target < 1e-10);
    CHECK(r.std_wealth.back() == 0.0);
    for (int p = 0; p < 4; ++p) {
        const double wT = r.wealth_paths[std::size_t(p) * (spec.n_steps + 1) +
                                         std::size_t(spec.n_steps)];
        CHECK(wT == r.mean_wealth.back());
    }
}

TEST_CASE("results are bitwise reproducible and thread-count independent") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);
    SimulationSpec spec;
    spec.n_paths = 5000;
    spec.n_steps = 64;
    spec.seed = 2026;

    const SimulationResult a = simulate(pol, mkt, spec, 1);
    const SimulationResult b = simulate(pol, mkt, spec, 1);
    const SimulationResult c = simulate(pol, mkt, spec, 3);

    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
        return x.size() == y.size() &&
               std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
    };
    CHECK(same(a.mean_wealth, b.mean_wealth));
    CHECK(same(a.std_wealth, b.std_wealth));
    CHECK(same(a.mean_consumption, c.mean_consumption));
    CHECK(same(a.mean_wealth, c.mean_wealth));
    CHECK(same(a.std_consumption, c.std_consumption));

    SimulationSpec other = spec;
    other.seed = 2027;
    const SimulationResult d = simulate(pol, mkt, other, 1);
    CHECK(d.mean_wealth.back() != a.mean_wealth.back());
}

TEST_CASE("antithetic pairing preserves the mean and reduces estimator variance") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);

    SimulationSpec spec;
    spec.n_paths = 4096;
    spec.n_steps = 32;
    spec.seed = 2026;
    spec.retain_paths = true;
    const SimulationResult plain = simulate(pol, mkt, spec);
    SimulationSpec aspec = spec;
    aspec.antithetic = true;
    const SimulationResult anti = simulate(pol, mkt, aspec);

    const double var_plain =
        plain.std_wealth.back() * plain.std_wealth.back() / double(spec.n_paths);
    CHECK(std::fabs(anti.mean_wealth.back() - plain.mean_wealth.back()) <
          3.0 * std::sqrt(var_plain));

    // estimator variance from the 2048 independent pair means
    const std::size_t nodes = std::size_t(spec.n_steps) + 1;
    const std::size_t pairs = std::size_t(spec.n_paths) / 2;
    double mean = 0.0;
    std::vector<double> g(pairs);
    for (std::size_t m = 0; m < pairs; ++m) {
        g[m] = 0.5 * (anti.wealth_paths[(2 * m) * nodes + nodes - 1] +
                      anti.wealth_paths[(2 * m + 1) * nodes + nodes - 1]);
        mean += g[m];
    }
    mean /= double(pairs);
    double var_pairs = 0.0;
    for (double v : g) var_pairs += (v - mean) * (v - mean);
    var_pairs /= double(pairs - 1);
    const double var_anti = var_pairs / double(pairs);
    CHECK(var_anti < 0.3 * var_plain);
}

TEST_CASE("naive consumption exceeds pre-commitment consumption before the crossing") {
    // Same-seed runs share every Brownian increment, so the gap in mean
    // consumption is far less noisy than either mean. The ordering holds on
    // [0, ~6.6] for this fixture and then reverses: the naive agent's early
    // overconsumption depresses wealth enough that late consumption drops
    // below the pre-commitment path.
    const MarketModel mkt = equity_market();
    const MixtureDiscount mix({0.5, 0.5}, {0.05, 0.15});
    const UtilitySpec logu = UtilitySpec::log_utility(1.0);
    const Policy naive = closed_policy(logu, AgentKind::naive(), mix, mkt, 10.0, 2001);
    const Policy pre =
        closed_policy(logu, AgentKind::pre_commitment(), mix, mkt, 10.0, 2001);

    CHECK(consumption_from_policy(naive, 1.0, 0.0) ==
          doctest::Approx(consumption_from_policy(pre, 1.0, 0.0)).epsilon(1e-12));

    SimulationSpec spec;
    spec.n_paths = 40000;
    spec.n_steps = 200;
    spec.seed = 11;
    const SimulationResult rn = simulate(naive, mkt, spec);
    const SimulationResult rp = simulate(pre, mkt, spec);

    CHECK(rn.mean_consumption[0] == rp.mean_consumption[0]);
    for (int k = 1; k <= 126; ++k)
        CHECK(rn.mean_consumption[k] > rp.mean_consumption[k]);
    for (int k = 140; k <= 200; k += 10)
        CHECK(rn.mean_consumption[k] < rp.mean_consumption[k]);
}

TEST_CASE("exponential policy simulation tracks the affine mean ODE") {
    const ConstantDiscount rho(0.1);
    Eigen::VectorXd mu(1);
    mu << 0.1;
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    const MarketModel mkt(0.05, mu, sb);
    const Policy pol = closed_policy(UtilitySpec::exponential(1.0, 2.0),
                                     AgentKind::naive(), rho, mkt, 1.0, 2001);

    SimulationSpec spec;
    spec.n_paths = 50000;
    spec.n_steps = 128;
    spec.seed = 5;
    const SimulationResult r = simulate(pol, mkt, spec);
    const TimeSeries ode = mean_wealth_ode(pol, mkt, 1.0, 1.0);

    const double se = r.std_wealth.back() / std::sqrt(double(spec.n_paths));
    CHECK(std::fabs(r.mean_wealth.back() - ode(1.0)) < 3.0 * se);
    CHECK(r.bankrupt_paths == 0);  // exponential wealth may go negative, no floor
}

TEST_CASE("bankrupt paths are absorbed at the floor and counted") {
    // Coarse steps with high leverage overshoot below zero on some paths.
    Eigen::VectorXd mu(1);
    mu << 0.4;
    Eigen::MatrixXd sb(1, 1);
    sb << 0.6;
    const MarketModel mkt(0.0, mu, sb);
    const ConstantDiscount rho(0.1);
    const Policy pol = closed_policy(UtilitySpec::log_utility(1.0), AgentKind::naive(),
                                     rho, mkt, 1.0, 501);

    SimulationSpec spec;
    spec.n_paths = 20000;
    spec.n_steps = 8;
    spec.seed = 3;
    spec.retain_paths = true;
    const SimulationResult r = simulate(pol, mkt, spec);

    CHECK(r.bankrupt_paths > 0);
    CHECK(r.bankrupt_paths == r.bankrupt_by_step.back());
    for (std::size_t k = 1; k < r.bankrupt_by_step.size(); ++k)
        CHECK(r.bankrupt_by_step[k] >= r.bankrupt_by_step[k - 1]);

    const double floor_w = 1e-12 * spec.W0;
    const std::size_t nodes = std::size_t(spec.n_steps) + 1;
    std::int64_t found = 0;
    for (std::size_t p = 0; p < std::size_t(spec.n_paths); ++p) {
        bool hit = false;
        for (std::size_t k = 0; k < nodes; ++k) {
            const double w = r.wealth_paths[p * nodes + k];
            if (hit) CHECK(w == floor_w);  // absorbed, no further dynamics
            if (w == floor_w) hit = true;
        }
        if (hit) ++found;
    }
    CHECK(found == r.bankrupt_paths);
}

TEST_CASE("simulation spec and policy preconditions are validated") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);

    SimulationSpec spec;
    spec.n_paths = 0;
    CHECK_THROWS_AS(simulate(pol, mkt, spec), ConfigError);
    spec.n_paths = 10;
    spec.n_steps = 0;
    CHECK_THROWS_AS(simulate(pol, mkt, spec), ConfigError);
    spec.n_steps = 4;
    spec.W0 = 0.0;
    CHECK_THROWS_AS(simulate(pol, mkt, spec), ConfigError);

    CHECK_THROWS_AS(mean_wealth_ode(pol, mkt, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(mean_wealth_ode(pol, mkt, 1.0, 2.0), DomainError);

    SimulationResult empty;
    CHECK_THROWS_AS(write_paths_binary(empty, "/tmp/unused.bin"), DomainError);

    // negative initial wealth is legal for exponential utility
    const ConstantDiscount rho(0.1);
    Eigen::VectorXd mu(1);
    mu << 0.1;
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    const MarketModel me(0.05, mu, sb);
    const Policy pe = closed_policy(UtilitySpec::exponential(1.0, 2.0),
                                    AgentKind::naive(), rho, me, 1.0, 501);
    SimulationSpec es;
    es.n_paths = 16;
    es.n_steps = 8;
    es.W0 = -0.5;
    CHECK_NOTHROW(simulate(pe, me, es));
}

TEST_CASE("csv and binary exports round-trip the retained samples") {
    const MarketModel mkt = equity_market();
    const Policy pol = log_constant_policy(1.0, 1.0);
    SimulationSpec spec;
    spec.n_paths = 8;
    spec.n_steps = 4;
    spec.seed = 42;
    spec.retain_paths = true;
    const SimulationResult r = simulate(pol, mkt, spec);

    const auto dir = std::filesystem::temp_directory_path();
    const std::string csv = (dir / "sim_stats_test.csv").string();
    const std::string bin = (dir / "sim_paths_test.bin").string();

    write_simulation_csv(r, csv);
    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,mean_W,std_W,mean_c,std_c,bankrupt_count");
    std::size_t rows = 0;
    double mean_w_last = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::getline(row, cell, ',');
        mean_w_last = std::stod(cell);
    }
    CHECK(rows == 5);
    // 17 significant digits round-trip doubles exactly
    CHECK(mean_w_last == r.mean_wealth.back());

    write_paths_binary(r, bin);
    std::ifstream binf(bin, std::ios::binary);
    binf.seekg(0, std::ios::end);
    CHECK(std::size_t(binf.tellg()) == 8u * 5u * 4u * sizeof(double));
    binf.seekg(0);
    std::vector<double> rec(8 * 5 * 4);
    binf.read(reinterpret_cast<char*>(rec.data()),
              static_cast<std::streamsize>(rec.size() * sizeof(double)));
    REQUIRE(bool(binf));
    for (std::size_t p = 0; p < 8; ++p) {
        for (std::size_t k = 0; k < 5; ++k) {
            const std::size_t at = 4 * (p * 5 + k);
            CHECK(rec[at] == double(p));
            CHECK(rec[at + 1] == double(k));
            CHECK(rec[at + 2] == r.wealth_paths[p * 5 + k]);
            CHECK(rec[at + 3] == r.consumption_paths[p * 5 + k]);
        }
    }
    std::filesystem::remove(csv);
    std::filesystem::remove(bin);

    CHECK_THROWS_AS(write_simulation_csv(r, "/nonexistent-dir-xyz/out.csv"), IoError);
}
