#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ned/closed_policies.hpp"
#include "ned/discount.hpp"
#include "ned/errors.hpp"
#include "ned/market.hpp"
#include "ned/mpe_oracle.hpp"
#include "ned/numerics/gauss_hermite.hpp"
#include "ned/numerics/interp.hpp"

using namespace ned;

namespace {

MarketModel market_005() {  // mu0=0.05, M=0.0625
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    return MarketModel(0.05, Eigen::VectorXd::Constant(1, 0.10), sb);
}

MarketModel market_003() {  // mu0=0.03, M=0.0625
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    return MarketModel(0.03, Eigen::VectorXd::Constant(1, 0.08), sb);
}

MarketModel market_zero_excess() {  // mu=mu0, so the risky position is worthless
    Eigen::MatrixXd sb(1, 1);
    sb << 0.2;
    return MarketModel(0.03, Eigen::VectorXd::Constant(1, 0.03), sb);
}

MixtureDiscount mixture() { return MixtureDiscount({0.5, 0.5}, {0.05, 0.15}); }

}  // namespace

TEST_CASE("terminal slice stores the bequest exactly") {
    auto util = UtilitySpec::log_utility(2.0);
    auto grid = MPEGrid::standard(util, 1.0, 4);
    auto st = backward_induction(ConstantDiscount(0.1), market_005(), util, 1.0, grid);
    REQUIRE(st.value.size() == 5);
    for (std::size_t i = 0; i < grid.wealth_nodes.size(); i += 25)
        CHECK(st.value[4][i] == 2.0 * std::log(grid.wealth_nodes[i]));
}

TEST_CASE("log constant-rate equilibrium converges to the closed policy at first order") {
    ConstantDiscount rho(0.1);
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    const double lam_closed = 1.0 / log_constant_alpha(0.1, 1.0, 0.0, 1.0);

    std::vector<double> errs;
    double eta64 = 0.0;
    for (int n : {16, 32, 64}) {
        auto grid = MPEGrid::standard(util, 1.0, n);
        auto st = backward_induction(rho, mkt, util, 1.0, grid);
        auto p = extract_policy(st, mkt, 0.0, 1.0);
        errs.push_back(std::abs(p.consumption - lam_closed) / lam_closed);
        eta64 = p.exposure;
        CHECK(st.diagnostics.negative_wealth_clamps == 0);
        CHECK(st.diagnostics.consumption_box_contacts == 0);
        CHECK(st.diagnostics.exposure_box_contacts == 0);
    }
    CHECK(errs[2] < 1e-3);
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.2));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.2));
    // log utility holds the full merton ratio, i.e. unit exposure
    CHECK(std::abs(eta64 - 1.0) < 0.02);
}

TEST_CASE("equilibrium and pre-commitment recursions coincide at a constant rate") {
    ConstantDiscount rho(0.15);
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 16);
    auto eq = backward_induction(rho, mkt, util, 1.0, grid, RecursionKind::Equilibrium);
    auto pc = backward_induction(rho, mkt, util, 1.0, grid, RecursionKind::PreCommitment);
    double value_gap = 0.0, cons_gap = 0.0;
    for (int j = 0; j < 16; ++j)
        for (std::size_t i = 0; i < grid.wealth_nodes.size(); ++i) {
            value_gap = std::max(value_gap, std::abs(eq.value[j][i] - pc.value[j][i]) /
                                                (1.0 + std::abs(pc.value[j][i])));
            cons_gap = std::max(cons_gap, std::abs(eq.consumption[j][i] - pc.consumption[j][i]) /
                                              pc.consumption[j][i]);
        }
    CHECK(value_gap < 1e-10);
    CHECK(cons_gap < 1e-6);
}

TEST_CASE("deterministic cake eating matches the scalar recursion and scales linearly") {
    auto mix = mixture();
    auto mkt = market_zero_excess();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 32, 401, 7, 3.0);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    auto sc = coefficient_recursion(mix, mkt, util, 1.0, 32);

    auto p1 = extract_policy(st, mkt, 0.0, 1.0);
    CHECK(p1.consumption == doctest::Approx(sc.propensity[0]).epsilon(1e-6));
    CHECK(p1.exposure == 0.0);

    // the log policy is linear in wealth, so off-node extraction must scale
    auto pe = extract_policy(st, mkt, 0.0, std::exp(1.0));
    CHECK(pe.consumption / std::exp(1.0) == doctest::Approx(sc.propensity[0]).epsilon(1e-6));
}

TEST_CASE("log mixture equilibrium agrees with the closed sophisticated policy") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    const double lam_s = log_sophisticated_consumption(mix, 1.0, 0.0, 1.0, 1.0);

    auto grid = MPEGrid::standard(util, 1.0, 64);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    auto p = extract_policy(st, mkt, 0.0, 1.0);
    CHECK(std::abs(p.consumption - lam_s) / lam_s < 1e-3);

    auto sc = coefficient_recursion(mix, mkt, util, 1.0, 64);
    CHECK(p.consumption == doctest::Approx(sc.propensity[0]).epsilon(1e-6));
}

TEST_CASE("log policies are wealth independent across the whole grid") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 32);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    const std::size_t n = grid.wealth_nodes.size();
    for (int j : {0, 16, 31}) {
        const auto spread = [&](std::size_t lo, std::size_t hi) {
            double lam_lo = 1e300, lam_hi = -1e300;
            for (std::size_t i = lo; i < hi; ++i) {
                const double lam = st.consumption[j][i] / grid.wealth_nodes[i];
                lam_lo = std::min(lam_lo, lam);
                lam_hi = std::max(lam_hi, lam);
            }
            return (lam_hi - lam_lo) / lam_lo;
        };
        // hull truncation leaves a boundary layer a few nodes wide; away from
        // it the propensity is flat to interpolation accuracy
        CHECK(spread(16, n - 16) < 1e-4);
        CHECK(spread(0, n) < 1e-3);
        double eta_lo = 1e300, eta_hi = -1e300;
        for (std::size_t i = 0; i < n; ++i) {
            eta_lo = std::min(eta_lo, st.exposure[j][i]);
            eta_hi = std::max(eta_hi, st.exposure[j][i]);
        }
        CHECK(eta_hi - eta_lo < 1e-3);
    }
}

TEST_CASE("stage objective reduces to flow plus discounted bequest at the last stage") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    const int n = 16;
    auto grid = MPEGrid::standard(util, 1.0, n);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);

    const double eps = st.epsilon();
    const double theta1 = mix.factor(eps);
    std::vector<double> coords(grid.wealth_nodes.size()), zs(grid.wealth_nodes.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        coords[i] = std::log(grid.wealth_nodes[i]);
        zs[i] = theta1 * st.value[n][i];
    }
    const PchipSpline z(coords, zs);
    const auto rule = gauss_hermite(7);

    // (w, c, eta) chosen so every quadrature successor stays inside the hull
    const double w = 1.0, c = 0.5, eta = 1.0;
    const double big_m = mkt.excess_quadratic();
    double manual = std::log(c) * eps;
    for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
        const double wn = w * (1.0 + (mkt.mu0() + eta * big_m) * eps) - c * eps +
                          eta * std::sqrt(big_m) * w * std::sqrt(eps) * rule.nodes[m];
        manual += rule.weights[m] * z(std::log(wn));
    }
    CHECK(stage_objective(st, mkt, n - 1, w, c, eta) ==
          doctest::Approx(manual).epsilon(1e-13));
    // explicit quadrature order equal to the grid default changes nothing
    CHECK(stage_objective(st, mkt, n - 1, w, c, eta, 7) ==
          stage_objective(st, mkt, n - 1, w, c, eta));
}

TEST_CASE("stage objective is stable under quadrature refinement") {
    auto mix = mixture();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 16);
    auto st = backward_induction(mix, market_005(), util, 1.0, grid);
    const double o7 = stage_objective(st, market_005(), 8, 1.0, 0.6, 1.0);
    const double o9 = stage_objective(st, market_005(), 8, 1.0, 0.6, 1.0, 9);
    CHECK(std::abs(o7 - o9) < 1e-12);

    auto putil = UtilitySpec::power(0.5, 1.0);
    auto pgrid = MPEGrid::standard(putil, 1.0, 16);
    auto pst = backward_induction(mix, market_003(), putil, 1.0, pgrid);
    const double p7 = stage_objective(pst, market_003(), 8, 1.0, 0.2, 2.0);
    const double p9 = stage_objective(pst, market_003(), 8, 1.0, 0.2, 2.0, 9);
    CHECK(std::abs(p7 - p9) < 1e-5);
}

TEST_CASE("stored tables are mutually consistent at the maximizer") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 8);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    for (int j : {0, 4, 7})
        for (std::size_t i = 40; i < grid.wealth_nodes.size(); i += 60) {
            const double obj = stage_objective(st, mkt, j, grid.wealth_nodes[i],
                                               st.consumption[j][i], st.exposure[j][i]);
            CHECK(obj == doctest::Approx(st.value[j][i] * st.flow_weight[j]).epsilon(1e-13));
            CHECK(st.flow_utility[j][i] == std::log(st.consumption[j][i]));
        }
}

TEST_CASE("extraction is exact on nodes and blends linearly in time") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 16);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    const double eps = st.epsilon();

    const std::size_t i = 100;
    const double w = grid.wealth_nodes[i];
    auto p = extract_policy(st, mkt, 0.0, w);
    CHECK(p.consumption == st.consumption[0][i]);
    CHECK(p.exposure == st.exposure[0][i]);
    REQUIRE(p.portfolio.size() == 1);
    CHECK(p.portfolio(0) == doctest::Approx(p.exposure * mkt.merton_ratio()(0)).epsilon(1e-15));

    auto a = extract_policy(st, mkt, 3 * eps, w);
    auto b = extract_policy(st, mkt, 4 * eps, w);
    auto mid = extract_policy(st, mkt, 3.25 * eps, w);
    CHECK(mid.consumption ==
          doctest::Approx(0.75 * a.consumption + 0.25 * b.consumption).epsilon(1e-12));
    CHECK(mid.exposure == doctest::Approx(0.75 * a.exposure + 0.25 * b.exposure).epsilon(1e-12));
}

TEST_CASE("tight wealth hulls are reported without corrupting positivity") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 16, 51, 7, 0.5);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);
    CHECK(st.diagnostics.wealth_hull_contacts > 0);
    CHECK(st.diagnostics.negative_wealth_clamps == 0);
}

TEST_CASE("worker count does not change the result") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 8);
    auto one = backward_induction(mix, mkt, util, 1.0, grid, RecursionKind::Equilibrium, 1);
    auto three = backward_induction(mix, mkt, util, 1.0, grid, RecursionKind::Equilibrium, 3);
    for (int j = 0; j <= 8; ++j)
        for (std::size_t i = 0; i < grid.wealth_nodes.size(); ++i) {
            CHECK(one.value[j][i] == three.value[j][i]);
            if (j < 8) CHECK(one.consumption[j][i] == three.consumption[j][i]);
        }
}

TEST_CASE("exponential-utility equilibrium converges to the constant-rate closed policy") {
    ConstantDiscount rho(0.1);
    auto mkt = market_005();
    auto util = UtilitySpec::exponential(1.0, 2.0);
    auto pol = closed_policy(util, AgentKind::constant_rate(0.1), rho, mkt, 1.0);
    const double c_closed = consumption_from_policy(pol, 1.0, 0.0);
    const double eta_closed = 1.0 / (*pol.beta)(0.0);

    auto grid = MPEGrid::standard(util, 1.0, 32);
    auto st = backward_induction(rho, mkt, util, 1.0, grid);
    auto p = extract_policy(st, mkt, 0.0, 1.0);
    CHECK(std::abs(p.consumption - c_closed) / std::abs(c_closed) < 3e-3);
    CHECK(std::abs(p.exposure - eta_closed) < 0.1);
}

TEST_CASE("power pre-commitment recursion approaches the closed consumption") {
    auto mix = mixture();
    auto mkt = market_003();
    auto util = UtilitySpec::power(0.5, 1.0);
    const double c_closed = power_precommit_consumption(mix, mkt, 0.5, 1.0, 5.0, 10.0, 1.0);

    auto grid = MPEGrid::standard(util, 1.0, 128, 301, 7, 9.0);
    auto st = backward_induction(mix, mkt, util, 10.0, grid, RecursionKind::PreCommitment);
    auto p = extract_policy(st, mkt, 5.0, 1.0);
    CHECK(std::abs(p.consumption - c_closed) / c_closed < 5e-3);
}

TEST_CASE("scalar recursion rejects wealth-inseparable utilities") {
    auto util = UtilitySpec::exponential(1.0, 2.0);
    CHECK_THROWS_AS(coefficient_recursion(mixture(), market_005(), util, 1.0, 16), DomainError);
}

TEST_CASE("oracle inputs are validated") {
    auto util = UtilitySpec::log_utility(1.0);
    auto mkt = market_005();
    auto grid = MPEGrid::standard(util, 1.0, 8);

    SUBCASE("horizon must be positive") {
        CHECK_THROWS_AS(backward_induction(mixture(), mkt, util, 0.0, grid), DomainError);
    }
    SUBCASE("wealth nodes must be positive for log utility") {
        MPEGrid bad = grid;
        bad.wealth_nodes.front() = -1.0;
        CHECK_THROWS_AS(backward_induction(mixture(), mkt, util, 1.0, bad), DomainError);
    }
    SUBCASE("wealth nodes must increase") {
        MPEGrid bad = grid;
        bad.wealth_nodes[5] = bad.wealth_nodes[4];
        CHECK_THROWS_AS(backward_induction(mixture(), mkt, util, 1.0, bad), DomainError);
    }
    SUBCASE("queries outside the table fail loudly") {
        auto st = backward_induction(mixture(), mkt, util, 1.0, grid);
        CHECK_THROWS_AS(extract_policy(st, mkt, 2.0, 1.0), DomainError);
        CHECK_THROWS_AS(extract_policy(st, mkt, 0.5, 1e9), DomainError);
        CHECK_THROWS_AS(stage_objective(st, mkt, 8, 1.0, 0.5, 1.0), DomainError);
    }
}

TEST_CASE("policy table export is parseable") {
    auto mix = mixture();
    auto mkt = market_005();
    auto util = UtilitySpec::log_utility(1.0);
    auto grid = MPEGrid::standard(util, 1.0, 4, 11, 7, 2.0);
    auto st = backward_induction(mix, mkt, util, 1.0, grid);

    std::ostringstream out;
    write_policy_csv(st, mkt, out);
    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "j,t,W,c,w_1,V,H");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4 * 11);
}
