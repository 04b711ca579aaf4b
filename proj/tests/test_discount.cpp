#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "ned/discount.hpp"
#include "ned/numerics/quadrature.hpp"
#include "ned/numerics/rng.hpp"

using namespace ned;

TEST_CASE("constant discount closed forms") {
    ConstantDiscount d(0.1);
    CHECK(d.rate(5.0) == 0.1);
    CHECK(d.factor(0.0) == 1.0);
    CHECK(d.factor(2.0) == doctest::Approx(0.81873075307798186).epsilon(1e-14));
    CHECK(d.factor_integral(0.0, 10.0) ==
          doctest::Approx(6.3212055882855768).epsilon(1e-14));
    CHECK(d.factor_integral(3.0, 3.0) == 0.0);
    CHECK(d.rate_limit() == 0.1);

    ConstantDiscount zero(0.0);
    CHECK(zero.factor(7.0) == 1.0);
    CHECK(zero.factor_integral(1.0, 4.0) == doctest::Approx(3.0));
}

TEST_CASE("barro model: closed-form factor matches quadrature of the rate") {
    BarroDiscount d(0.05, 0.05, 1.0);
    CHECK(d.rate(0.0) == doctest::Approx(0.10).epsilon(1e-15));
    CHECK(d.factor(1.0) == doctest::Approx(0.92163498561295628).epsilon(1e-13));
    CHECK(d.factor(5.0) == doctest::Approx(0.74106784242315397).epsilon(1e-13));
    CHECK(d.factor(0.0) == 1.0);
    CHECK(d.rate_limit() == 0.05);

    for (double tau : {0.3, 1.0, 2.5, 7.0}) {
        const double quad = std::exp(-integrate([&d](double s) { return d.rate(s); }, 0.0, tau));
        CHECK(d.factor(tau) == doctest::Approx(quad).epsilon(1e-10));
    }

    // tiny decay rate exercises the expm1 branch of the exponent
    BarroDiscount slow(0.05, 0.05, 1e-12);
    CHECK(slow.factor(2.0) == doctest::Approx(std::exp(-0.2)).epsilon(1e-9));
}

TEST_CASE("mixture model: stable rate, exact integrals") {
    MixtureDiscount d({0.5, 0.5}, {0.05, 0.15});
    CHECK(d.rate(0.0) == doctest::Approx(0.10).epsilon(1e-15));
    CHECK(std::abs(d.rate(200.0) - 0.05) < 1e-6);  // analytic limit
    CHECK(d.rate(1e6) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(d.rate_limit() == 0.05);
    CHECK(d.factor(0.0) == 1.0);
    CHECK(d.factor(1.0) == doctest::Approx(0.90596870046288591).epsilon(1e-14));
    CHECK(d.factor_integral(0.0, 10.0) ==
          doctest::Approx(6.524259535712233).epsilon(1e-14));
    CHECK(d.factor_integral(0.0, 5.0) ==
          doctest::Approx(3.9707703268159023).epsilon(1e-14));
    CHECK(d.factor_integral(0.0, 1.0) ==
          doctest::Approx(0.95201250024266722).epsilon(1e-14));

    for (double tau : {0.5, 2.0, 9.0}) {
        const double quad =
            std::exp(-integrate([&d](double s) { return d.rate(s); }, 0.0, tau));
        CHECK(d.factor(tau) == doctest::Approx(quad).epsilon(1e-9));
    }
}

TEST_CASE("tabulated model: linear rate, constant extrapolation, exact cumulative") {
    TabulatedDiscount d({0.0, 1.0, 2.0}, {0.2, 0.1, 0.1});
    CHECK(d.rate(0.5) == doctest::Approx(0.15));
    CHECK(d.rate(5.0) == doctest::Approx(0.1));  // beyond last node
    CHECK(d.rate_limit() == 0.1);
    CHECK(d.factor(0.0) == 1.0);
    CHECK(d.factor(1.0) == doctest::Approx(std::exp(-0.15)).epsilon(1e-14));
    CHECK(d.factor(3.0) == doctest::Approx(std::exp(-0.35)).epsilon(1e-14));

    // nodes that start after 0 extrapolate the first value backwards
    TabulatedDiscount late({1.0, 2.0}, {0.3, 0.1});
    CHECK(late.rate(0.0) == doctest::Approx(0.3));
    CHECK(late.factor(2.0) == doctest::Approx(std::exp(-(0.3 + 0.2))).epsilon(1e-14));

    for (double tau : {0.4, 1.7, 4.0}) {
        const double quad =
            std::exp(-integrate([&d](double s) { return d.rate(s); }, 0.0, tau));
        CHECK(d.factor(tau) == doctest::Approx(quad).epsilon(1e-9));
    }
    const double qint = d.factor_integral(0.5, 3.5);
    CHECK(qint == doctest::Approx(integrate([&d](double u) { return d.factor(u); }, 0.5,
                                            3.5)).epsilon(1e-9));
}

TEST_CASE("theta(0) = 1 exactly and theta nonincreasing for every kind") {
    std::vector<std::shared_ptr<DiscountModel>> models = {
        std::make_shared<ConstantDiscount>(0.1),
        std::make_shared<BarroDiscount>(0.05, 0.05, 1.0),
        std::make_shared<MixtureDiscount>(std::vector<double>{0.5, 0.5},
                                          std::vector<double>{0.05, 0.15}),
        std::make_shared<TabulatedDiscount>(std::vector<double>{0.0, 1.0, 2.0},
                                            std::vector<double>{0.2, 0.1, 0.1}),
    };
    for (const auto& m : models) {
        CAPTURE(m->kind());
        CHECK(m->factor(0.0) == 1.0);
        double prev = 1.0;
        for (int k = 1; k <= 200; ++k) {
            const double th = m->factor(0.05 * k);
            CHECK(th > 0.0);
            CHECK(th <= prev + 1e-12);
            prev = th;
        }
        CHECK(m->is_nonincreasing(10.0));
    }
}

TEST_CASE("subadditivity theta(s)theta(t) <= theta(s+t) under nonincreasing rates") {
    std::vector<std::shared_ptr<DiscountModel>> models = {
        std::make_shared<BarroDiscount>(0.05, 0.05, 1.0),
        std::make_shared<MixtureDiscount>(std::vector<double>{0.5, 0.5},
                                          std::vector<double>{0.05, 0.15}),
        std::make_shared<TabulatedDiscount>(std::vector<double>{0.0, 1.0, 2.0},
                                            std::vector<double>{0.2, 0.1, 0.1}),
    };
    CounterRng rng(7);
    for (const auto& m : models) {
        CAPTURE(m->kind());
        REQUIRE(m->is_nonincreasing(20.0));
        for (int k = 0; k < 1000; ++k) {
            const double s = 10.0 * rng.uniform(static_cast<std::uint64_t>(k), 0, 0);
            const double t = 10.0 * rng.uniform(static_cast<std::uint64_t>(k), 1, 0);
            REQUIRE(m->factor(s) * m->factor(t) <= m->factor(s + t) + 1e-12);
        }
    }

    // an increasing tabulated rate is detected by the probe
    TabulatedDiscount inc({0.0, 5.0}, {0.05, 0.25});
    CHECK_FALSE(inc.is_nonincreasing(10.0));
}

TEST_CASE("discount models reject invalid construction and arguments") {
    CHECK_THROWS_AS(ConstantDiscount(-0.1), ConfigError);
    CHECK_THROWS_AS(BarroDiscount(0.05, 0.05, 0.0), ConfigError);
    CHECK_THROWS_AS(BarroDiscount(0.01, -0.05, 1.0), ConfigError);
    CHECK_THROWS_AS(MixtureDiscount({0.5, 0.4}, {0.05, 0.15}), ConfigError);
    CHECK_THROWS_AS(MixtureDiscount({0.5, 0.5}, {0.05, -0.15}), ConfigError);
    CHECK_THROWS_AS(MixtureDiscount({1.0}, {0.05, 0.15}), ConfigError);
    CHECK_THROWS_AS(TabulatedDiscount({1.0, 0.5}, {0.1, 0.1}), ConfigError);
    CHECK_THROWS_AS(TabulatedDiscount({0.0, 1.0}, {0.1, -0.1}), ConfigError);

    ConstantDiscount d(0.1);
    CHECK_THROWS_AS(d.rate(-1.0), DomainError);
    CHECK_THROWS_AS(d.factor(-0.5), DomainError);
    CHECK_THROWS_AS(d.factor_integral(2.0, 1.0), DomainError);
}
