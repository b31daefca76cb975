#include <doctest.h>

#include "lobexec/errors.hpp"
#include "lobexec/impact_model.hpp"
#include "lobexec/rng.hpp"

#include <cmath>
#include <limits>

using namespace lobexec::model;

namespace {

// midpoint rule on a fine grid; exact enough for step shapes away from edges
double moment_by_quadrature(const ShapeTable& s, double a, double b) {
    const int n = 200000;
    const double h = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = a + (i + 0.5) * h;
        acc += x * s.f(x);
    }
    return acc * h;
}

ShapeTable sample_shape() { return ShapeTable::symmetric({0.5, 1.0, 1.5, 2.5, 3.0, 3.0, 4.0}, 4.0); }

}  // namespace

TEST_SUITE("impact") {

TEST_CASE("fresh block book buy") {
    auto st = ImpactState::fresh(Version::V2);
    const auto c = apply_trade(st, ShapeTable::block(1.0), 4.0);
    CHECK(st.D_ask == doctest::Approx(4.0));
    CHECK(c.cost == doctest::Approx(8.0));
    CHECK(c.simple_cost == doctest::Approx(8.0));
}

TEST_CASE("first moment agrees with quadrature and F tilde") {
    const auto s = sample_shape();
    for (auto [a, b] : {std::pair{-9.3, 11.7}, std::pair{0.2, 0.9}, std::pair{3.5, -2.25}}) {
        const double m = first_moment(s, a, b);
        CHECK(m == doctest::Approx(moment_by_quadrature(s, a, b)).epsilon(1e-4));
        CHECK(m == doctest::Approx(s.F_tilde(b) - s.F_tilde(a)).epsilon(1e-12));
    }
}

TEST_CASE("two buys without decay equal one buy") {
    const auto s = sample_shape();
    auto one = ImpactState::fresh(Version::V2, 100.0, 98.0);
    auto two = one;
    const double c1 = apply_trade(one, s, 9.5).cost;
    const double c2 = apply_trade(two, s, 4.0).cost + apply_trade(two, s, 5.5).cost;
    CHECK(c1 == doctest::Approx(c2).epsilon(1e-13));
    CHECK(one.D_ask == doctest::Approx(two.D_ask).epsilon(1e-13));
    CHECK(one.E_ask == doctest::Approx(two.E_ask).epsilon(1e-13));
}

TEST_CASE("decay basics") {
    const auto s = ShapeTable::block(2.0);
    const double tau = 10.0;
    const auto half = ResilienceCurve::constant(std::log(2.0) / tau);
    auto st = ImpactState::fresh(Version::V2);
    decay(st, s, half, tau);
    CHECK(st.D_ask == 0.0);
    st.E_ask = s.F(8.0);
    st.D_ask = 8.0;
    st.anchor_ask = 8.0;
    decay(st, s, half, tau);
    CHECK(st.D_ask == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(st.E_ask == doctest::Approx(8.0).epsilon(1e-14));
    CHECK_THROWS_AS(decay(st, s, half, 0.0), lobexec::InvalidArgument);
    CHECK_THROWS_AS(decay(st, s, half, -1.0), lobexec::InvalidArgument);
}

TEST_CASE("decay is a semigroup within one interval") {
    const auto s = sample_shape();
    const auto rho = ResilienceCurve::monotone({1, 4, 9}, {0.3, 0.1, 0.05});
    for (Version v : {Version::V1, Version::V2}) {
        auto a = ImpactState::fresh(v);
        apply_trade(a, s, 12.0);
        apply_trade(a, s, -3.0);
        auto b = a;
        decay(a, s, rho, 3.0);
        decay(b, s, rho, 1.5);
        decay(b, s, rho, 1.5);
        CHECK(a.D_ask == doctest::Approx(b.D_ask).epsilon(1e-13));
        CHECK(a.E_bid == doctest::Approx(b.E_bid).epsilon(1e-13));
        CHECK(a.E_simple == doctest::Approx(b.E_simple).epsilon(1e-13));
    }
}

TEST_CASE("constant rate matches the closed form") {
    const auto s = sample_shape();
    const double rho = 0.07;
    auto st = ImpactState::fresh(Version::V1);
    apply_trade(st, s, 10.0);
    decay(st, s, ResilienceCurve::constant(rho), 13.0);
    CHECK(st.E_ask == doctest::Approx(10.0 * std::exp(-rho * 13.0)).epsilon(1e-15));
    CHECK(st.D_ask == doctest::Approx(s.F_inverse(st.E_ask)).epsilon(1e-15));
}

TEST_CASE("signed sequence on the simplified pair") {
    const auto s = ShapeTable::block(1.0);
    const double rho = 0.1, dt = 2.0;
    auto st = ImpactState::fresh(Version::V1);
    apply_trade(st, s, 5.0);
    decay(st, s, ResilienceCurve::constant(rho), dt);
    apply_trade(st, s, -3.0);
    CHECK(st.E_simple == doctest::Approx(5.0 * std::exp(-rho * dt) - 3.0));
    CHECK(st.E_ask == doctest::Approx(5.0 * std::exp(-rho * dt)));
    CHECK(st.E_bid == doctest::Approx(-3.0));
}

TEST_CASE("sandwich and cost dominance on random sequences") {
    const auto s = sample_shape();
    const auto rho = ResilienceCurve::monotone({2, 5, 10, 15}, {0.2, 0.12, 0.08, 0.07});
    lobexec::Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Version v = trial % 2 ? Version::V1 : Version::V2;
        auto st = ImpactState::fresh(v, 50.0, 47.0);
        for (int k = 0; k < 12; ++k) {
            const double size = (rng.uniform01() - 0.4) * 20.0;
            const auto c = apply_trade(st, s, size);
            CHECK(c.simple_cost <= c.cost + 1e-9);
            decay(st, s, rho, 0.5 + 5.0 * rng.uniform01());
            CHECK(st.E_bid <= st.E_simple + 1e-12);
            CHECK(st.E_simple <= st.E_ask + 1e-12);
            CHECK(st.D_bid <= st.D_simple + 1e-12);
            CHECK(st.D_simple <= st.D_ask + 1e-12);
            CHECK(std::fabs(s.F(st.D_simple) - st.E_simple) <= 1e-10);
        }
    }
}

TEST_CASE("all-buy sequences keep the simplified pair on the ask side") {
    const auto s = sample_shape();
    const auto rho = ResilienceCurve::monotone({2, 5, 10}, {0.2, 0.12, 0.08});
    auto st = ImpactState::fresh(Version::V2, 10.0, 9.0);
    for (double x : {3.0, 1.0, 6.5, 0.25}) {
        const auto c = apply_trade(st, s, x);
        CHECK(c.cost == c.simple_cost);
        decay(st, s, rho, 4.0);
        CHECK(st.D_ask == st.D_simple);
        CHECK(st.E_ask == st.E_simple);
    }
}

TEST_CASE("non-finite trade size is rejected") {
    auto st = ImpactState::fresh(Version::V2);
    CHECK_THROWS_AS(apply_trade(st, ShapeTable::block(1.0), std::numeric_limits<double>::quiet_NaN()),
                    lobexec::InvalidArgument);
}

TEST_CASE("overtaking check") {
    std::vector<std::pair<double, double>> grid;
    for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j) grid.emplace_back(i, j);
    const auto flat = overtaking_monotonicity_check(ResilienceCurve::constant(0.3), 5.0, grid);
    CHECK(flat.ok());
    CHECK(flat.pairs_checked > 0);
    const auto decreasing =
        overtaking_monotonicity_check(ResilienceCurve::monotone({5, 8, 12, 20}, {0.05, 0.03, 0.02, 0.015}), 70.0, grid);
    CHECK(decreasing.ok());
    // steeply increasing speed lets a larger impact fall below a smaller one
    const auto steep =
        overtaking_monotonicity_check(ResilienceCurve::monotone({1, 3}, {0.01, 2.0}), 5.0, grid);
    CHECK_FALSE(steep.ok());
}

}
