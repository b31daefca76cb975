#include <doctest.h>

#include "lobexec/calibration.hpp"
#include "lobexec/errors.hpp"
#include "lobexec/strategy.hpp"

#include <cmath>
#include <random>

using namespace lobexec;
using namespace lobexec::calib;

namespace {

std::vector<double> exp_path(double A, double B, double rho, std::size_t n) {
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = A + B * std::exp(-rho * static_cast<double>(t));
    return y;
}

DecayEnsemble synthetic_ensemble(int D, double rho, std::size_t n) {
    return ensemble_from_paths(D, {exp_path(0.0, D, rho, n)}, 100, false);
}

// version 1 decays the volume F(D), not the price impact
DecayEnsemble synthetic_volume_ensemble(const model::ShapeTable& s, int D, double rho, std::size_t n) {
    auto y = exp_path(0.0, s.F(D), rho, n);
    for (double& v : y) v = s.F_inverse(v);
    return ensemble_from_paths(D, {y}, 100, false);
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("band statistics") {
    const auto b = band({4, 1, 3, 2, 5});
    CHECK(b.mean == 3.0);
    CHECK(b.median == 3.0);
    CHECK(b.q1 == 2.0);
    CHECK(b.q3 == 4.0);
    CHECK(b.min == 1.0);
    CHECK(b.max == 5.0);
    const auto c = band({0, 10});
    CHECK(c.q1 == 2.5);
    CHECK(c.q3 == 7.5);
    CHECK(band({}).count == 0);
}

TEST_CASE("exponential fit recovers a noiseless decay") {
    const auto fit = fit_exponential(exp_path(2.0, 6.0, 0.001, 10001));
    CHECK(fit.converged);
    CHECK(fit.identifiable);
    CHECK(fit.A == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.B == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(fit.rho == doctest::Approx(0.001).epsilon(1e-6));
}

TEST_CASE("exponential fit on noisy data stays within three standard errors") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto y = exp_path(1.5, 5.0, 0.01, 2000);
    for (double& v : y) v += noise(gen);
    const auto fit = fit_exponential(y);
    CHECK(fit.converged);
    CHECK(std::fabs(fit.A - 1.5) <= 3 * fit.se_A);
    CHECK(std::fabs(fit.B - 5.0) <= 3 * fit.se_B);
    CHECK(std::fabs(fit.rho - 0.01) <= 3 * fit.se_rho);
}

TEST_CASE("flat path is not identifiable") {
    const auto fit = fit_exponential(std::vector<double>(500, 3.25));
    CHECK_FALSE(fit.identifiable);
    CHECK_FALSE(fit.converged);
    CHECK(fit.A == 3.25);
    CHECK(fit.B == 0.0);
    CHECK_THROWS_AS(fit_exponential({1.0, 2.0}), InvalidArgument);
}

TEST_CASE("resilience from a pure exponential decay") {
    const double D = 8.0, rho = 0.003;
    const auto path = exp_path(0.0, D, rho, 20001);
    for (double t : {1.0, 50.0, 1000.0, 15000.0})
        CHECK(resilience_from_decay(D, path, 0.0, t) == doctest::Approx(rho).epsilon(1e-9));
    // permanent level enters through (1 - e^{-t}) A
    const double A = 1.7, t = 40.0;
    const double mean_t = D * std::exp(-rho * t) + (1 - std::exp(-t)) * A;
    CHECK(resilience_from_decay(D, mean_t, A, t) == doctest::Approx(rho).epsilon(1e-12));
}

TEST_CASE("resilience domain errors") {
    CHECK_THROWS_AS(resilience_from_decay(8.0, 1.0, 2.0, 10.0), NonPositiveLogArgument);
    CHECK_THROWS_AS(resilience_from_decay(8.0, 5.0, 0.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(resilience_from_decay(0.0, 5.0, 0.0, 1.0), InvalidArgument);
    const std::vector<double> p{8, 6, 4};
    CHECK_THROWS_AS(resilience_from_decay(8.0, p, 0.0, 2.5), InvalidArgument);
}

TEST_CASE("path reading interpolates between integer times") {
    const std::vector<double> p{8, 6, 4};
    const double expect = (std::log(8.0) - std::log(5.0)) / 1.5;
    CHECK(resilience_from_decay(8.0, p, 0.0, 1.5) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("constant-speed ensembles give a flat curve and the constant-speed strategy") {
    const double rho = 0.002, tau = 200.0;
    const auto shape = model::ShapeTable::symmetric({1.0, 1.4, 1.8, 2.2, 2.5}, 2.5);
    for (auto v : {model::Version::V1, model::Version::V2}) {
        std::vector<DecayEnsemble> ens;
        for (int D : {4, 5, 8, 12, 16})
            ens.push_back(v == model::Version::V1 ? synthetic_volume_ensemble(shape, D, rho, 5001)
                                                  : synthetic_ensemble(D, rho, 5001));
        const auto cal = build_resilience_curve(ens, tau, v, &shape);
        CHECK(cal.knots.size() == 4);  // D = 4 falls below the minimum
        CHECK(cal.rho_bounds_ok);
        CHECK(cal.no_overtaking_ok);
        for (const auto& k : cal.knots) CHECK(k.rho == doctest::Approx(rho).epsilon(1e-8));
        for (double x : {0.0, 3.0, 20.0, 90.0})
            CHECK(cal.curve.rate(x) == doctest::Approx(rho).epsilon(1e-8));

        model::ProblemSpec p;
        p.X0 = 80.0;
        p.N = 4;
        p.T = 4 * tau;
        p.shape = shape;
        p.resilience = cal.curve;
        p.version = v;
        const auto g = model::solve_optimal(p);
        const auto a = model::solve_afs(p.X0, p.N, p.T, shape, rho, v);
        for (std::size_t n = 0; n < g.sizes.size(); ++n) CHECK(std::fabs(g.sizes[n] - a.sizes[n]) <= 1e-8);
    }
}

TEST_CASE("curve construction rejects thin input") {
    std::vector<DecayEnsemble> ens{synthetic_ensemble(5, 0.01, 1000), synthetic_ensemble(8, 0.01, 1000)};
    CHECK_THROWS_AS(build_resilience_curve(ens, 10.0, model::Version::V2), InvalidArgument);
    ens.push_back(synthetic_ensemble(8, 0.01, 1000));
    ens.push_back(synthetic_ensemble(9, 0.01, 1000));
    CHECK_THROWS_AS(build_resilience_curve(ens, 10.0, model::Version::V2), InvalidArgument);
    CHECK_THROWS_AS(build_resilience_curve(ens, 10.0, model::Version::V1), InvalidArgument);
}

TEST_CASE("ordinary least squares") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(0.03 * v + 0.5);
    const auto f = ordinary_least_squares(x, y);
    CHECK(f.slope == doctest::Approx(0.03).epsilon(1e-13));
    CHECK(f.intercept == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(f.r2 == doctest::Approx(1.0));
    // scaling y scales slope and intercept
    std::vector<double> y2{1.0, 2.5, 2.0, 4.5, 5.0}, y3;
    for (double v : y2) y3.push_back(7.0 * v);
    const auto a = ordinary_least_squares(x, y2), b = ordinary_least_squares(x, y3);
    CHECK(b.slope == doctest::Approx(7.0 * a.slope).epsilon(1e-13));
    CHECK(b.intercept == doctest::Approx(7.0 * a.intercept).epsilon(1e-13));
    CHECK(b.r2 == doctest::Approx(a.r2).epsilon(1e-13));
    CHECK(b.slope_se == doctest::Approx(7.0 * a.slope_se).epsilon(1e-13));
    CHECK_THROWS_AS(ordinary_least_squares({2, 2, 2}, {1, 2, 3}), InvalidArgument);
    CHECK_THROWS_AS(ordinary_least_squares({1, 2}, {1}), InvalidArgument);
}

TEST_CASE("shape from identical snapshots") {
    sim::BookSnapshot s;
    s.ask_profile = {{0, 2}, {1, 3}, {2, 5}, {3, 4}, {5, 1}};
    const auto est = shape_from_snapshots({s, s, s}, 2);
    CHECK(est.support == 4);
    CHECK(est.shape.f(0.5) == doctest::Approx(2.0));
    CHECK(est.shape.f(2.5) == doctest::Approx(5.0));
    CHECK(est.shape.f(-1.5) == doctest::Approx(3.0));
    CHECK(est.shape.f(50.0) == doctest::Approx(4.5));
    CHECK(est.ask_bands[4].mean == 0.0);
    CHECK_THROWS_AS(shape_from_snapshots({s}), InvalidArgument);
}

TEST_CASE("pathwise bands") {
    const auto e = ensemble_from_paths(3, {{3, 2, 1}, {3, 3, 1}, {3, 1, 2}}, 1, false);
    CHECK(e.mean[1] == doctest::Approx(2.0));
    CHECK(e.bands[2].median == 1.0);
    CHECK(e.bands[1].q1 <= e.mean[1]);
    CHECK(e.bands[1].q3 >= e.mean[1]);
    CHECK(e.paths.empty());
    CHECK_THROWS_AS(ensemble_from_paths(3, {{3, 2}, {3}}), InvalidArgument);
}

TEST_CASE("simulated decay sampling") {
    sim::MarketConfig cfg;
    cfg.burn_in_steps = 20000;
    DecayOptions opt;
    opt.D = 3;
    opt.runs = 12;
    opt.horizon = 2000;
    const auto a = sample_decay(cfg, opt, 42, 1);
    const auto b = sample_decay(cfg, opt, 42, 2);
    CHECK(a.runs_used + a.runs_overshoot + a.runs_unreachable == 12);
    REQUIRE(a.runs_used > 0);
    CHECK(a.mean[0] == 3.0);
    CHECK(a.mean == b.mean);
    CHECK(a.volumes == b.volumes);
    opt.D = 0;
    CHECK_THROWS_AS(sample_decay(cfg, opt, 42, 1), InvalidArgument);
}

}
