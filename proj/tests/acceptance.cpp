// Acceptance run: one PASS/FAIL line per criterion. Arguments select a subset
// (e.g. `acceptance AC1 AC4`); no arguments runs all nine.

#include "lobexec/calibration.hpp"
#include "lobexec/experiments.hpp"
#include "lobexec/impact_model.hpp"
#include "lobexec/market_sim.hpp"
#include "lobexec/rng.hpp"
#include "lobexec/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

using namespace lobexec;
using model::ProblemSpec;
using model::ResilienceCurve;
using model::ShapeTable;
using model::Version;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Version pick(int i) { return i % 2 ? Version::V1 : Version::V2; }

// increasing positive step shape with 3..10 cells per side
ShapeTable random_shape(Rng& rng) {
    const int cells = 3 + static_cast<int>(rng.below(8));
    std::vector<double> c;
    double v = 0.5 + 2 * rng.uniform01();
    for (int k = 0; k < cells; ++k) {
        c.push_back(v);
        v *= 1 + 0.5 * rng.uniform01();
    }
    return ShapeTable::symmetric(c, c.back());
}

// ---- solver ---------------------------------------------------------------

Outcome ac1() {
    Rng rng(101);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        ProblemSpec p;
        p.X0 = 1 + 999 * rng.uniform01();
        p.N = 1 + static_cast<int>(rng.below(100));
        const double tau = 0.1 + 50 * rng.uniform01();
        p.T = tau * p.N;
        const double rho = 1e-4 + 0.5 * rng.uniform01();
        p.shape = ShapeTable::block(0.05 + 10 * rng.uniform01());
        p.resilience = ResilienceCurve::constant(rho);
        const double a = std::exp(-rho * tau);
        const double xi0 = p.X0 / (p.N * (1 - a) + 1 + a);
        for (Version v : {Version::V1, Version::V2}) {
            p.version = v;
            const auto s = model::solve_optimal(p);
            for (int n = 0; n <= p.N; ++n) {
                const double expect = (n == 0 || n == p.N) ? xi0 : xi0 * (1 - a);
                worst = std::max(worst, std::fabs(s.sizes[n] - expect));
            }
        }
    }
    return {worst < 1e-10, fmt("max |xi - closed form| = %.2e over 50 specs x 2 versions", worst)};
}

Outcome ac2() {
    Rng rng(202);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        const auto shape = random_shape(rng);
        const double X0 = 5 + 300 * rng.uniform01();
        const int N = 1 + static_cast<int>(rng.below(60));
        const double T = N * (0.5 + 30 * rng.uniform01());
        const double rho = 1e-3 + 0.3 * rng.uniform01();
        ProblemSpec p;
        p.X0 = X0;
        p.N = N;
        p.T = T;
        p.shape = shape;
        p.resilience = ResilienceCurve::constant(rho);
        p.version = pick(i);
        const auto g = model::solve_optimal(p);
        const auto a = model::solve_afs(X0, N, T, shape, rho, p.version);
        for (std::size_t n = 0; n < g.sizes.size(); ++n) worst = std::max(worst, std::fabs(g.sizes[n] - a.sizes[n]));
    }
    return {worst <= 1e-12, fmt("max |GAFS - AFS| = %.2e over 20 specs", worst)};
}

Outcome ac3() {
    Rng rng(3);
    int fails = 0, total = 0;
    double worst_dist = 0;
    for (int N = 1; N <= 3; ++N) {
        for (int i = 0; i < 20; ++i) {
            ProblemSpec p;
            do {
                p.shape = random_shape(rng);
                p.X0 = 10 + 90 * rng.uniform01();
                p.N = N;
                p.T = N * (1 + 20 * rng.uniform01());
                p.version = pick(i);
                const double rmax = 0.02 + 0.3 * rng.uniform01();
                const double rmin = rmax * (0.4 + 0.6 * rng.uniform01());
                const double kmax = p.version == Version::V1 ? p.X0 : p.shape.F_inverse(p.X0);
                p.resilience = ResilienceCurve::monotone({0.1 * kmax, 0.5 * kmax, kmax}, {rmax, 0.5 * (rmax + rmin), rmin});
            } while (!model::validate_assumptions(p).resilience_ok());
            const auto s = model::solve_optimal(p);
            const auto bf = model::brute_force_optimum(p, 200, 0.25);
            const double cost = model::predicted_cost(p, s.sizes);
            double dist = 0;
            for (int n = 0; n < N; ++n) dist = std::max(dist, std::fabs(bf.sizes[n] - s.sizes[n]) / bf.cell);
            worst_dist = std::max(worst_dist, dist);
            ++total;
            if (!(cost <= bf.cost * (1 + 1e-12) && dist <= 1 + 1e-9)) ++fails;
        }
    }
    return {fails == 0, fmt("%d/%d specs optimal, grid minimiser within %.3f cells at worst", total - fails, total,
                            worst_dist)};
}

// ---- calibration ------------------------------------------------------------

// mean price-impact path of one order of impact D under a constant rate,
// generated by the impact model itself
std::vector<double> model_decay_path(const ShapeTable& shape, Version v, double D, double rho, std::size_t n) {
    const auto curve = ResilienceCurve::constant(rho);
    auto start = model::ImpactState::fresh(v);
    model::apply_trade(start, shape, shape.F(D));
    std::vector<double> path(n);
    path[0] = start.D_ask;
    for (std::size_t t = 1; t < n; ++t) {
        auto st = start;
        model::decay(st, shape, curve, static_cast<double>(t));
        path[t] = st.D_ask;
    }
    return path;
}

Outcome ac4() {
    // (a) noiseless exponentials
    double worst_a = 0;
    for (auto [A, B, rho] : {std::tuple{2.0, 6.0, 1e-3}, {0.0, 12.0, 5e-4}, {-1.5, 4.0, 0.02}, {3.25, 0.75, 0.004}}) {
        std::vector<double> y(5001);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] = A + B * std::exp(-rho * static_cast<double>(t));
        const auto f = calib::fit_exponential(y);
        auto rel = [](double got, double want) { return want == 0 ? std::fabs(got) : std::fabs(got / want - 1); };
        worst_a = std::max({worst_a, rel(f.A, A), rel(f.B, B), rel(f.rho, rho)});
    }

    // (b) rate recovered from model-exact paths at every t
    const auto shape = ShapeTable::symmetric({1.0, 1.4, 1.8, 2.2, 2.5}, 2.5);
    const double rho = 0.002, tau = 200;
    double worst_b = 0;
    for (double D : {3.0, 7.5, 12.0}) {
        const auto path = model_decay_path(shape, Version::V2, D, rho, 3001);
        for (std::size_t t = 1; t < path.size(); ++t)
            worst_b = std::max(worst_b, std::fabs(calib::resilience_from_decay(D, path, 0.0, static_cast<double>(t)) / rho - 1));
    }

    // (c) ensembles -> curve -> strategy
    double worst_flat = 0, worst_strategy = 0;
    for (Version v : {Version::V1, Version::V2}) {
        std::vector<calib::DecayEnsemble> ens;
        for (int D : {5, 8, 12, 16}) ens.push_back(calib::ensemble_from_paths(D, {model_decay_path(shape, v, D, rho, 5001)}, 100, false));
        const auto cal = calib::build_resilience_curve(ens, tau, v, &shape);
        for (double x = 0; x <= 100; x += 0.5) worst_flat = std::max(worst_flat, std::fabs(cal.curve.rate(x) / rho - 1));
        ProblemSpec p;
        p.X0 = 80;
        p.N = 4;
        p.T = 4 * tau;
        p.shape = shape;
        p.resilience = cal.curve;
        p.version = v;
        const auto g = model::solve_optimal(p);
        const auto a = model::solve_afs(p.X0, p.N, p.T, shape, rho, v);
        for (std::size_t n = 0; n < g.sizes.size(); ++n)
            worst_strategy = std::max(worst_strategy, std::fabs(g.sizes[n] - a.sizes[n]));
    }
    const bool pass = worst_a <= 1e-6 && worst_b <= 1e-9 && worst_flat <= 1e-6 && worst_strategy <= 1e-8;
    return {pass, fmt("fit rel err %.1e, rate rel err %.1e, curve flatness %.1e, strategy diff %.1e", worst_a, worst_b,
                      worst_flat, worst_strategy)};
}

// ---- simulator --------------------------------------------------------------

Outcome ac5() {
    sim::MarketConfig cfg;
    cfg.burn_in_steps = 100'000;
    const sim::OpinionGame game(cfg);
    auto s = game.burned_in_state(5);
    const auto M = s.share_count();
    bool invariant = true;
    game.run(s, 100'000, [&](const sim::MarketState& x) {
        invariant = invariant && x.is_stable() && x.share_count() == M;
    });
    invariant = invariant && s.check_consistency();

    auto a = game.burned_in_state(8), b = game.burned_in_state(8);
    game.run(a, 100'000);
    game.run(b, 100'000);
    const bool replay = a.serialize() == b.serialize();

    auto c = game.burned_in_state(13);
    const auto prices = game.execute_large_buy(c, 200);
    const bool buy = prices.size() == 200 && std::is_sorted(prices.begin(), prices.end());
    return {invariant && replay && buy, fmt("invariants %s, replay %s, buy of 200: %zu trades, %s prices", invariant ? "held" : "BROKEN",
                                            replay ? "identical" : "DIFFERS", prices.size(),
                                            std::is_sorted(prices.begin(), prices.end()) ? "non-decreasing" : "UNSORTED")};
}

Outcome ac6() {
    Rng rng(606);
    long violations = 0, steps = 0;
    for (int seq = 0; seq < 1000; ++seq) {
        const auto shape = random_shape(rng);
        const double r0 = 0.02 + 0.3 * rng.uniform01();
        const auto curve = ResilienceCurve::monotone({2, 6, 15}, {r0, 0.8 * r0, 0.7 * r0});
        const bool all_buy = seq % 4 == 0;
        const double A0 = 50, B0 = A0 - 1 - static_cast<double>(rng.below(4));
        auto st = model::ImpactState::fresh(pick(seq), A0, B0);
        for (int k = 0; k < 15; ++k) {
            const double size = all_buy ? 10 * rng.uniform01() : (rng.uniform01() - 0.45) * 25;
            const auto c = model::apply_trade(st, shape, size);
            const double tol = all_buy ? 0.0 : 1e-9;
            bool ok = c.simple_cost <= c.cost + tol;
            if (all_buy) ok = ok && c.simple_cost == c.cost;
            model::decay(st, shape, curve, 0.5 + 5 * rng.uniform01());
            ok = ok && st.E_bid <= st.E_simple + 1e-12 && st.E_simple <= st.E_ask + 1e-12;
            if (all_buy) ok = ok && st.E_simple == st.E_ask;
            violations += !ok;
            ++steps;
        }
    }
    return {violations == 0, fmt("%ld violations in %ld steps over 1000 sequences", violations, steps)};
}

// ---- Monte Carlo tables -----------------------------------------------------

constexpr std::uint64_t kCalibrationSeed = 2024;
constexpr std::uint64_t kTableSeed = 77;
constexpr std::size_t kRuns = 100;

sim::MarketConfig desk_market() {
    sim::MarketConfig cfg;
    cfg.burn_in_steps = 100'000;
    return cfg;
}

const std::vector<exper::TableRow>& desk_table() {
    static const auto rows = [] {
        exper::CalibrationPlan plan;
        plan.snapshots = 200;
        plan.impacts = {5, 6, 7, 8, 10, 12, 14, 17, 20};
        plan.decay.runs = 300;
        plan.decay.horizon = 20'000;
        const auto m = exper::calibrate_model(desk_market(), plan, kCalibrationSeed);
        exper::TableOptions opt;
        opt.runs = kRuns;
        opt.naive_rows = true;
        const std::vector<exper::CellSpec> cells{{200, 40, 400}, {200, 40, 4000}, {200, 80, 400}, {200, 80, 4000}};
        return exper::reproduce_cost_table(desk_market(), m, cells, opt, kTableSeed);
    }();
    return rows;
}

const exper::TableRow* find_row(const std::string& label, int N, double T) {
    for (const auto& r : desk_table())
        if (r.label == label && r.cell.N == N && r.cell.T == T) return &r;
    return nullptr;
}

Outcome ac7() {
    std::string detail;
    bool pass = true;
    for (int N : {40, 80}) {
        const auto* lo = find_row("GAFS", N, 400);
        const auto* hi = find_row("GAFS", N, 4000);
        for (const auto* r : {lo, hi}) {
            if (!r || !r->ok || !r->sampled || r->sampled->costs.size() < kRuns * 9 / 10) {
                return {false, fmt("cell N=%d failed: %s", N, r ? r->error.c_str() : "missing")};
            }
            const auto& x = r->strategy.sizes;
            const bool front = x[0] > x[1];
            const bool ratio = r->ratio() > 1.5;
            pass = pass && front && ratio;
            detail += fmt("[N=%d T=%g xi=(%.2f,%.2f,%.2f) pred %.0f samp %.0f+-%.0f ratio %.2f] ", N, r->cell.T, x[0],
                          x[1], x.back(), r->predicted, r->sampled->mean, r->sampled->standard_error, r->ratio());
        }
        const double se = std::hypot(lo->sampled->standard_error, hi->sampled->standard_error);
        const bool trend = hi->sampled->mean - lo->sampled->mean <= 2 * se;
        pass = pass && trend;
        detail += fmt("N=%d trend %s; ", N, trend ? "down" : "NOT DOWN");
    }
    return {pass, detail};
}

Outcome ac8() {
    const auto* g = find_row("GAFS", 80, 4000);
    const auto* a = find_row("AFS", 80, 4000);
    if (!g || !a || !g->ok || !a->ok || !g->sampled || !a->sampled) return {false, "cell (200, 4000, 80) unavailable"};
    const bool predicted = a->predicted > g->predicted;
    const auto& cg = g->sampled->costs;
    const auto& ca = a->sampled->costs;
    double diff_mean = 0, diff_se = 0;
    if (cg.size() == ca.size() && g->sampled->runs_discarded == 0 && a->sampled->runs_discarded == 0) {
        // same market seed per run: paired differences
        const double n = static_cast<double>(cg.size());
        for (std::size_t i = 0; i < cg.size(); ++i) diff_mean += ca[i] - cg[i];
        diff_mean /= n;
        double ss = 0;
        for (std::size_t i = 0; i < cg.size(); ++i) ss += (ca[i] - cg[i] - diff_mean) * (ca[i] - cg[i] - diff_mean);
        diff_se = std::sqrt(ss / (n - 1) / n);
    } else {
        diff_mean = a->sampled->mean - g->sampled->mean;
        diff_se = std::hypot(a->sampled->standard_error, g->sampled->standard_error);
    }
    const bool sampled = diff_mean >= -2 * diff_se;
    return {predicted && sampled,
            fmt("predicted AFS %.1f vs GAFS %.1f; sampled AFS %.1f vs GAFS %.1f, difference %.1f +- %.1f (%zu runs)",
                a->predicted, g->predicted, a->sampled->mean, g->sampled->mean, diff_mean, diff_se, cg.size())};
}

Outcome ac9() {
    calib::PermanentImpactOptions opt;
    opt.samples_per_volume = 50;
    opt.delay_steps = 50'000;
    opt.window_steps = 20'000;
    const auto r = calib::measure_permanent_impact(desk_market(), opt, 909);
    const bool pass = r.fit.slope > 0 && r.fit.r2 >= 0.8 && r.fit.slope >= 0.01 && r.fit.slope <= 0.05;
    return {pass, fmt("slope %.5f +- %.5f (reference 0.02738, band [0.01, 0.05]), R^2 %.3f", r.fit.slope, r.fit.slope_se,
                      r.fit.r2)};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        std::string id;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> all{
        {"AC1", ac1, 1},   {"AC2", ac2, 5},     {"AC3", ac3, 120},  {"AC4", ac4, 30},  {"AC5", ac5, 60},
        {"AC6", ac6, 10},  {"AC7", ac7, 7200},  {"AC8", ac8, 1800}, {"AC9", ac9, 3600},
    };
    std::set<std::string> wanted(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s %s %s (%.2f s%s)\n", c.id.c_str(), pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                    in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
