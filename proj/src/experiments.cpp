#include "lobexec/experiments.hpp"

#include "lobexec/errors.hpp"
#include "lobexec/impact_model.hpp"
#include "lobexec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lobexec::exper {

std::vector<std::int64_t> round_shares(const std::vector<double>& sizes, std::int64_t total) {
    std::vector<std::int64_t> out(sizes.size());
    std::vector<double> frac(sizes.size());
    std::int64_t floor_sum = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (!std::isfinite(sizes[i])) throw InvalidArgument("non-finite trade size");
        const double f = std::floor(sizes[i]);
        out[i] = static_cast<std::int64_t>(f);
        frac[i] = sizes[i] - f;
        floor_sum += out[i];
    }
    const std::int64_t remainder = total - floor_sum;
    if (remainder < 0 || remainder > static_cast<std::int64_t>(sizes.size()))
        throw InvalidArgument("sizes do not add up to the requested total");
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::int64_t k = 0; k < remainder; ++k) ++out[order[static_cast<std::size_t>(k)]];
    return out;
}

SampleStats run_strategy_in_sim(const sim::MarketConfig& config, const model::ExecutionStrategy& strategy,
                                std::size_t runs, std::uint64_t seed, unsigned jobs) {
    if (strategy.sizes.size() != strategy.times.size()) throw InvalidArgument("strategy sizes and times differ");
    const auto total = static_cast<std::int64_t>(std::llround(strategy.total()));
    const auto shares = round_shares(strategy.sizes, total);
    std::vector<std::uint64_t> steps;
    for (double t : strategy.times) {
        if (!(t >= 0.0)) throw InvalidArgument("trade times must be non-negative");
        steps.push_back(static_cast<std::uint64_t>(std::llround(t)));
    }

    const sim::OpinionGame game(config);
    std::vector<double> cost(runs, 0.0);
    std::vector<char> discarded(runs, 0);
    parallel_for(runs, jobs, [&](std::size_t r) {
        auto state = game.burned_in_state(derive_seed(seed, r));
        const sim::Price pre = state.best_ask();
        std::uint64_t elapsed = 0;
        double c = 0.0;
        try {
            for (std::size_t n = 0; n < shares.size(); ++n) {
                if (steps[n] > elapsed) {
                    game.run(state, steps[n] - elapsed);
                    elapsed = steps[n];
                }
                if (shares[n] == 0) continue;
                if (shares[n] > 0) {
                    for (sim::Price p : game.execute_large_buy(state, shares[n])) c += static_cast<double>(p - pre);
                } else {
                    for (sim::Price p : game.execute_large_sell(state, -shares[n])) c -= static_cast<double>(p - pre);
                }
                ++elapsed;
            }
        } catch (const TailExhausted&) {
            discarded[r] = 1;
            return;
        }
        cost[r] = c;
    });

    SampleStats s;
    s.runs_requested = runs;
    for (std::size_t r = 0; r < runs; ++r) {
        if (discarded[r]) {
            ++s.runs_discarded;
            continue;
        }
        s.costs.push_back(cost[r]);
    }
    const auto n = static_cast<double>(s.costs.size());
    if (!s.costs.empty()) s.mean = std::accumulate(s.costs.begin(), s.costs.end(), 0.0) / n;
    if (s.costs.size() > 1) {
        double ss = 0;
        for (double v : s.costs) ss += (v - s.mean) * (v - s.mean);
        s.standard_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

calib::ResilienceCalibration CalibratedModel::curve(double tau, model::Version version) const {
    return calib::build_resilience_curve(ensembles, tau, version, &shape.shape, D_min);
}

CalibratedModel calibrate_model(const sim::MarketConfig& config, const CalibrationPlan& plan, std::uint64_t seed,
                                unsigned jobs) {
    CalibratedModel m;
    m.D_min = plan.D_min;
    m.shape = calib::estimate_shape(config, plan.snapshots, derive_seed(seed, 0), jobs);
    for (std::size_t i = 0; i < plan.impacts.size(); ++i) {
        auto opt = plan.decay;
        opt.D = plan.impacts[i];
        m.ensembles.push_back(calib::sample_decay(config, opt, derive_seed(seed, 1 + i), jobs));
    }
    // naive constant: the fitted rate of the ensemble closest to naive_D
    const auto it = std::min_element(m.ensembles.begin(), m.ensembles.end(), [&](const auto& a, const auto& b) {
        return std::abs(a.D - plan.naive_D) < std::abs(b.D - plan.naive_D);
    });
    if (it == m.ensembles.end()) throw InvalidArgument("calibration plan has no impact levels");
    m.naive_D = it->D;
    m.naive_rho = calib::fit_exponential(it->mean).rho;
    return m;
}

double TableRow::ratio() const {
    if (!sampled || sampled->costs.empty() || predicted == 0.0) return std::nan("");
    return sampled->mean / predicted;
}

std::vector<TableRow> reproduce_cost_table(const sim::MarketConfig& config, const CalibratedModel& model,
                                           const std::vector<CellSpec>& cells, const TableOptions& opt,
                                           std::uint64_t seed, unsigned jobs) {
    std::vector<TableRow> rows;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cell = cells[c];
        model::ProblemSpec spec;
        spec.X0 = cell.X0;
        spec.N = cell.N;
        spec.T = cell.T;
        spec.shape = model.shape.shape;
        spec.version = opt.version;
        // every strategy within a cell sees the same market seeds
        const std::uint64_t cell_seed = derive_seed(seed, c);

        auto finish = [&](TableRow& row) {
            row.predicted = model::predicted_cost(spec, row.strategy.sizes);
            row.shares = round_shares(row.strategy.sizes, static_cast<std::int64_t>(std::llround(cell.X0)));
            if (opt.runs > 0) row.sampled = run_strategy_in_sim(config, row.strategy, opt.runs, cell_seed, jobs);
            row.ok = true;
        };

        TableRow gafs;
        gafs.cell = cell;
        gafs.label = "GAFS";
        try {
            spec.resilience = model.curve(spec.tau(), opt.version).curve;
            gafs.assumptions_ok = model::validate_assumptions(spec).resilience_ok();
            gafs.strategy = model::solve_optimal(spec);
            const double x0 = gafs.strategy.sizes.front();
            const double anchor = opt.version == model::Version::V1 ? x0 : spec.shape.F_inverse(x0);
            gafs.rho_used = spec.resilience.rate(anchor);
            finish(gafs);
        } catch (const std::exception& e) {
            gafs.error = e.what();
        }
        rows.push_back(std::move(gafs));

        if (!opt.naive_rows) continue;
        TableRow afs;
        afs.cell = cell;
        afs.label = "AFS";
        afs.rho_used = model.naive_rho;
        try {
            spec.resilience = model::ResilienceCurve::constant(model.naive_rho);
            afs.assumptions_ok = model::validate_assumptions(spec).resilience_ok();
            afs.strategy = model::solve_afs(cell.X0, cell.N, cell.T, spec.shape, model.naive_rho, opt.version);
            finish(afs);
        } catch (const std::exception& e) {
            afs.error = e.what();
        }
        rows.push_back(std::move(afs));
    }
    return rows;
}

}  // namespace lobexec::exper
