#include "lobexec/calibration.hpp"

#include "lobexec/errors.hpp"
#include "lobexec/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lobexec::calib {

BandStats band(std::vector<double> v) {
    BandStats b;
    b.count = v.size();
    if (v.empty()) return b;
    std::sort(v.begin(), v.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    b.min = v.front();
    b.max = v.back();
    b.q1 = quantile(0.25);
    b.median = quantile(0.5);
    b.q3 = quantile(0.75);
    return b;
}

// ---- shape ----------------------------------------------------------------

ShapeEstimate shape_from_snapshots(const std::vector<sim::BookSnapshot>& snaps, int tail_cells) {
    if (snaps.size() < 2) throw InvalidArgument("shape estimation needs at least two snapshots");
    if (tail_cells < 1) throw InvalidArgument("tail_cells must be positive");
    sim::Price max_offset = 0;
    for (const auto& s : snaps)
        if (!s.ask_profile.empty()) max_offset = std::max(max_offset, s.ask_profile.rbegin()->first);

    ShapeEstimate est;
    est.snapshots = snaps.size();
    const auto width = static_cast<std::size_t>(max_offset) + 1;
    std::vector<std::vector<double>> columns(width, std::vector<double>(snaps.size(), 0.0));
    for (std::size_t j = 0; j < snaps.size(); ++j)
        for (const auto& [off, cnt] : snaps[j].ask_profile)
            if (off >= 0) columns[static_cast<std::size_t>(off)][j] = static_cast<double>(cnt);
    for (auto& c : columns) est.ask_bands.push_back(band(std::move(c)));

    std::vector<double> cells;
    for (const auto& b : est.ask_bands) {
        if (!(b.mean > 0.0)) break;
        cells.push_back(b.mean);
    }
    if (cells.empty()) throw InvalidArgument("no seller mass at the best ask");
    est.support = static_cast<int>(cells.size());
    const std::size_t k = std::min<std::size_t>(cells.size(), static_cast<std::size_t>(tail_cells));
    const double tail = std::accumulate(cells.end() - static_cast<std::ptrdiff_t>(k), cells.end(), 0.0) /
                        static_cast<double>(k);
    est.shape = model::ShapeTable::symmetric(cells, tail);
    return est;
}

ShapeEstimate estimate_shape(const sim::MarketConfig& config, std::size_t count, std::uint64_t seed,
                             unsigned jobs) {
    if (count < 2) throw InvalidArgument("shape estimation needs at least two snapshots");
    const sim::OpinionGame game(config);
    std::vector<sim::BookSnapshot> snaps(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        const auto state = game.burned_in_state(derive_seed(seed, i));
        snaps[i] = sim::snapshot_book(state);
    });
    return shape_from_snapshots(snaps);
}

// ---- permanent impact -----------------------------------------------------

LinearFit ordinary_least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidArgument("regression inputs differ in length");
    std::vector<double> distinct(x);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw InvalidArgument("regression needs at least two distinct x values");

    LinearFit fit;
    fit.n = x.size();
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - fit.intercept - fit.slope * x[i];
        rss += e * e;
    }
    fit.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
    if (x.size() > 2) {
        const double s2 = rss / (n - 2.0);
        fit.slope_se = std::sqrt(s2 / sxx);
        fit.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return fit;
}

PermanentImpactResult permanent_impact_from_means(std::vector<VolumeImpact> per_volume) {
    PermanentImpactResult res;
    std::vector<double> x, y;
    for (const auto& v : per_volume) {
        x.push_back(v.volume);
        y.push_back(v.shift.mean);
    }
    res.fit = ordinary_least_squares(x, y);
    res.per_volume = std::move(per_volume);
    return res;
}

PermanentImpactResult measure_permanent_impact(const sim::MarketConfig& config,
                                               const PermanentImpactOptions& opt, std::uint64_t seed,
                                               unsigned jobs) {
    if (opt.samples_per_volume < 1) throw InvalidArgument("need at least one sample per volume");
    if (opt.stride < 1 || opt.window_steps < opt.stride)
        throw InvalidArgument("averaging window must contain at least one sample");
    const sim::OpinionGame game(config);
    const std::size_t nv = opt.volumes.size();
    const std::size_t ns = opt.samples_per_volume;
    std::vector<double> shifts(nv * ns, 0.0);
    parallel_for(nv * ns, jobs, [&](std::size_t idx) {
        const std::size_t v = idx / ns, j = idx % ns;
        auto state = game.burned_in_state(derive_seed(derive_seed(seed, v), j));
        const auto pre = static_cast<double>(state.best_ask());
        game.execute_large_buy(state, opt.volumes[v]);
        game.run(state, opt.delay_steps);
        const std::uint64_t samples = opt.window_steps / opt.stride;
        double acc = 0.0;
        for (std::uint64_t k = 0; k < samples; ++k) {
            acc += static_cast<double>(state.best_ask());
            game.run(state, opt.stride);
        }
        shifts[idx] = acc / static_cast<double>(samples) - pre;
    });
    std::vector<VolumeImpact> per;
    for (std::size_t v = 0; v < nv; ++v) {
        VolumeImpact vi;
        vi.volume = opt.volumes[v];
        vi.shift = band({shifts.begin() + static_cast<std::ptrdiff_t>(v * ns),
                         shifts.begin() + static_cast<std::ptrdiff_t>((v + 1) * ns)});
        double ss = 0;
        for (std::size_t j = 0; j < ns; ++j) {
            const double e = shifts[v * ns + j] - vi.shift.mean;
            ss += e * e;
        }
        vi.standard_error = ns > 1 ? std::sqrt(ss / static_cast<double>(ns - 1) / static_cast<double>(ns)) : 0.0;
        per.push_back(vi);
    }
    return permanent_impact_from_means(std::move(per));
}

// ---- decay ----------------------------------------------------------------

namespace {

std::uint64_t effective_stride(std::uint64_t requested, std::uint64_t horizon) {
    if (requested > 0) return requested;
    return std::max<std::uint64_t>(1, horizon / 1000);
}

std::vector<std::uint64_t> band_grid(std::uint64_t horizon, std::uint64_t stride) {
    std::vector<std::uint64_t> t;
    for (std::uint64_t k = 0; k <= horizon; k += stride) t.push_back(k);
    if (t.back() != horizon) t.push_back(horizon);
    return t;
}

}  // namespace

DecayEnsemble ensemble_from_paths(int D, const std::vector<std::vector<double>>& paths,
                                  std::uint64_t band_stride, bool keep_paths) {
    if (paths.empty()) throw InvalidArgument("no decay paths");
    const std::size_t len = paths.front().size();
    if (len == 0) throw InvalidArgument("empty decay path");
    for (const auto& p : paths)
        if (p.size() != len) throw InvalidArgument("decay paths differ in length");
    DecayEnsemble e;
    e.D = D;
    e.horizon = len - 1;
    e.runs_used = paths.size();
    e.mean.assign(len, 0.0);
    for (const auto& p : paths)
        for (std::size_t t = 0; t < len; ++t) e.mean[t] += p[t];
    for (double& m : e.mean) m /= static_cast<double>(paths.size());
    e.band_times = band_grid(e.horizon, effective_stride(band_stride, e.horizon));
    for (std::uint64_t t : e.band_times) {
        std::vector<double> col;
        col.reserve(paths.size());
        for (const auto& p : paths) col.push_back(p[t]);
        e.bands.push_back(band(std::move(col)));
    }
    if (keep_paths) e.paths = paths;
    return e;
}

DecayEnsemble sample_decay(const sim::MarketConfig& config, const DecayOptions& opt, std::uint64_t seed,
                           unsigned jobs) {
    if (opt.D < 1) throw InvalidArgument("target impact D must be at least 1");
    if (opt.runs < 1) throw InvalidArgument("need at least one decay run");
    const sim::OpinionGame game(config);
    const std::uint64_t len = opt.horizon + 1;
    const auto stride = effective_stride(opt.band_stride, opt.horizon);

    DecayEnsemble e;
    e.D = opt.D;
    e.horizon = opt.horizon;
    e.band_times = band_grid(opt.horizon, stride);
    const std::size_t nb = e.band_times.size();
    std::vector<std::int64_t> sums(len, 0);
    std::vector<std::vector<double>> band_cols(nb);

    enum class Outcome { Used, Unreachable, Overshoot };
    struct RunResult {
        Outcome outcome = Outcome::Used;
        int volume = 0;
        std::vector<std::int32_t> path;
    };

    constexpr std::size_t kBlock = 64;
    for (std::size_t start = 0; start < opt.runs; start += kBlock) {
        const std::size_t count = std::min(kBlock, opt.runs - start);
        std::vector<RunResult> block(count);
        parallel_for(count, jobs, [&](std::size_t b) {
            RunResult& r = block[b];
            auto state = game.burned_in_state(derive_seed(seed, start + b));
            const sim::Price pre = opt.sell ? state.best_bid() : state.best_ask();
            auto impact = [&](const sim::MarketState& s) {
                return opt.sell ? pre - s.best_bid() : s.best_ask() - pre;
            };
            const auto max_volume = static_cast<std::int64_t>(
                opt.sell ? state.share_count() : state.trader_count() - state.share_count());
            auto stop = [&](const sim::MarketState& s) { return impact(s) >= opt.D; };
            const auto prices = opt.sell ? game.execute_large_sell(state, max_volume, stop)
                                         : game.execute_large_buy(state, max_volume, stop);
            r.volume = static_cast<int>(prices.size());
            const sim::Price reached = impact(state);
            if (reached < opt.D) {
                r.outcome = Outcome::Unreachable;
                return;
            }
            if (reached > opt.D) {
                r.outcome = Outcome::Overshoot;
                return;
            }
            r.path.resize(len);
            r.path[0] = static_cast<std::int32_t>(reached);
            for (std::uint64_t t = 1; t < len; ++t) {
                game.step(state);
                r.path[t] = static_cast<std::int32_t>(impact(state));
            }
        });
        for (auto& r : block) {
            if (r.outcome == Outcome::Unreachable) {
                ++e.runs_unreachable;
                continue;
            }
            if (r.outcome == Outcome::Overshoot) {
                ++e.runs_overshoot;
                continue;
            }
            ++e.runs_used;
            e.volumes.push_back(r.volume);
            for (std::uint64_t t = 0; t < len; ++t) sums[t] += r.path[t];
            for (std::size_t k = 0; k < nb; ++k) band_cols[k].push_back(r.path[e.band_times[k]]);
            if (opt.keep_paths) e.paths.emplace_back(r.path.begin(), r.path.end());
        }
    }
    if (e.runs_used == 0) throw InvalidArgument("every decay run was discarded");
    e.mean.resize(len);
    for (std::uint64_t t = 0; t < len; ++t)
        e.mean[t] = static_cast<double>(sums[t]) / static_cast<double>(e.runs_used);
    for (auto& col : band_cols) e.bands.push_back(band(std::move(col)));
    return e;
}

// ---- exponential fit ------------------------------------------------------

ExponentialFit fit_exponential(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 3) throw InvalidArgument("exponential fit needs at least three points");
    ExponentialFit fit;

    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double level = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::fabs(level))) {
        fit.A = level;
        fit.identifiable = false;
        return fit;
    }

    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double A = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(tail), y.end(), 0.0) /
               static_cast<double>(tail);
    double B = y.front() - A;
    double rho = 1.0 / static_cast<double>(n);
    {
        const std::size_t k = std::max<std::size_t>(1, n / 10);
        const double ratio = (y[k] - A) / B;
        if (ratio > 0.0 && ratio < 1.0) rho = -std::log(ratio) / static_cast<double>(k);
    }

    Eigen::MatrixXd J(n, 3);
    Eigen::VectorXd r(n);
    auto residuals = [&](double a, double b, double p, Eigen::VectorXd& out) {
        for (std::size_t t = 0; t < n; ++t)
            out[static_cast<Eigen::Index>(t)] = y[t] - (a + b * std::exp(-p * static_cast<double>(t)));
        return out.squaredNorm();
    };
    double rss = residuals(A, B, rho, r);
    Eigen::VectorXd trial(n);
    constexpr int kMaxIter = 200;
    for (int it = 1; it <= kMaxIter; ++it) {
        fit.iterations = it;
        for (std::size_t t = 0; t < n; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            const double e = std::exp(-rho * static_cast<double>(t));
            J(i, 0) = 1.0;
            J(i, 1) = e;
            J(i, 2) = -B * static_cast<double>(t) * e;
        }
        const Eigen::Vector3d step = J.colPivHouseholderQr().solve(r);
        double scale = 1.0;
        bool improved = false;
        double nA = A, nB = B, nrho = rho, nrss = rss;
        for (int h = 0; h < 40; ++h) {
            nA = A + scale * step[0];
            nB = B + scale * step[1];
            nrho = rho + scale * step[2];
            nrss = residuals(nA, nB, nrho, trial);
            if (std::isfinite(nrss) && nrss <= rss) {
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        const double rel = scale * step.norm() / (std::sqrt(A * A + B * B + rho * rho) + 1e-300);
        if (improved) {
            A = nA, B = nB, rho = nrho, rss = nrss;
            r = trial;
        }
        if (!improved || rel < 1e-10) {
            fit.converged = improved || rel < 1e-10;
            break;
        }
    }
    fit.A = A;
    fit.B = B;
    fit.rho = rho;
    fit.residual_norm = std::sqrt(rss);
    if (n > 3) {
        for (std::size_t t = 0; t < n; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            const double e = std::exp(-rho * static_cast<double>(t));
            J(i, 0) = 1.0;
            J(i, 1) = e;
            J(i, 2) = -B * static_cast<double>(t) * e;
        }
        const Eigen::Matrix3d JtJ = J.transpose() * J;
        const Eigen::Matrix3d cov = JtJ.inverse() * (rss / static_cast<double>(n - 3));
        fit.se_A = std::sqrt(std::max(0.0, cov(0, 0)));
        fit.se_B = std::sqrt(std::max(0.0, cov(1, 1)));
        fit.se_rho = std::sqrt(std::max(0.0, cov(2, 2)));
    }
    if (!(fit.rho > 0.0)) fit.identifiable = false;
    return fit;
}

// ---- resilience -----------------------------------------------------------

double resilience_from_decay(double D, double mean_t, double A_D, double t) {
    if (!(t > 0.0)) throw InvalidArgument("resilience time must be positive");
    if (!(D > 0.0)) throw InvalidArgument("impact D must be positive");
    const double arg = mean_t - (1.0 - std::exp(-t)) * A_D;
    if (!(arg > 0.0))
        throw NonPositiveLogArgument("mean path fell below the permanent level; use a smaller t or larger D");
    return (std::log(D) - std::log(arg)) / t;
}

double resilience_from_decay(double D, const std::vector<double>& path, double A_D, double t) {
    if (!(t > 0.0)) throw InvalidArgument("resilience time must be positive");
    if (t > static_cast<double>(path.size() - 1)) throw InvalidArgument("t lies beyond the recorded path");
    const auto i = static_cast<std::size_t>(std::floor(t));
    const double frac = t - static_cast<double>(i);
    const double v = frac > 0.0 ? path[i] + frac * (path[i + 1] - path[i]) : path[i];
    return resilience_from_decay(D, v, A_D, t);
}

ResilienceCalibration build_resilience_curve(const std::vector<DecayEnsemble>& ensembles, double tau,
                                             model::Version version, const model::ShapeTable* shape,
                                             int D_min) {
    if (version == model::Version::V1 && shape == nullptr)
        throw InvalidArgument("version 1 calibration needs the shape table");
    ResilienceCalibration cal;
    cal.tau = tau;
    cal.version = version;
    for (const auto& e : ensembles) {
        if (e.D < D_min) continue;
        ResilienceKnot k;
        k.D = e.D;
        if (version == model::Version::V2) {
            k.fit = fit_exponential(e.mean);
            k.A_D = k.fit.A;
            k.key = e.D;
            k.rho = resilience_from_decay(e.D, e.mean, k.A_D, tau);
        } else {
            // fitted in volume, where this version's decay is exponential
            std::vector<double> volume_path(e.mean.size());
            for (std::size_t t = 0; t < e.mean.size(); ++t) volume_path[t] = shape->F(e.mean[t]);
            k.fit = fit_exponential(volume_path);
            k.A_D = shape->F_inverse(k.fit.A);
            k.key = shape->F(e.D);
            k.rho = resilience_from_decay(k.key, volume_path, k.fit.A, tau);
        }
        cal.knots.push_back(k);
    }
    std::sort(cal.knots.begin(), cal.knots.end(),
              [](const ResilienceKnot& a, const ResilienceKnot& b) { return a.key < b.key; });
    for (std::size_t i = 1; i < cal.knots.size(); ++i)
        if (cal.knots[i].key == cal.knots[i - 1].key) throw InvalidArgument("duplicate impact knot");
    if (cal.knots.size() < 3) throw InvalidArgument("resilience curve needs at least three knots");

    std::vector<double> keys, rhos;
    for (const auto& k : cal.knots) {
        keys.push_back(k.key);
        rhos.push_back(k.rho);
    }
    cal.curve = model::ResilienceCurve::monotone(keys, rhos);
    cal.rho_bounds_ok = cal.curve.lower_bound() > 0.0 && std::isfinite(cal.curve.upper_bound());
    cal.no_overtaking_ok = true;
    const double L = 1.25 * keys.back();
    for (int i = 0; i <= 4000; ++i) {
        const double x = -L + 2.0 * L * i / 4000.0;
        if (!(1.0 - tau * cal.curve.derivative(x) * x > 0.0)) cal.no_overtaking_ok = false;
    }
    return cal;
}

}  // namespace lobexec::calib
