#include "lobexec/strategy.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace lobexec::model {

namespace {

constexpr double kDenominatorFloor = 1e-14;
constexpr double kResidualTol = 1e-12;
constexpr double kBracketMargin = 0.1;
constexpr int kScanPoints = 512;
constexpr int kMaxRefine = 400;

struct DecayTerms {
    double a;  // e^{-tau rho(x)}
    double c;  // 1 - tau rho'(x) x
};

DecayTerms decay_terms(const ProblemSpec& spec, double x) {
    const double tau = spec.tau();
    return {std::exp(-tau * spec.resilience.rate(x)), 1.0 - tau * spec.resilience.derivative(x) * x};
}

double h1_with(const ShapeTable& shape, double x, double a, double c) {
    const double den = 1.0 - a * c;
    if (std::fabs(den) < kDenominatorFloor) throw AssumptionViolated("h1 denominator vanishes");
    return (shape.F_inverse(x) - a * c * shape.F_inverse(a * x)) / den;
}

double h2_with(const ShapeTable& shape, double d, double a, double c) {
    const double fd = shape.f(d);
    const double fad = shape.f(a * d);
    const double den = fd - a * fad * c;
    if (std::fabs(den) < kDenominatorFloor) throw AssumptionViolated("h2 denominator vanishes");
    return d * (fd - a * a * fad * c) / den;
}

struct Root {
    double x = 0;
    double residual = 0;
    int iterations = 0;
    bool jump = false;
};

Root refine(const std::function<double(double)>& r, double lo, double hi, double rlo, double rhi) {
    Root out;
    int side = 0;
    for (int it = 0; it < kMaxRefine; ++it) {
        out.iterations = it + 1;
        const double width = hi - lo;
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(hi))) break;
        double x = (rlo * hi - rhi * lo) / (rlo - rhi);
        if (!(x > lo && x < hi) || it % 4 == 3) x = 0.5 * (lo + hi);
        const double rx = r(x);
        if (rx == 0.0) {
            out.x = x;
            out.residual = 0.0;
            return out;
        }
        if ((rx < 0) == (rlo < 0)) {
            lo = x;
            rlo = rx;
            if (side == -1) rhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            rhi = rx;
            if (side == 1) rlo *= 0.5;
            side = 1;
        }
    }
    const double flo = r(lo), fhi = r(hi);
    if (std::fabs(flo) <= std::fabs(fhi)) {
        out.x = lo;
        out.residual = flo;
    } else {
        out.x = hi;
        out.residual = fhi;
    }
    out.jump = std::fabs(out.residual) >= kResidualTol;
    return out;
}

struct RootSearch {
    std::vector<Root> roots;
    double lo = 0, hi = 0;
};

RootSearch find_roots(const std::function<double(double)>& r, double X0) {
    RootSearch s;
    s.hi = X0 * (1.0 + kBracketMargin);
    while (r(s.hi) <= 0.0) {
        if (s.hi >= 10.0 * X0) throw NoRoot("no sign change of the strategy equation up to 10*X0");
        s.hi = std::min(2.0 * s.hi, 10.0 * X0);
    }
    double prev_x = 0.0, prev_r = r(0.0);
    for (int i = 1; i <= kScanPoints; ++i) {
        const double x = s.hi * i / kScanPoints;
        const double rx = r(x);
        if (rx == 0.0 && x > 0.0) {
            s.roots.push_back({x, 0.0, 0, false});
        } else if (prev_r != 0.0 && (rx < 0) != (prev_r < 0)) {
            s.roots.push_back(refine(r, prev_x, x, prev_r, rx));
        }
        prev_x = x;
        prev_r = rx;
    }
    if (s.roots.empty()) throw NoRoot("strategy equation has no root in the bracket");
    return s;
}

std::vector<double> assemble(double X0, int N, double first, double mid) {
    std::vector<double> sizes(static_cast<std::size_t>(N) + 1, mid);
    sizes.front() = first;
    double used = first;
    for (int n = 1; n < N; ++n) used += mid;
    sizes.back() = X0 - used;
    return sizes;
}

// One leg of the simplified dynamics. `state` is E (version 1) or D (version 2)
// right before the trade; on return it holds the value right before the next
// trade when `decay_after` is set.
double leg(const ProblemSpec& spec, double& state, double xi, bool decay_after) {
    const ShapeTable& sh = spec.shape;
    if (spec.version == Version::V1) {
        const double E = state;
        const double Ep = E + xi;
        const double cost = sh.G(Ep) - sh.G(E);
        if (decay_after) state = std::exp(-spec.tau() * spec.resilience.rate(Ep)) * Ep;
        return cost;
    }
    const double D = state;
    const double Dp = sh.F_inverse(sh.F(D) + xi);
    const double cost = sh.F_tilde(Dp) - sh.F_tilde(D);
    if (decay_after) state = std::exp(-spec.tau() * spec.resilience.rate(Dp)) * Dp;
    return cost;
}

ExecutionStrategy pick_cheapest(const ProblemSpec& spec, const RootSearch& search,
                                const std::function<std::vector<double>(double)>& build) {
    ExecutionStrategy best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const Root& root : search.roots) {
        auto sizes = build(root.x);
        const double cost = predicted_cost(spec, sizes);
        if (cost < best_cost) {
            best_cost = cost;
            best = make_strategy(spec, std::move(sizes));
            best.diagnostics.iterations = root.iterations;
            best.diagnostics.residual = root.residual;
            best.diagnostics.jump_root = root.jump;
        }
    }
    best.diagnostics.bracket_lo = search.lo;
    best.diagnostics.bracket_hi = search.hi;
    best.diagnostics.root_count = static_cast<int>(search.roots.size());
    return best;
}

}  // namespace

void ProblemSpec::validate() const {
    if (!(X0 > 0.0) || !std::isfinite(X0)) throw InvalidArgument("X0 must be positive");
    if (N < 0) throw InvalidArgument("N must be non-negative");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
}

double ExecutionStrategy::total() const noexcept {
    double s = 0.0;
    for (double x : sizes) s += x;
    return s;
}

ExecutionStrategy make_strategy(const ProblemSpec& spec, std::vector<double> sizes) {
    ExecutionStrategy st;
    st.version = spec.version;
    st.sizes = std::move(sizes);
    st.times.resize(st.sizes.size());
    for (std::size_t n = 0; n < st.sizes.size(); ++n) st.times[n] = spec.tau() * static_cast<double>(n);
    return st;
}

double h1(double x, const ProblemSpec& spec) {
    const auto [a, c] = decay_terms(spec, x);
    return h1_with(spec.shape, x, a, c);
}

double h2(double d, const ProblemSpec& spec) {
    const auto [a, c] = decay_terms(spec, d);
    return h2_with(spec.shape, d, a, c);
}

ExecutionStrategy solve_optimal(const ProblemSpec& spec) {
    spec.validate();
    if (spec.N == 0) return make_strategy(spec, {spec.X0});
    const ShapeTable& sh = spec.shape;
    const double X0 = spec.X0;
    const int N = spec.N;

    if (spec.version == Version::V1) {
        auto mid = [&](double x) { return x * (1.0 - decay_terms(spec, x).a); };
        auto r = [&](double x) {
            const auto [a, c] = decay_terms(spec, x);
            return h1_with(sh, x, a, c) - sh.F_inverse(X0 - N * (1.0 - a) * x);
        };
        const RootSearch search = find_roots(r, X0);
        return pick_cheapest(spec, search, [&](double x) { return assemble(X0, N, x, mid(x)); });
    }
    auto mid = [&](double xi) {
        const double d = sh.F_inverse(xi);
        return xi - sh.F(decay_terms(spec, d).a * d);
    };
    auto r = [&](double xi) {
        const double d = sh.F_inverse(xi);
        const auto [a, c] = decay_terms(spec, d);
        return h2_with(sh, d, a, c) - sh.F_inverse(X0 - N * (xi - sh.F(a * d)));
    };
    const RootSearch search = find_roots(r, X0);
    return pick_cheapest(spec, search, [&](double xi) { return assemble(X0, N, xi, mid(xi)); });
}

ExecutionStrategy solve_afs(double X0, int N, double T, const ShapeTable& shape, double rho,
                            Version version) {
    ProblemSpec spec;
    spec.X0 = X0;
    spec.N = N;
    spec.T = T;
    spec.shape = shape;
    spec.resilience = ResilienceCurve::constant(rho);
    spec.version = version;
    spec.validate();
    if (N == 0) return make_strategy(spec, {X0});
    const double a = std::exp(-rho * spec.tau());

    if (version == Version::V1) {
        auto r = [&](double x) {
            const double h = (shape.F_inverse(x) - a * shape.F_inverse(a * x)) / (1.0 - a);
            return h - shape.F_inverse(X0 - N * x * (1.0 - a));
        };
        const RootSearch search = find_roots(r, X0);
        return pick_cheapest(spec, search,
                             [&](double x) { return assemble(X0, N, x, x * (1.0 - a)); });
    }
    auto r = [&](double xi) {
        const double d = shape.F_inverse(xi);
        const double fd = shape.f(d), fad = shape.f(a * d);
        const double h = d * (fd - a * a * fad) / (fd - a * fad);
        return h - shape.F_inverse(X0 - N * (xi - shape.F(a * d)));
    };
    const RootSearch search = find_roots(r, X0);
    return pick_cheapest(spec, search, [&](double xi) {
        return assemble(X0, N, xi, xi - shape.F(a * shape.F_inverse(xi)));
    });
}

double predicted_cost(const ProblemSpec& spec, const std::vector<double>& sizes) {
    double state = 0.0;
    double cost = 0.0;
    for (std::size_t n = 0; n < sizes.size(); ++n)
        cost += leg(spec, state, sizes[n], n + 1 < sizes.size());
    return cost;
}

BruteForceResult brute_force_optimum(const ProblemSpec& spec, int resolution, double min_leg_fraction) {
    spec.validate();
    if (spec.N > 3) throw InvalidArgument("brute force search supports N <= 3");
    if (resolution < 1) throw InvalidArgument("grid resolution must be positive");
    if (min_leg_fraction < 0.0) throw InvalidArgument("minimum leg fraction must be non-negative");

    BruteForceResult best;
    best.cell = spec.X0 / resolution;
    best.cost = std::numeric_limits<double>::infinity();
    const long kmin = -static_cast<long>(std::floor(min_leg_fraction * resolution + 1e-9));
    const int legs = spec.N + 1;
    std::vector<long> k(static_cast<std::size_t>(legs), 0);

    std::function<void(int, long, double, double)> rec = [&](int i, long remaining, double state,
                                                             double cost) {
        if (i == legs - 1) {
            if (remaining < kmin) return;
            double s = state;
            const double total = cost + leg(spec, s, remaining * best.cell, false);
            ++best.points;
            if (total < best.cost) {
                best.cost = total;
                k[static_cast<std::size_t>(i)] = remaining;
                best.sizes.assign(k.begin(), k.end());
                for (double& x : best.sizes) x *= best.cell;
                best.sizes.back() = spec.X0 - [&] {
                    double used = 0.0;
                    for (int j = 0; j < i; ++j) used += best.sizes[static_cast<std::size_t>(j)];
                    return used;
                }();
            }
            return;
        }
        const long after = legs - 1 - i;
        for (long ki = kmin; ki <= remaining - after * kmin; ++ki) {
            k[static_cast<std::size_t>(i)] = ki;
            double s = state;
            const double c = leg(spec, s, ki * best.cell, true);
            rec(i + 1, remaining - ki, s, cost + c);
        }
    };
    rec(0, resolution, 0.0, 0.0);
    return best;
}

bool AssumptionReport::ok() const noexcept {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return !c.applicable || c.passed; });
}

bool AssumptionReport::resilience_ok() const noexcept {
    for (const auto& c : checks)
        if ((c.name == "rhoAss1" || c.name == "rhoAss2" || c.name == "rhoCond1") && c.applicable &&
            !c.passed)
            return false;
    return true;
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const noexcept {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

AssumptionReport validate_assumptions(const ProblemSpec& spec) {
    spec.validate();
    AssumptionReport rep;
    const ResilienceCurve& rho = spec.resilience;
    const double tau = spec.tau();
    const bool v1 = spec.version == Version::V1;
    const double range = v1 ? spec.X0 : spec.shape.F_inverse(spec.X0);
    rep.grid_limit = 1.25 * std::max({rho.knots().back(), range, 1.0});
    const double L = rep.grid_limit;

    std::vector<double> grid;
    constexpr int kGrid = 4000;
    for (int i = 0; i <= kGrid; ++i) grid.push_back(-L + 2.0 * L * i / kGrid);
    for (double k : rho.knots()) {
        grid.push_back(k);
        grid.push_back(-k);
    }
    std::sort(grid.begin(), grid.end());

    auto fmt = [](const char* label, double v, double at) {
        std::ostringstream os;
        os.precision(10);
        os << label << v << " at x=" << at;
        return os.str();
    };

    {
        AssumptionCheck c{"rhoAss1", true, true, {}};
        const double k = rho.lower_bound(), K = rho.upper_bound();
        c.passed = k > 0.0 && std::isfinite(K) && k <= K;
        std::ostringstream os;
        os << "k=" << k << " K=" << K;
        c.detail = os.str();
        rep.checks.push_back(c);
    }
    {
        AssumptionCheck c{"rhoAss2", true, true, {}};
        double worst = std::numeric_limits<double>::infinity(), at = 0.0;
        for (double x : grid) {
            const double v = 1.0 - tau * rho.derivative(x) * x;
            if (v < worst) worst = v, at = x;
        }
        c.passed = worst > 0.0;
        c.detail = fmt("min 1-tau*rho'(x)*x = ", worst, at);
        rep.checks.push_back(c);
    }
    {
        AssumptionCheck c{"rhoCond1", true, v1, {}};
        double worst = -std::numeric_limits<double>::infinity(), at = 0.0;
        for (double x : grid) {
            const double v = std::exp(-rho.rate(x) * tau) * (1.0 - tau * rho.derivative(x) * x);
            if (v > worst) worst = v, at = x;
        }
        c.passed = worst < 1.0;
        c.detail = fmt("max e^{-rho tau}(1-tau*rho'*x) = ", worst, at);
        rep.checks.push_back(c);
    }
    {
        AssumptionCheck c{"fCond2", true, !v1, {}};
        const double m = spec.shape.min_value();
        c.passed = m > 0.0;
        std::ostringstream os;
        os << "inf f = " << m << " > 0 with constant tails; checked on [e^{-tau rho(x)}x, x]";
        c.detail = os.str();
        rep.checks.push_back(c);
    }
    {
        AssumptionCheck c{v1 ? "h1_injective" : "h2_injective", true, true, {}};
        constexpr int kSamples = 10000;
        double prev = -std::numeric_limits<double>::infinity(), prev_x = -L;
        try {
            for (int i = 0; i < kSamples; ++i) {
                const double x = -L + 2.0 * L * i / (kSamples - 1);
                const double h = v1 ? h1(x, spec) : h2(x, spec);
                if (!(h > prev)) {
                    c.passed = false;
                    std::ostringstream os;
                    os.precision(10);
                    os << "not increasing between x=" << prev_x << " and x=" << x;
                    c.detail = os.str();
                    break;
                }
                prev = h;
                prev_x = x;
            }
            if (c.passed) c.detail = "strictly increasing on 10000 samples";
        } catch (const AssumptionViolated& e) {
            c.passed = false;
            c.detail = e.what();
        }
        rep.checks.push_back(c);
    }
    if (!rho.is_constant()) rep.non_smooth_points = rho.knots();
    return rep;
}

}  // namespace lobexec::model
