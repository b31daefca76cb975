#include "lobexec/impact_model.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lobexec::model {

int version_number(Version v) noexcept { return v == Version::V1 ? 1 : 2; }

Version version_from_int(int v) {
    if (v == 1) return Version::V1;
    if (v == 2) return Version::V2;
    throw InvalidArgument("model version must be 1 or 2");
}

ImpactState ImpactState::fresh(Version v, double A0, double B0) {
    if (B0 > A0) throw InvalidArgument("unaffected bid must not exceed unaffected ask");
    ImpactState s;
    s.version = v;
    s.A0 = A0;
    s.B0 = B0;
    return s;
}

double first_moment(const ShapeTable& shape, double a, double b) {
    if (a == b) return 0.0;
    if (a > b) return -first_moment(shape, b, a);
    double total = 0.0;
    double x = a;
    while (x < b) {
        // next cell boundary strictly above x, or b if the shape is flat there
        double next = std::floor(x) + 1.0;
        if (x < shape.first_offset()) next = std::min<double>(shape.first_offset(), b);
        else if (x >= shape.end_offset()) next = b;
        next = std::min(next, b);
        total += shape.f(x) * 0.5 * (next * next - x * x);
        x = next;
    }
    return total;
}

double anchor_value(Version v, double D, double E) noexcept { return v == Version::V1 ? E : D; }

TradeCost apply_trade(ImpactState& s, const ShapeTable& shape, double size) {
    if (!std::isfinite(size)) throw InvalidArgument("trade size must be finite");
    TradeCost out;

    // simplified pair: every order moves the same process
    const double D0 = s.D_simple;
    s.E_simple += size;
    s.D_simple = shape.F_inverse(s.E_simple);
    out.simple_cost = s.A0 * size + first_moment(shape, D0, s.D_simple);

    if (size >= 0.0) {
        const double Da = s.D_ask;
        s.E_ask += size;
        s.D_ask = shape.F_inverse(s.E_ask);
        out.cost = s.A0 * size + first_moment(shape, Da, s.D_ask);
    } else {
        const double Db = s.D_bid;
        s.E_bid += size;
        s.D_bid = shape.F_inverse(s.E_bid);
        out.cost = s.B0 * size + first_moment(shape, Db, s.D_bid);
    }

    s.anchor_ask = anchor_value(s.version, s.D_ask, s.E_ask);
    s.anchor_bid = anchor_value(s.version, s.D_bid, s.E_bid);
    s.anchor_simple = anchor_value(s.version, s.D_simple, s.E_simple);
    return out;
}

namespace {

void decay_pair(Version v, double& D, double& E, double anchor, const ShapeTable& shape,
                const ResilienceCurve& rho, double dt) {
    const double factor = std::exp(-rho.rate(anchor) * dt);
    if (v == Version::V1) {
        E *= factor;
        D = shape.F_inverse(E);
    } else {
        D *= factor;
        E = shape.F(D);
    }
}

}  // namespace

void decay(ImpactState& s, const ShapeTable& shape, const ResilienceCurve& rho, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("decay interval must be positive");
    decay_pair(s.version, s.D_ask, s.E_ask, s.anchor_ask, shape, rho, dt);
    decay_pair(s.version, s.D_bid, s.E_bid, s.anchor_bid, shape, rho, dt);
    decay_pair(s.version, s.D_simple, s.E_simple, s.anchor_simple, shape, rho, dt);
}

OvertakingReport overtaking_monotonicity_check(const ResilienceCurve& rho, double tau,
                                               const std::vector<std::pair<double, double>>& grid) {
    OvertakingReport rep;
    for (const auto& [x, y] : grid) {
        const double s = x + y;
        const bool same_sign = (s > 0 && x > 0) || (s < 0 && x < 0);
        if (!same_sign || !(std::fabs(s) > std::fabs(x))) continue;
        ++rep.pairs_checked;
        const double lhs = std::fabs(s) * std::exp(-rho.rate(s) * tau);
        const double rhs = std::fabs(x) * std::exp(-rho.rate(x) * tau);
        if (!(lhs > rhs)) rep.violations.push_back({x, y, lhs, rhs});
    }
    return rep;
}

}  // namespace lobexec::model
