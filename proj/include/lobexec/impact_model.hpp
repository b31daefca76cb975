#pragma once

#include "lobexec/resilience.hpp"
#include "lobexec/shape.hpp"

#include <utility>
#include <vector>

namespace lobexec::model {

enum class Version { V1 = 1, V2 = 2 };

int version_number(Version v) noexcept;
Version version_from_int(int v);

/// Impact processes of the order-book model.
///
/// Ask and bid sides follow the two-sided dynamics (buys only move the ask
/// side, sells only the bid side). The "simple" pair follows the single-sided
/// dynamics in which every order, of either sign, moves the same process.
/// Each process decays at a rate frozen at its value right after the most
/// recent trade of the large trader.
struct ImpactState {
    Version version = Version::V2;
    double D_ask = 0, E_ask = 0;
    double D_bid = 0, E_bid = 0;
    double D_simple = 0, E_simple = 0;
    double A0 = 0, B0 = 0;
    double anchor_ask = 0, anchor_bid = 0, anchor_simple = 0;

    static ImpactState fresh(Version v, double A0 = 0.0, double B0 = 0.0);
};

struct TradeRecord {
    double time = 0;
    double size = 0;
    double cost = 0;
};

struct TradeCost {
    double cost = 0;         ///< two-sided price pi
    double simple_cost = 0;  ///< simplified price pi-bar, priced off A0 for both signs
};

/// int_a^b x f(x) dx, by walking the cells between a and b.
double first_moment(const ShapeTable& shape, double a, double b);

TradeCost apply_trade(ImpactState& state, const ShapeTable& shape, double size);

/// Let all three processes recover for dt > 0 at their anchored rates.
void decay(ImpactState& state, const ShapeTable& shape, const ResilienceCurve& rho, double dt);

/// The value that the version's designated process anchors on after a trade.
double anchor_value(Version v, double D, double E) noexcept;

struct OvertakingViolation {
    double x = 0, y = 0;
    double lhs = 0, rhs = 0;
};

struct OvertakingReport {
    std::size_t pairs_checked = 0;
    std::vector<OvertakingViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

/// Checks |x+y| e^{-rho(x+y) tau} > |x| e^{-rho(x) tau} for every grid pair
/// with sgn(x+y) = sgn(x) and |x+y| > |x|.
OvertakingReport overtaking_monotonicity_check(const ResilienceCurve& rho, double tau,
                                               const std::vector<std::pair<double, double>>& grid);

}  // namespace lobexec::model
