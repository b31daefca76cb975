#pragma once

#include "lobexec/impact_model.hpp"
#include "lobexec/resilience.hpp"
#include "lobexec/shape.hpp"

#include <string>
#include <vector>

namespace lobexec::model {

struct ProblemSpec {
    double X0 = 0;
    int N = 1;  ///< N+1 trades at t_n = n*tau
    double T = 1;
    ShapeTable shape = ShapeTable::block(1.0);
    ResilienceCurve resilience = ResilienceCurve::constant(1.0);
    Version version = Version::V2;

    double tau() const noexcept { return N > 0 ? T / N : T; }
    void validate() const;
};

struct SolverDiagnostics {
    double bracket_lo = 0, bracket_hi = 0;
    int iterations = 0;
    double residual = 0;
    int root_count = 0;     ///< sign changes found while scanning the bracket
    bool jump_root = false; ///< bracket collapsed across a discontinuity of the residual
};

struct ExecutionStrategy {
    std::vector<double> sizes;
    std::vector<double> times;
    Version version = Version::V2;
    SolverDiagnostics diagnostics;

    double total() const noexcept;
};

/// Strategy with the given sizes on the problem's time grid (no solving).
ExecutionStrategy make_strategy(const ProblemSpec& spec, std::vector<double> sizes);

double h1(double x, const ProblemSpec& spec);
double h2(double d, const ProblemSpec& spec);

/// Optimal strategy of the impact-dependent model for the problem's version.
ExecutionStrategy solve_optimal(const ProblemSpec& spec);

/// Optimal strategy of the constant-resilience model with speed rho,
/// evaluated through the constant-rate formulas only.
ExecutionStrategy solve_afs(double X0, int N, double T, const ShapeTable& shape, double rho,
                            Version version);

/// Impact cost of any strategy under the simplified dynamics started from a
/// fresh book, with the unaffected price set to zero.
double predicted_cost(const ProblemSpec& spec, const std::vector<double>& sizes);

struct BruteForceResult {
    std::vector<double> sizes;
    double cost = 0;
    double cell = 0;
    std::size_t points = 0;
};

/// Exhaustive search over strategies on a grid of step X0/resolution, with
/// every leg (including the budget-closing last one) at least
/// -min_leg_fraction * X0.
BruteForceResult brute_force_optimum(const ProblemSpec& spec, int resolution = 200,
                                     double min_leg_fraction = 0.25);

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    bool applicable = true;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    std::vector<double> non_smooth_points;  ///< knots where the second derivative of rho jumps
    double grid_limit = 0;

    bool ok() const noexcept;
    /// Only the checks that concern the resilience curve.
    bool resilience_ok() const noexcept;
    const AssumptionCheck* find(const std::string& name) const noexcept;
};

AssumptionReport validate_assumptions(const ProblemSpec& spec);

}  // namespace lobexec::model
