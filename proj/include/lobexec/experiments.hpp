#pragma once

#include "lobexec/calibration.hpp"
#include "lobexec/market_sim.hpp"
#include "lobexec/strategy.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lobexec::exper {

/// Largest-remainder apportionment: integer shares summing to `total`, each
/// within one of its real-valued target. Works for signed sizes.
std::vector<std::int64_t> round_shares(const std::vector<double>& sizes, std::int64_t total);

struct SampleStats {
    std::vector<double> costs;  ///< one per completed run, in run order
    double mean = 0;
    double standard_error = 0;
    std::size_t runs_requested = 0;
    std::size_t runs_discarded = 0;  ///< rejected by the simulator (tail exhausted)
};

/// Each run: burned-in state seeded by derive_seed(seed, run), then trade n
/// is executed at step round(times[n]) after the start with ordinary rounds in
/// between. Cost is the signed sum of (execution price - pre-campaign ask).
/// Run r uses the same market seed for every strategy, so comparisons pair up.
SampleStats run_strategy_in_sim(const sim::MarketConfig& config, const model::ExecutionStrategy& strategy,
                                std::size_t runs, std::uint64_t seed, unsigned jobs = 0);

/// Calibrated inputs for a table: one shape and one decay ensemble per D.
struct CalibratedModel {
    calib::ShapeEstimate shape;
    std::vector<calib::DecayEnsemble> ensembles;
    int naive_D = 8;  ///< ensemble whose exponential-fit rate serves as the naive constant
    double naive_rho = 0;
    int D_min = 5;

    calib::ResilienceCalibration curve(double tau, model::Version version) const;
};

struct CalibrationPlan {
    std::size_t snapshots = 500;
    std::vector<int> impacts{5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 20};
    calib::DecayOptions decay;  ///< D is overwritten per knot
    int naive_D = 8;
    int D_min = 5;
};

CalibratedModel calibrate_model(const sim::MarketConfig& config, const CalibrationPlan& plan,
                                std::uint64_t seed, unsigned jobs = 0);

struct CellSpec {
    double X0 = 200;
    int N = 40;
    double T = 400;
};

struct TableRow {
    CellSpec cell;
    std::string label;  ///< "GAFS" or "AFS"
    bool ok = false;
    std::string error;  ///< solver failure; row kept, sampled columns absent
    model::ExecutionStrategy strategy;
    std::vector<std::int64_t> shares;
    double rho_used = 0;  ///< anchor value of the curve, or the naive constant
    double predicted = 0;
    std::optional<SampleStats> sampled;  ///< absent for runs = 0
    bool assumptions_ok = false;

    double ratio() const;
};

struct TableOptions {
    std::size_t runs = 500;
    model::Version version = model::Version::V2;
    bool naive_rows = false;  ///< add the constant-rate row after each cell
};

std::vector<TableRow> reproduce_cost_table(const sim::MarketConfig& config, const CalibratedModel& model,
                                           const std::vector<CellSpec>& cells, const TableOptions& options,
                                           std::uint64_t seed, unsigned jobs = 0);

}  // namespace lobexec::exper
