#pragma once

#include "lobexec/impact_model.hpp"
#include "lobexec/market_sim.hpp"
#include "lobexec/resilience.hpp"
#include "lobexec/shape.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lobexec::calib {

/// Order statistics of one sample (quartiles by linear interpolation).
struct BandStats {
    double mean = 0, q1 = 0, median = 0, q3 = 0, min = 0, max = 0;
    std::size_t count = 0;
};
BandStats band(std::vector<double> values);

// ---- shape ----------------------------------------------------------------

struct ShapeEstimate {
    model::ShapeTable shape = model::ShapeTable::block(1.0);
    /// Seller counts per offset from the best ask, over every offset seen.
    std::vector<BandStats> ask_bands;
    /// Cells 0..support-1 carry the mean counts; the support ends before the
    /// first offset whose mean is zero.
    int support = 0;
    std::size_t snapshots = 0;
};

/// Mean seller profile of the snapshots, mirrored onto the bid side. The tail
/// value is the mean of the last `tail_cells` supported cells.
ShapeEstimate shape_from_snapshots(const std::vector<sim::BookSnapshot>& snaps, int tail_cells = 5);

/// One snapshot from each of `count` independently seeded, burned-in runs.
ShapeEstimate estimate_shape(const sim::MarketConfig& config, std::size_t count, std::uint64_t seed,
                             unsigned jobs = 0);

// ---- permanent impact -----------------------------------------------------

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
    double slope_se = 0, intercept_se = 0;
    std::size_t n = 0;
};
LinearFit ordinary_least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct PermanentImpactOptions {
    std::vector<int> volumes{25, 50, 75, 100, 125, 150, 175, 200, 225, 250, 275, 300};
    std::size_t samples_per_volume = 500;
    std::uint64_t delay_steps = 500'000;   ///< from the trade to the start of the window
    std::uint64_t window_steps = 100'000;  ///< length of the averaging window
    std::uint64_t stride = 100;            ///< sampling interval inside the window
};

struct VolumeImpact {
    int volume = 0;
    BandStats shift;
    double standard_error = 0;
};

struct PermanentImpactResult {
    std::vector<VolumeImpact> per_volume;
    LinearFit fit;  ///< regression of the mean shift on volume
};

/// Long-run shift of the time-averaged best ask after a buy of each volume.
PermanentImpactResult measure_permanent_impact(const sim::MarketConfig& config,
                                               const PermanentImpactOptions& options,
                                               std::uint64_t seed, unsigned jobs = 0);

/// Regression on already measured per-volume means.
PermanentImpactResult permanent_impact_from_means(std::vector<VolumeImpact> per_volume);

// ---- decay ----------------------------------------------------------------

struct DecayOptions {
    int D = 8;
    std::size_t runs = 2500;
    std::uint64_t horizon = 50'000;
    bool sell = true;       ///< sell order as in the calibration campaign; buy by symmetry
    std::uint64_t band_stride = 0;  ///< 0 picks horizon/1000 (at least 1)
    bool keep_paths = false;
};

struct DecayEnsemble {
    int D = 0;
    std::uint64_t horizon = 0;
    std::vector<double> mean;  ///< <p-bar>_t, t = 0..horizon
    std::vector<std::uint64_t> band_times;
    std::vector<BandStats> bands;
    std::size_t runs_used = 0;
    std::size_t runs_unreachable = 0;  ///< tail exhausted before the impact reached D
    std::size_t runs_overshoot = 0;    ///< impact jumped past D in one unit
    std::vector<int> volumes;          ///< order volume of every used run
    std::vector<std::vector<double>> paths;
};

/// Pointwise statistics of equal-length paths.
DecayEnsemble ensemble_from_paths(int D, const std::vector<std::vector<double>>& paths,
                                  std::uint64_t band_stride = 1, bool keep_paths = true);

DecayEnsemble sample_decay(const sim::MarketConfig& config, const DecayOptions& options,
                           std::uint64_t seed, unsigned jobs = 0);

// ---- exponential fit ------------------------------------------------------

struct ExponentialFit {
    double A = 0, B = 0, rho = 0;
    double se_A = 0, se_B = 0, se_rho = 0;
    double residual_norm = 0;
    int iterations = 0;
    bool converged = false;
    bool identifiable = true;  ///< false for a flat path: only A is meaningful
};

/// Gauss-Newton fit of A + B e^{-rho t} to path[t], t = 0..n-1.
ExponentialFit fit_exponential(const std::vector<double>& path);

// ---- resilience -----------------------------------------------------------

/// [ln D - ln(<p>_t - (1 - e^{-t}) A_D)] / t.
double resilience_from_decay(double D, double mean_t, double A_D, double t);
/// Same, reading <p>_t from a path sampled at integer t (linear in between).
double resilience_from_decay(double D, const std::vector<double>& mean_path, double A_D, double t);

struct ResilienceKnot {
    int D = 0;
    double key = 0;  ///< D for version 2, F(D) for version 1
    double A_D = 0;
    double rho = 0;
    ExponentialFit fit;
};

struct ResilienceCalibration {
    model::ResilienceCurve curve = model::ResilienceCurve::constant(1.0);
    std::vector<ResilienceKnot> knots;
    double tau = 0;
    model::Version version = model::Version::V2;
    bool rho_bounds_ok = false;      ///< 0 < k <= K < inf
    bool no_overtaking_ok = false;   ///< 1 - tau rho'(x) x > 0 on the check grid
};

/// Knots (D, rho_num(D, tau)) from one ensemble per D, interpolated
/// monotonically. Version 1 maps impacts to volumes through the shape's F.
ResilienceCalibration build_resilience_curve(const std::vector<DecayEnsemble>& ensembles, double tau,
                                             model::Version version,
                                             const model::ShapeTable* shape = nullptr,
                                             int D_min = 5);

}  // namespace lobexec::calib
