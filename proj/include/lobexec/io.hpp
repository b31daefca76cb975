#pragma once

// Config files, CSV/JSON artifacts and run manifests.

#include "lobexec/calibration.hpp"
#include "lobexec/experiments.hpp"
#include "lobexec/market_sim.hpp"
#include "lobexec/resilience.hpp"
#include "lobexec/shape.hpp"
#include "lobexec/strategy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lobexec::io {

inline constexpr int kSchemaVersion = 1;

/// Everything a campaign reads from a config file. Keys are `name = value`,
/// one per line, `#` starts a comment; lists are comma separated and cells
/// are written `N:T`.
struct RunConfig {
    sim::MarketConfig market;
    exper::CalibrationPlan plan;
    calib::PermanentImpactOptions permanent;
    std::vector<double> taus{70.0, 700.0, 7000.0};
    model::Version version = model::Version::V2;
    double X0 = 200;
    std::vector<exper::CellSpec> cells;
    exper::TableOptions table;
    std::uint64_t seed = 1;
};

/// Throws ParseError on unknown keys, malformed values or a schema mismatch,
/// InvalidArgument when the resulting market config is invalid.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);

/// Reduced burn-in, snapshot and run counts for single-machine runs.
void apply_desk_scale(RunConfig& cfg);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// ---- CSV writers ----------------------------------------------------------

std::string shape_csv(const model::ShapeTable& shape);
std::string shape_bands_csv(const calib::ShapeEstimate& est);
std::string snapshot_csv(const sim::BookSnapshot& snap);
std::string price_path_csv(const std::vector<sim::PricePoint>& path);
std::string curve_csv(const model::ResilienceCurve& curve);
nlohmann::json curve_sidecar(const model::ResilienceCurve& curve);
std::string decay_csv(const calib::DecayEnsemble& e);
std::string strategy_csv(const model::ExecutionStrategy& s);
std::string permanent_csv(const calib::PermanentImpactResult& r);
std::string table_csv(const std::vector<exper::TableRow>& rows);
std::string costs_csv(const exper::SampleStats& s);

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const model::SolverDiagnostics& d);
nlohmann::json to_json(const model::AssumptionReport& r);
nlohmann::json to_json(const calib::ExponentialFit& f);
nlohmann::json to_json(const calib::LinearFit& f);
nlohmann::json to_json(const calib::ResilienceCalibration& c);
nlohmann::json to_json(const exper::TableRow& r);

// ---- readers --------------------------------------------------------------

/// Inverse of shape_csv. Throws ParseError.
model::ShapeTable parse_shape_csv(const std::string& text);
/// Inverse of curve_csv; the sidecar, when given, supplies the slopes.
model::ResilienceCurve parse_curve_csv(const std::string& text, const nlohmann::json* sidecar = nullptr);
/// Loads `path` and, if present, `path` + ".json".
model::ResilienceCurve load_curve(const std::filesystem::path& path);
model::ShapeTable load_shape(const std::filesystem::path& path);
/// Columns n,t_n,size.
std::vector<double> parse_strategy_sizes(const std::string& text, std::vector<double>* times = nullptr);

// ---- manifest -------------------------------------------------------------

struct Manifest {
    std::string subcommand;
    std::string config_path;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string output_dir;
    std::vector<std::string> outputs;
    nlohmann::json counts = nlohmann::json::object();
    std::string started, finished;
};

std::string utc_timestamp();
nlohmann::json to_json(const Manifest& m);

}  // namespace lobexec::io
