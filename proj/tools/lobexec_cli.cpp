// lobexec: calibration campaigns, strategy solving and cost tables.
//
// Exit codes: 0 ok, 2 usage, 3 config or input parse error, 4 numeric
// failure, 5 assumption violation, 6 I/O error.

#include "lobexec/errors.hpp"
#include "lobexec/io.hpp"
#include "lobexec/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace lobexec;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kConfig = 3, kNumeric = 4, kAssumption = 5, kIo = 6 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out = "out";
    unsigned jobs = 0;
    bool strict = false;
    bool desk_scale = false;
};

struct SolveArgs {
    double X0 = 0;
    int N = 0;
    double T = 0;
    int version = 2;
    std::string shape, resilience;
};

// Writes named artifacts into the output directory and keeps the manifest.
class Session {
public:
    Session(std::string subcommand, const Globals& g) : g_(g) {
        m_.subcommand = std::move(subcommand);
        m_.started = io::utc_timestamp();
        m_.output_dir = g.out;
    }

    io::RunConfig load_config(bool required) {
        io::RunConfig cfg;
        if (g_.config.empty()) {
            if (required) throw UsageError("--config is required for " + m_.subcommand);
        } else {
            if (!fs::is_regular_file(g_.config)) throw UsageError("config file not found: " + g_.config);
            const auto text = io::read_file(g_.config);
            cfg = io::parse_config_text(text);
            m_.config_path = g_.config;
            m_.config_hash = io::fnv1a_hex(text);
        }
        if (g_.desk_scale) io::apply_desk_scale(cfg);
        if (g_.seed) cfg.seed = cfg.market.seed = *g_.seed;
        m_.seed = cfg.seed;
        return cfg;
    }

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(g_.out);
        io::write_file(fs::path(g_.out) / name, content);
        m_.outputs.push_back(name);
    }
    void write(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    json& counts() { return m_.counts; }

    void finish() {
        m_.finished = io::utc_timestamp();
        fs::create_directories(g_.out);
        io::write_file(fs::path(g_.out) / "manifest.json", io::to_json(m_).dump(2) + "\n");
    }

private:
    const Globals& g_;
    io::Manifest m_;
};

std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json decay_counts(const std::vector<calib::DecayEnsemble>& ensembles) {
    json j = json::array();
    for (const auto& e : ensembles)
        j.push_back({{"D", e.D},
                     {"runs_used", e.runs_used},
                     {"runs_unreachable", e.runs_unreachable},
                     {"runs_overshoot", e.runs_overshoot}});
    return j;
}

model::ProblemSpec problem_from(const SolveArgs& a) {
    model::ProblemSpec spec;
    spec.X0 = a.X0;
    spec.N = a.N;
    spec.T = a.T;
    spec.version = model::version_from_int(a.version);
    if (a.shape.empty() || a.resilience.empty()) throw UsageError("--shape and --resilience are required");
    for (const auto& p : {a.shape, a.resilience})
        if (!fs::is_regular_file(p)) throw UsageError("file not found: " + p);
    spec.shape = io::load_shape(a.shape);
    spec.resilience = io::load_curve(a.resilience);
    return spec;
}

int cmd_calibrate_shape(const Globals& g) {
    Session s("calibrate-shape", g);
    const auto cfg = s.load_config(true);
    const auto est = calib::estimate_shape(cfg.market, cfg.plan.snapshots, cfg.seed, g.jobs);

    // the book and price path of the first run, for inspection
    const sim::OpinionGame game(cfg.market);
    auto state = game.burned_in_state(derive_seed(cfg.seed, 0));
    const auto snap = sim::snapshot_book(state);
    std::vector<sim::PricePoint> path;
    const std::uint64_t path_steps = 10'000;
    path.reserve(path_steps);
    std::uint64_t step = 0;
    game.run(state, path_steps, [&](const sim::MarketState& x) {
        path.push_back({++step, x.best_bid(), x.best_ask()});
    });

    s.write("shape.csv", io::shape_csv(est.shape));
    s.write("shape_bands.csv", io::shape_bands_csv(est));
    s.write("snapshot.csv", io::snapshot_csv(snap));
    s.write("price_path.csv", io::price_path_csv(path));
    s.counts() = {{"snapshots", est.snapshots}, {"support", est.support}, {"burn_in_steps", cfg.market.burn_in_steps}};
    s.finish();
    return kOk;
}

int cmd_calibrate_permanent(const Globals& g) {
    Session s("calibrate-permanent", g);
    const auto cfg = s.load_config(true);
    const auto r = calib::measure_permanent_impact(cfg.market, cfg.permanent, cfg.seed, g.jobs);
    s.write("permanent.csv", io::permanent_csv(r));
    s.write("permanent_fit.json", json{{"fit", io::to_json(r.fit)}, {"reference_slope", 0.02738}});
    s.counts() = {{"volumes", cfg.permanent.volumes.size()},
                  {"samples_per_volume", cfg.permanent.samples_per_volume},
                  {"delay_steps", cfg.permanent.delay_steps},
                  {"window_steps", cfg.permanent.window_steps}};
    s.finish();
    return kOk;
}

int cmd_calibrate_resilience(const Globals& g) {
    Session s("calibrate-resilience", g);
    const auto cfg = s.load_config(true);
    const auto m = exper::calibrate_model(cfg.market, cfg.plan, cfg.seed, g.jobs);
    s.write("shape.csv", io::shape_csv(m.shape.shape));
    json fits = json::array();
    for (const auto& e : m.ensembles) {
        s.write("decay_D" + std::to_string(e.D) + ".csv", io::decay_csv(e));
        fits.push_back({{"D", e.D}, {"fit", io::to_json(calib::fit_exponential(e.mean))}});
    }
    json curves = json::array();
    bool all_ok = true;
    for (double tau : cfg.taus) {
        const auto c = m.curve(tau, cfg.version);
        const std::string name = "resilience_tau" + tag(tau) + ".csv";
        s.write(name, io::curve_csv(c.curve));
        s.write(name + ".json", io::curve_sidecar(c.curve));
        curves.push_back(io::to_json(c));
        all_ok = all_ok && c.rho_bounds_ok;
    }
    s.write("resilience.json", json{{"naive_D", m.naive_D},
                                    {"naive_rho", m.naive_rho},
                                    {"version", model::version_number(cfg.version)},
                                    {"fits", fits},
                                    {"curves", curves}});
    s.counts() = {{"ensembles", decay_counts(m.ensembles)}, {"snapshots", m.shape.snapshots}};
    s.finish();
    if (!all_ok) {
        std::cerr << "warning: a calibrated curve violates the rate bounds\n";
        if (g.strict) return kAssumption;
    }
    return kOk;
}

int cmd_solve(const Globals& g, const SolveArgs& a) {
    Session s("solve", g);
    s.load_config(false);
    const auto spec = problem_from(a);
    const auto report = model::validate_assumptions(spec);
    if (!report.ok()) {
        for (const auto& c : report.checks)
            if (c.applicable && !c.passed) std::cerr << "warning: " << c.name << ": " << c.detail << '\n';
        if (g.strict) {
            s.write("assumptions.json", io::to_json(report));
            s.finish();
            return kAssumption;
        }
    }
    const auto st = model::solve_optimal(spec);
    s.write("strategy.csv", io::strategy_csv(st));
    s.write("solve.json", json{{"X0", spec.X0},
                               {"N", spec.N},
                               {"T", spec.T},
                               {"version", model::version_number(spec.version)},
                               {"predicted_cost", model::predicted_cost(spec, st.sizes)},
                               {"diagnostics", io::to_json(st.diagnostics)},
                               {"assumptions", io::to_json(report)}});
    s.finish();
    return kOk;
}

int cmd_validate(const Globals& g, const SolveArgs& a) {
    Session s("validate-assumptions", g);
    s.load_config(false);
    const auto report = model::validate_assumptions(problem_from(a));
    s.write("assumptions.json", io::to_json(report));
    s.finish();
    for (const auto& c : report.checks)
        std::cout << (c.applicable ? (c.passed ? "pass " : "FAIL ") : "n/a  ") << c.name << '\n';
    return report.ok() ? kOk : kAssumption;
}

int cmd_run_strategy(const Globals& g, const std::string& strategy_path, std::optional<std::size_t> runs) {
    Session s("run-strategy", g);
    const auto cfg = s.load_config(true);
    if (!fs::is_regular_file(strategy_path)) throw UsageError("strategy file not found: " + strategy_path);
    model::ExecutionStrategy st;
    st.sizes = io::parse_strategy_sizes(io::read_file(strategy_path), &st.times);
    const auto stats = exper::run_strategy_in_sim(cfg.market, st, runs.value_or(cfg.table.runs), cfg.seed, g.jobs);
    s.write("costs.csv", io::costs_csv(stats));
    s.write("run.json", json{{"mean", stats.mean},
                             {"standard_error", stats.standard_error},
                             {"runs", stats.costs.size()},
                             {"runs_requested", stats.runs_requested},
                             {"runs_discarded", stats.runs_discarded}});
    s.counts() = {{"runs_requested", stats.runs_requested}, {"runs_discarded", stats.runs_discarded}};
    s.finish();
    return kOk;
}

int cmd_reproduce_tables(const Globals& g) {
    Session s("reproduce-tables", g);
    const auto cfg = s.load_config(true);
    if (cfg.cells.empty()) throw ParseError("config has no cells");
    const auto m = exper::calibrate_model(cfg.market, cfg.plan, cfg.seed, g.jobs);
    const auto rows = exper::reproduce_cost_table(cfg.market, m, cfg.cells, cfg.table, cfg.seed, g.jobs);
    s.write("shape.csv", io::shape_csv(m.shape.shape));
    s.write("table.csv", io::table_csv(rows));
    json jr = json::array();
    bool failed = false;
    for (const auto& r : rows) {
        jr.push_back(io::to_json(r));
        failed = failed || !r.ok;
    }
    s.write("table.json", json{{"naive_rho", m.naive_rho},
                               {"naive_D", m.naive_D},
                               {"version", model::version_number(cfg.table.version)},
                               {"rows", jr}});
    s.counts() = {{"cells", cfg.cells.size()},
                  {"runs_per_cell", cfg.table.runs},
                  {"ensembles", decay_counts(m.ensembles)},
                  {"burn_in_steps", cfg.market.burn_in_steps}};
    s.finish();
    if (failed) std::cerr << "warning: some cells failed to solve, see table.json\n";
    return failed ? kNumeric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal execution on limit order books: calibration, solving and cost tables"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--tool-version", LOBEXEC_VERSION);

    Globals g;
    app.add_option("--seed", g.seed, "Master seed (overrides the config)");
    app.add_option("--config", g.config, "Config file");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads, 0 = all cores")->capture_default_str();
    app.add_flag("--strict", g.strict, "Treat assumption failures as errors");
    app.add_flag("--desk-scale", g.desk_scale, "Reduced burn-in, snapshot and run counts");

    SolveArgs sa;
    auto add_problem = [&](CLI::App* c) {
        c->add_option("--X0", sa.X0, "Order size")->required();
        c->add_option("--N", sa.N, "Number of trades minus one")->required();
        c->add_option("--T", sa.T, "Horizon")->required();
        c->add_option("--version", sa.version, "Impact model version (1 or 2)")->capture_default_str();
        c->add_option("--shape", sa.shape, "Shape CSV")->required();
        c->add_option("--resilience", sa.resilience, "Resilience curve CSV")->required();
    };

    auto* c_shape = app.add_subcommand("calibrate-shape", "Estimate the order book shape");
    auto* c_perm = app.add_subcommand("calibrate-permanent", "Measure long-run price impact against volume");
    auto* c_res = app.add_subcommand("calibrate-resilience", "Decay ensembles and resilience curves");
    auto* c_solve = app.add_subcommand("solve", "Solve the optimal strategy");
    add_problem(c_solve);
    auto* c_valid = app.add_subcommand("validate-assumptions", "Check the solver's assumptions");
    add_problem(c_valid);
    auto* c_run = app.add_subcommand("run-strategy", "Sample a strategy's cost in the simulator");
    std::string strategy_path;
    std::optional<std::size_t> runs;
    c_run->add_option("--strategy", strategy_path, "Strategy CSV (n,t_n,size)")->required();
    c_run->add_option("--runs", runs, "Runs (default: the config's runs)");
    auto* c_table = app.add_subcommand("reproduce-tables", "Predicted and sampled cost table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*c_shape) return cmd_calibrate_shape(g);
        if (*c_perm) return cmd_calibrate_permanent(g);
        if (*c_res) return cmd_calibrate_resilience(g);
        if (*c_solve) return cmd_solve(g, sa);
        if (*c_valid) return cmd_validate(g, sa);
        if (*c_run) return cmd_run_strategy(g, strategy_path, runs);
        if (*c_table) return cmd_reproduce_tables(g);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const AssumptionViolated& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return kAssumption;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    }
    return kUsage;
}
