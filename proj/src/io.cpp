#include "lobexec/io.hpp"

#include "lobexec/errors.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lobexec::io {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError("'" + key + "': not a number: '" + v + "'");
    }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ParseError("'" + key + "': not an integer: '" + v + "'");
    }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    const auto i = to_int(key, v);
    if (i < 0) throw ParseError("'" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(i);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("'" + key + "': expected true or false");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split(v, ',')) out.push_back(static_cast<int>(to_int(key, item)));
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
    return out;
}

// Rows of a CSV with the expected header; blank lines and `#` lines skipped.
std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::vector<std::string>& header) {
    std::istringstream in(text);
    std::string line;
    bool seen_header = false;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, ',');
        if (!seen_header) {
            if (cells != header) throw ParseError("unexpected CSV header: " + line);
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size()) throw ParseError("wrong number of CSV fields: " + line);
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw ParseError("missing CSV header");
    return rows;
}

}  // namespace

// ---- config ---------------------------------------------------------------

RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"schema_version",
         [&](auto& k, auto& v) {
             if (to_int(k, v) != kSchemaVersion) throw ParseError("unsupported schema_version " + v);
         }},
        {"trader_count", [&](auto& k, auto& v) { c.market.trader_count = to_count(k, v); }},
        {"share_count", [&](auto& k, auto& v) { c.market.share_count = to_count(k, v); }},
        {"gamma", [&](auto& k, auto& v) { c.market.gamma = to_double(k, v); }},
        {"jump_range_l", [&](auto& k, auto& v) { c.market.jump_range_l = static_cast<int>(to_int(k, v)); }},
        {"mu_buyer", [&](auto& k, auto& v) { c.market.mu_buyer = to_double(k, v); }},
        {"mu_seller", [&](auto& k, auto& v) { c.market.mu_seller = to_double(k, v); }},
        {"requote_gap_min", [&](auto& k, auto& v) { c.market.requote_gap_min = static_cast<int>(to_int(k, v)); }},
        {"requote_gap_max", [&](auto& k, auto& v) { c.market.requote_gap_max = static_cast<int>(to_int(k, v)); }},
        {"burn_in_steps", [&](auto& k, auto& v) { c.market.burn_in_steps = to_count(k, v); }},
        {"init_window", [&](auto& k, auto& v) { c.market.init_window = static_cast<int>(to_int(k, v)); }},
        {"seed", [&](auto& k, auto& v) { c.seed = c.market.seed = to_count(k, v); }},
        {"snapshots", [&](auto& k, auto& v) { c.plan.snapshots = to_count(k, v); }},
        {"volumes", [&](auto& k, auto& v) { c.permanent.volumes = to_int_list(k, v); }},
        {"samples_per_volume", [&](auto& k, auto& v) { c.permanent.samples_per_volume = to_count(k, v); }},
        {"delay_steps", [&](auto& k, auto& v) { c.permanent.delay_steps = to_count(k, v); }},
        {"window_steps", [&](auto& k, auto& v) { c.permanent.window_steps = to_count(k, v); }},
        {"sample_stride", [&](auto& k, auto& v) { c.permanent.stride = to_count(k, v); }},
        {"impacts", [&](auto& k, auto& v) { c.plan.impacts = to_int_list(k, v); }},
        {"decay_runs", [&](auto& k, auto& v) { c.plan.decay.runs = to_count(k, v); }},
        {"decay_horizon", [&](auto& k, auto& v) { c.plan.decay.horizon = to_count(k, v); }},
        {"decay_band_stride", [&](auto& k, auto& v) { c.plan.decay.band_stride = to_count(k, v); }},
        {"decay_side",
         [&](auto& k, auto& v) {
             if (v != "sell" && v != "buy") throw ParseError("'" + k + "' must be sell or buy");
             c.plan.decay.sell = v == "sell";
         }},
        {"D_min", [&](auto& k, auto& v) { c.plan.D_min = static_cast<int>(to_int(k, v)); }},
        {"naive_D", [&](auto& k, auto& v) { c.plan.naive_D = static_cast<int>(to_int(k, v)); }},
        {"taus", [&](auto& k, auto& v) { c.taus = to_double_list(k, v); }},
        {"version",
         [&](auto& k, auto& v) {
             try {
                 c.version = c.table.version = model::version_from_int(static_cast<int>(to_int(k, v)));
             } catch (const InvalidArgument& e) {
                 throw ParseError(e.what());
             }
         }},
        {"X0", [&](auto& k, auto& v) { c.X0 = to_double(k, v); }},
        {"cells",
         [&](auto& k, auto& v) {
             c.cells.clear();
             for (const auto& item : split(v, ',')) {
                 const auto parts = split(item, ':');
                 if (parts.size() != 2) throw ParseError("'" + k + "': cells are written N:T");
                 c.cells.push_back({0.0, static_cast<int>(to_int(k, parts[0])), to_double(k, parts[1])});
             }
         }},
        {"runs", [&](auto& k, auto& v) { c.table.runs = to_count(k, v); }},
        {"naive_rows", [&](auto& k, auto& v) { c.table.naive_rows = to_bool(k, v); }},
    };

    std::string line;
    int lineno = 0;
    bool versioned = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (value.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        it->second(key, value);
        if (key == "schema_version") versioned = true;
    }
    if (!versioned) throw ParseError("config lacks schema_version");
    for (auto& cell : c.cells) cell.X0 = c.X0;
    c.market.validate();
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

void apply_desk_scale(RunConfig& c) {
    c.market.burn_in_steps = std::min<std::uint64_t>(c.market.burn_in_steps, 100'000);
    c.plan.snapshots = std::min<std::size_t>(c.plan.snapshots, 200);
    c.plan.decay.runs = std::min<std::size_t>(c.plan.decay.runs, 300);
    c.plan.decay.horizon = std::min<std::uint64_t>(c.plan.decay.horizon, 20'000);
    c.permanent.samples_per_volume = std::min<std::size_t>(c.permanent.samples_per_volume, 50);
    c.permanent.delay_steps = std::min<std::uint64_t>(c.permanent.delay_steps, 50'000);
    c.permanent.window_steps = std::min<std::uint64_t>(c.permanent.window_steps, 20'000);
    c.table.runs = std::min<std::size_t>(c.table.runs, 100);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    out << content;
    if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

// ---- CSV writers ----------------------------------------------------------

std::string shape_csv(const model::ShapeTable& shape) {
    std::ostringstream s;
    s << "# tail_value=" << num(shape.tail_value()) << "\noffset,f_value\n";
    for (std::size_t i = 0; i < shape.values().size(); ++i)
        s << shape.first_offset() + static_cast<int>(i) << ',' << num(shape.values()[i]) << '\n';
    return s.str();
}

std::string shape_bands_csv(const calib::ShapeEstimate& est) {
    std::ostringstream s;
    s << "offset,mean,q1,median,q3,min,max\n";
    for (std::size_t i = 0; i < est.ask_bands.size(); ++i) {
        const auto& b = est.ask_bands[i];
        s << i << ',' << num(b.mean) << ',' << num(b.q1) << ',' << num(b.median) << ',' << num(b.q3) << ','
          << num(b.min) << ',' << num(b.max) << '\n';
    }
    return s.str();
}

std::string snapshot_csv(const sim::BookSnapshot& snap) {
    std::ostringstream s;
    s << "offset,count,side\n";
    for (const auto& [off, cnt] : snap.bid_profile) s << off << ',' << cnt << ",bid\n";
    for (const auto& [off, cnt] : snap.ask_profile) s << off << ',' << cnt << ",ask\n";
    return s.str();
}

std::string price_path_csv(const std::vector<sim::PricePoint>& path) {
    std::ostringstream s;
    s << "step,best_bid,best_ask\n";
    for (const auto& p : path) s << p.step << ',' << p.best_bid << ',' << p.best_ask << '\n';
    return s.str();
}

std::string curve_csv(const model::ResilienceCurve& curve) {
    std::ostringstream s;
    s << "knot,rho\n";
    for (std::size_t i = 0; i < curve.knots().size(); ++i)
        s << num(curve.knots()[i]) << ',' << num(curve.values()[i]) << '\n';
    return s.str();
}

nlohmann::json curve_sidecar(const model::ResilienceCurve& curve) {
    return {{"interpolant", curve.is_constant() ? "constant" : "cubic_hermite"},
            {"extension", "even, clamped beyond the last knot"},
            {"knots", curve.knots()},
            {"values", curve.values()},
            {"slopes", curve.slopes()},
            {"lower_bound", curve.lower_bound()},
            {"upper_bound", curve.upper_bound()}};
}

std::string decay_csv(const calib::DecayEnsemble& e) {
    std::ostringstream s;
    s << "t,mean,q1,q3,min,max\n";
    for (std::size_t k = 0; k < e.band_times.size(); ++k) {
        const auto& b = e.bands[k];
        s << e.band_times[k] << ',' << num(e.mean[e.band_times[k]]) << ',' << num(b.q1) << ',' << num(b.q3) << ','
          << num(b.min) << ',' << num(b.max) << '\n';
    }
    return s.str();
}

std::string strategy_csv(const model::ExecutionStrategy& st) {
    std::ostringstream s;
    s << "n,t_n,size\n";
    for (std::size_t n = 0; n < st.sizes.size(); ++n) s << n << ',' << num(st.times[n]) << ',' << num(st.sizes[n]) << '\n';
    return s.str();
}

std::string permanent_csv(const calib::PermanentImpactResult& r) {
    std::ostringstream s;
    s << "volume,mean,standard_error,q1,median,q3,min,max,samples\n";
    for (const auto& v : r.per_volume)
        s << v.volume << ',' << num(v.shift.mean) << ',' << num(v.standard_error) << ',' << num(v.shift.q1) << ','
          << num(v.shift.median) << ',' << num(v.shift.q3) << ',' << num(v.shift.min) << ',' << num(v.shift.max)
          << ',' << v.shift.count << '\n';
    return s.str();
}

std::string table_csv(const std::vector<exper::TableRow>& rows) {
    std::ostringstream s;
    s << "N,T,xi0,xi1,xiN,predicted,sampled_mean,sampled_se,runs,ratio,strategy\n";
    for (const auto& r : rows) {
        s << r.cell.N << ',' << num(r.cell.T) << ',';
        if (r.ok) {
            const auto& x = r.strategy.sizes;
            s << num(x.front()) << ',' << (x.size() > 2 ? num(x[1]) : "") << ',' << num(x.back()) << ','
              << num(r.predicted) << ',';
        } else {
            s << ",,,,";
        }
        if (r.sampled && !r.sampled->costs.empty())
            s << num(r.sampled->mean) << ',' << num(r.sampled->standard_error) << ',' << r.sampled->costs.size() << ','
              << num(r.ratio());
        else
            s << ",,0,";
        s << ',' << r.label << '\n';
    }
    return s.str();
}

std::string costs_csv(const exper::SampleStats& st) {
    std::ostringstream s;
    s << "run,cost\n";
    for (std::size_t i = 0; i < st.costs.size(); ++i) s << i << ',' << num(st.costs[i]) << '\n';
    return s.str();
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const model::SolverDiagnostics& d) {
    return {{"bracket", {d.bracket_lo, d.bracket_hi}},
            {"iterations", d.iterations},
            {"residual", d.residual},
            {"root_count", d.root_count},
            {"jump_root", d.jump_root}};
}

nlohmann::json to_json(const model::AssumptionReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"applicable", c.applicable}, {"detail", c.detail}});
    return {{"ok", r.ok()},
            {"resilience_ok", r.resilience_ok()},
            {"grid_limit", r.grid_limit},
            {"non_smooth_points", r.non_smooth_points},
            {"checks", checks}};
}

nlohmann::json to_json(const calib::ExponentialFit& f) {
    return {{"A", f.A},           {"B", f.B},       {"rho", f.rho},
            {"se_A", f.se_A},     {"se_B", f.se_B}, {"se_rho", f.se_rho},
            {"residual_norm", f.residual_norm},     {"iterations", f.iterations},
            {"converged", f.converged},             {"identifiable", f.identifiable}};
}

nlohmann::json to_json(const calib::LinearFit& f) {
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"r2", f.r2},
            {"slope_se", f.slope_se},
            {"intercept_se", f.intercept_se},
            {"n", f.n}};
}

nlohmann::json to_json(const calib::ResilienceCalibration& c) {
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& k : c.knots)
        knots.push_back({{"D", k.D}, {"key", k.key}, {"A_D", k.A_D}, {"rho", k.rho}, {"fit", to_json(k.fit)}});
    return {{"tau", c.tau},
            {"version", model::version_number(c.version)},
            {"rho_bounds_ok", c.rho_bounds_ok},
            {"no_overtaking_ok", c.no_overtaking_ok},
            {"knots", knots},
            {"curve", curve_sidecar(c.curve)}};
}

nlohmann::json to_json(const exper::TableRow& r) {
    nlohmann::json j{{"X0", r.cell.X0}, {"N", r.cell.N},  {"T", r.cell.T},
                     {"strategy", r.label}, {"ok", r.ok}, {"assumptions_ok", r.assumptions_ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["sizes"] = r.strategy.sizes;
    j["shares"] = r.shares;
    j["rho_used"] = r.rho_used;
    j["predicted"] = r.predicted;
    j["diagnostics"] = to_json(r.strategy.diagnostics);
    if (r.sampled) {
        j["sampled"] = {{"mean", r.sampled->mean},
                        {"standard_error", r.sampled->standard_error},
                        {"runs", r.sampled->costs.size()},
                        {"runs_requested", r.sampled->runs_requested},
                        {"runs_discarded", r.sampled->runs_discarded}};
        if (!r.sampled->costs.empty()) j["ratio"] = r.ratio();
    }
    return j;
}

// ---- readers --------------------------------------------------------------

model::ShapeTable parse_shape_csv(const std::string& text) {
    std::optional<double> tail;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            const std::string tag = "# tail_value=";
            if (line.rfind(tag, 0) == 0) tail = to_double("tail_value", trim(line.substr(tag.size())));
        }
    }
    if (!tail) throw ParseError("shape CSV lacks a '# tail_value=' line");
    const auto rows = csv_rows(text, {"offset", "f_value"});
    if (rows.empty()) throw ParseError("shape CSV has no cells");
    const auto first = to_int("offset", rows.front()[0]);
    std::vector<double> values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (to_int("offset", rows[i][0]) != first + static_cast<std::int64_t>(i))
            throw ParseError("shape offsets must be consecutive");
        values.push_back(to_double("f_value", rows[i][1]));
    }
    try {
        return model::ShapeTable(static_cast<int>(first), std::move(values), *tail);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
}

model::ResilienceCurve parse_curve_csv(const std::string& text, const nlohmann::json* sidecar) {
    const auto rows = csv_rows(text, {"knot", "rho"});
    if (rows.empty()) throw ParseError("resilience CSV has no knots");
    std::vector<double> knots, values;
    for (const auto& r : rows) {
        knots.push_back(to_double("knot", r[0]));
        values.push_back(to_double("rho", r[1]));
    }
    try {
        if (rows.size() == 1) return model::ResilienceCurve::constant(values[0]);
        if (sidecar && sidecar->contains("slopes")) {
            auto slopes = (*sidecar)["slopes"].get<std::vector<double>>();
            return model::ResilienceCurve::hermite(std::move(knots), std::move(values), std::move(slopes));
        }
        return model::ResilienceCurve::monotone(std::move(knots), std::move(values));
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("resilience sidecar: ") + e.what());
    }
}

model::ResilienceCurve load_curve(const std::filesystem::path& path) {
    const auto text = read_file(path);
    auto side = path;
    side += ".json";
    if (!std::filesystem::exists(side)) return parse_curve_csv(text);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(side));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(side.string() + ": " + e.what());
    }
    return parse_curve_csv(text, &j);
}

model::ShapeTable load_shape(const std::filesystem::path& path) { return parse_shape_csv(read_file(path)); }

std::vector<double> parse_strategy_sizes(const std::string& text, std::vector<double>* times) {
    const auto rows = csv_rows(text, {"n", "t_n", "size"});
    if (rows.empty()) throw ParseError("strategy CSV has no trades");
    std::vector<double> sizes;
    if (times) times->clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (to_int("n", rows[i][0]) != static_cast<std::int64_t>(i)) throw ParseError("trade indices must run 0, 1, ...");
        if (times) times->push_back(to_double("t_n", rows[i][1]));
        sizes.push_back(to_double("size", rows[i][2]));
    }
    return sizes;
}

// ---- manifest -------------------------------------------------------------

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json to_json(const Manifest& m) {
    return {{"subcommand", m.subcommand},
            {"config", {{"path", m.config_path}, {"fnv1a64", m.config_hash}}},
            {"seed", m.seed},
            {"output_dir", m.output_dir},
            {"outputs", m.outputs},
            {"counts", m.counts},
            {"tool_version", LOBEXEC_VERSION},
            {"started", m.started},
            {"finished", m.finished}};
}

}  // namespace lobexec::io
