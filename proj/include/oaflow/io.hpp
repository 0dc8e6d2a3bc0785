#pragma once

// File formats: the dotted key-value run configuration, lossless snapshots,
// diagnostics / shape CSV and the key=value summary.

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oaflow/analysis.hpp"
#include "oaflow/errors.hpp"
#include "oaflow/flow.hpp"

namespace oaflow::io {

struct RunConfig {
    FlowConfig flow;
    std::optional<BodySpec> init2;
    std::string phi_family = "power";
    std::string output_dir = ".";
    long snapshot_every = 0;
    std::vector<std::pair<std::string, std::string>> echo;  // keys as read, in file order
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end || v.empty())
        throw ConfigError(key + ": expected a real number, got '" + v + "'");
    return x;
}

inline long to_long(const std::string& key, const std::string& v) {
    long x = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end || v.empty())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of reals");
    return out;
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "grid.N",          "grid.scheme",        "phi.family",     "phi.p",          "f.kind",
        "f.value",         "f.coeffs",           "init.kind",      "init.r",         "init.a",
        "init.b",          "init.coeffs",        "init.scale",     "init2.kind",     "init2.r",
        "init2.a",         "init2.b",            "init2.coeffs",   "init2.scale",    "time.dt_safety",
        "time.t_max",      "stop.rhs_tol",       "stop.gamma_cv_tol", "stop.max_steps", "output.every",
        "output.dir",      "output.snapshot_every", "run.skip_hypothesis_check"};
    return keys;
}

inline BodySpec body_from(const std::map<std::string, std::string>& kv, const std::string& prefix) {
    auto get = [&](const std::string& k) -> const std::string* {
        const auto it = kv.find(prefix + "." + k);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto need = [&](const std::string& k) -> const std::string& {
        if (const auto* v = get(k)) return *v;
        throw ConfigError("missing parameter " + prefix + "." + k + " for " + prefix + ".kind = " + *get("kind"));
    };
    BodySpec b;
    const std::string kind = get("kind") ? *get("kind") : "";
    if (kind == "circle") {
        b = BodySpec::make_circle(to_double(prefix + ".r", need("r")));
        if (!(b.r > 0.0)) throw ConfigError(prefix + ".r must be positive");
    } else if (kind == "ellipse") {
        b = BodySpec::make_ellipse(to_double(prefix + ".a", need("a")), to_double(prefix + ".b", need("b")));
        if (!(b.a > 0.0 && b.b > 0.0)) throw ConfigError(prefix + ".a and " + prefix + ".b must be positive");
    } else if (kind == "cosine") {
        b = BodySpec::make_cosine(to_list(prefix + ".coeffs", need("coeffs")));
    } else {
        throw ConfigError(prefix + ".kind must be one of circle | ellipse | cosine (got '" + kind + "')");
    }
    if (const auto* s = get("scale")) {
        b.scale = to_double(prefix + ".scale", *s);
        if (!(b.scale > 0.0)) throw ConfigError(prefix + ".scale must be positive");
    }
    return b;
}

} // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (!detail::known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = value;
        cfg.echo.emplace_back(key, value);
    }

    auto& f = cfg.flow;
    auto has = [&](const char* k) { return kv.count(k) > 0; };
    if (has("grid.N")) {
        const long n = detail::to_long("grid.N", kv["grid.N"]);
        if (n < 16 || n % 2 != 0 || n > (1L << 24)) throw ConfigError("grid.N must be even >= 16 (got " + kv["grid.N"] + ")");
        f.N = static_cast<int>(n);
    }
    if (has("grid.scheme")) {
        const auto& s = kv["grid.scheme"];
        if (s == "spectral") f.scheme = Scheme::spectral;
        else if (s == "central") f.scheme = Scheme::central;
        else throw ConfigError("grid.scheme must be spectral | central (got '" + s + "')");
    }

    if (!has("phi.family")) throw ConfigError("missing key phi.family (power | power-log)");
    cfg.phi_family = kv["phi.family"];
    if (cfg.phi_family != "power" && cfg.phi_family != "power-log")
        throw ConfigError("phi.family must be power | power-log (got '" + cfg.phi_family + "')");
    if (!has("phi.p")) throw ConfigError("missing parameter phi.p for phi.family = " + cfg.phi_family);
    const double p = detail::to_double("phi.p", kv["phi.p"]);
    if (cfg.phi_family == "power") {
        if (p == 0.0) throw ConfigError("phi.p must be nonzero for the power family");
        f.phi = make_power(p);
    } else {
        f.phi = make_power_log(p);
    }

    const std::string fkind = has("f.kind") ? kv["f.kind"] : "constant";
    if (fkind == "constant") {
        if (has("f.coeffs")) throw ConfigError("f.coeffs is only valid with f.kind = cosine");
        const double c = has("f.value") ? detail::to_double("f.value", kv["f.value"]) : 1.0;
        if (!(c > 0.0)) throw ConfigError("f.value must be positive");
        f.density = DensitySpec::constant(c);
    } else if (fkind == "cosine") {
        if (!has("f.coeffs")) throw ConfigError("missing parameter f.coeffs for f.kind = cosine");
        f.density = DensitySpec::cosine(detail::to_list("f.coeffs", kv["f.coeffs"]));
    } else {
        throw ConfigError("f.kind must be constant | cosine (got '" + fkind + "')");
    }

    if (!has("init.kind")) throw ConfigError("missing key init.kind (circle | ellipse | cosine)");
    f.init = detail::body_from(kv, "init");
    if (has("init2.kind")) cfg.init2 = detail::body_from(kv, "init2");

    if (has("time.dt_safety")) f.dt_safety = detail::to_double("time.dt_safety", kv["time.dt_safety"]);
    if (has("time.t_max")) f.t_max = detail::to_double("time.t_max", kv["time.t_max"]);
    if (has("stop.rhs_tol")) f.rhs_tol = detail::to_double("stop.rhs_tol", kv["stop.rhs_tol"]);
    if (has("stop.gamma_cv_tol")) f.gamma_cv_tol = detail::to_double("stop.gamma_cv_tol", kv["stop.gamma_cv_tol"]);
    if (has("stop.max_steps")) f.max_steps = detail::to_long("stop.max_steps", kv["stop.max_steps"]);
    if (has("output.every")) {
        const long e = detail::to_long("output.every", kv["output.every"]);
        if (e < 1 || e > 1000000000L) throw ConfigError("output.every must be >= 1");
        f.record_every = static_cast<int>(e);
    }
    if (has("output.dir")) cfg.output_dir = kv["output.dir"];
    if (has("output.snapshot_every")) {
        cfg.snapshot_every = detail::to_long("output.snapshot_every", kv["output.snapshot_every"]);
        if (cfg.snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
    }
    if (has("run.skip_hypothesis_check"))
        f.skip_hypothesis_check = detail::to_bool("run.skip_hypothesis_check", kv["run.skip_hypothesis_check"]);

    try {
        f.validate();
        const auto grid = make_grid(f.N);
        (void)f.density.sample(grid);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Number formatting

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr int snapshot_version = 1;

struct Snapshot {
    int version = snapshot_version;
    int N = 0;
    double t = 0.0;
    long step_index = 0;
    std::vector<double> h;
    std::vector<std::pair<std::string, std::string>> config_echo;

    FlowState to_state() const {
        return FlowState{t, step_index, SupportField(make_grid(N), h), 0.0, 0.0};
    }
};

inline void save_snapshot(const FlowState& state, const std::filesystem::path& path,
                          const std::vector<std::pair<std::string, std::string>>& echo = {}) {
    std::ostringstream out;
    out << "oaflow-snapshot\n";
    out << "format_version = " << snapshot_version << "\n";
    out << "N = " << state.field.size() << "\n";
    out << "t = " << hex(state.t) << "\n";
    out << "step_index = " << state.step_index << "\n";
    out << "h_begin\n";
    for (double x : state.field.h) out << hex(x) << "\n";
    out << "h_end\n";
    out << "config_begin\n";
    for (const auto& [k, v] : echo) out << k << " = " << v << "\n";
    out << "config_end\n";
    out << "end\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write snapshot '" + path.string() + "'");
    f << out.str();
    if (!f) throw IoError("write failed for snapshot '" + path.string() + "'");
}

inline Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot '" + path.string() + "'");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);

    std::size_t i = 0;
    auto next = [&]() -> const std::string& {
        if (i >= lines.size()) throw SnapshotError("snapshot '" + path.string() + "' is truncated");
        return lines[i++];
    };
    auto field = [&](const std::string& key) {
        const std::string& l = next();
        const std::string prefix = key + " = ";
        if (l.rfind(prefix, 0) != 0) throw SnapshotError("snapshot: expected '" + key + "', got '" + l + "'");
        return l.substr(prefix.size());
    };
    auto real = [&](const std::string& s) {
        if (s.empty()) throw SnapshotError("snapshot: empty number");
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || errno == ERANGE) throw SnapshotError("snapshot: bad number '" + s + "'");
        return v;
    };
    auto integer = [&](const std::string& s) {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw SnapshotError("snapshot: bad integer '" + s + "'");
        return v;
    };

    Snapshot s;
    if (next() != "oaflow-snapshot") throw SnapshotError("not an oaflow snapshot: '" + path.string() + "'");
    s.version = static_cast<int>(integer(field("format_version")));
    if (s.version != snapshot_version)
        throw SnapshotError("snapshot format version " + std::to_string(s.version) + " is not supported (expected " +
                            std::to_string(snapshot_version) + ")");
    s.N = static_cast<int>(integer(field("N")));
    s.t = real(field("t"));
    s.step_index = integer(field("step_index"));
    if (next() != "h_begin") throw SnapshotError("snapshot: missing h_begin");
    for (;;) {
        const std::string& l = next();
        if (l == "h_end") break;
        s.h.push_back(real(l));
    }
    if (s.h.size() != static_cast<std::size_t>(s.N))
        throw SnapshotError("snapshot: expected " + std::to_string(s.N) + " samples, found " +
                            std::to_string(s.h.size()));
    if (next() != "config_begin") throw SnapshotError("snapshot: missing config_begin");
    for (;;) {
        const std::string& l = next();
        if (l == "config_end") break;
        const auto eq = l.find(" = ");
        if (eq == std::string::npos) throw SnapshotError("snapshot: bad config line '" + l + "'");
        s.config_echo.emplace_back(l.substr(0, eq), l.substr(eq + 3));
    }
    if (next() != "end") throw SnapshotError("snapshot: missing end marker");
    try {
        (void)make_grid(s.N);
    } catch (const InvalidGrid& e) {
        throw SnapshotError(std::string("snapshot: ") + e.what());
    }
    if (evenness_defect(s.h) > 1e-12) throw SnapshotError("snapshot: support samples are not origin-symmetric");
    return s;
}

// ---------------------------------------------------------------------------
// CSV and summary

inline constexpr std::string_view diagnostics_header =
    "step,t,dt,eta,P,L,h_min,h_max,kappa_min,kappa_max,rhs_sup,gamma_mean,gamma_cv";
inline constexpr std::string_view shape_header = "theta,h,rho,kappa,gamma";

inline std::string diagnostics_row(const DiagnosticsRecord& r) {
    std::string s = std::to_string(r.step);
    for (double x : {r.t, r.dt, r.eta, r.P, r.L, r.h_min, r.h_max, r.kappa_min, r.kappa_max, r.rhs_sup,
                     r.gamma_mean, r.gamma_cv}) {
        s += ',';
        s += fmt(x);
    }
    return s;
}

inline std::string shape_csv(const SupportField& field, const DensityField& f, const OrliczFunction& phi,
                             Scheme scheme) {
    const auto g = support_to_geometry(field, scheme);
    const auto gamma = gamma_pointwise(field, f, phi, scheme);
    std::string out(shape_header);
    out += '\n';
    for (std::size_t i = 0; i < field.size(); ++i) {
        out += fmt(field.grid.theta(i)) + ',' + fmt(g.h[i]) + ',' + fmt(g.rho[i]) + ',' + fmt(g.kappa[i]) + ',' +
               fmt(gamma[i]) + '\n';
    }
    return out;
}

/// Reads the h column of a shape CSV. The samples must be origin-symmetric.
inline SupportField read_shape_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open shape file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != shape_header)
        throw IoError("shape file '" + path.string() + "' lacks the header '" + std::string(shape_header) + "'");
    std::vector<double> h;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw IoError("shape file: expected 5 columns in '" + line + "'");
        char* end = nullptr;
        const double v = std::strtod(cells[1].c_str(), &end);
        if (end == cells[1].c_str()) throw IoError("shape file: bad h value '" + cells[1] + "'");
        h.push_back(v);
    }
    const auto grid = make_grid(static_cast<int>(h.size()));
    if (evenness_defect(h) > 1e-12) throw NotEven("shape file: h has odd modes (not origin-symmetric)");
    return SupportField(grid, std::move(h));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

using Summary = std::vector<std::pair<std::string, std::string>>;

inline std::string summary_text(const Summary& s) {
    std::string out;
    for (const auto& [k, v] : s) out += k + "=" + v + "\n";
    return out;
}

} // namespace oaflow::io
