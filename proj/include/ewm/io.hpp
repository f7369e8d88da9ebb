#pragma once

// Plumbing shared by the command-line front end: key=value config files with
// sections and line-numbered errors, fixed-digit CSV emission (deterministic
// byte-for-byte for a given binary and precision mode), observer-series
// ingestion, crc32 run manifests, and output-root resolution.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "json.hpp"

#include "ewm/evolve.hpp"

namespace ewm {

inline constexpr const char* version_string = "1.0.0";

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// INI-style configuration: "[section]" headers, "key = value" lines, '#'
// comments. Keys are addressed as "section.key". Every parse failure names
// the offending line; typed getters mark keys used so unknown keys can be
// rejected afterwards.
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static Config parse(const std::string& text) {
        Config c;
        c.text_ = text;
        std::istringstream in(text);
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = raw;
            const std::size_t hash = s.find('#');
            if (hash != std::string::npos) s = s.substr(0, hash);
            s = detail::trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3)
                    throw Error("config", "line " + std::to_string(line) + ": malformed section header");
                section = detail::trim(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw Error("config", "line " + std::to_string(line) + ": empty section name");
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw Error("config", "line " + std::to_string(line) + ": expected key = value");
            std::string key = detail::trim(s.substr(0, eq));
            std::string val = detail::trim(s.substr(eq + 1));
            if (key.empty())
                throw Error("config", "line " + std::to_string(line) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            auto [it, fresh] = c.kv_.emplace(key, Entry{val, line, false});
            if (!fresh)
                throw Error("config", "line " + std::to_string(line) + ": duplicate key '" + key +
                                          "' (first at line " + std::to_string(it->second.line) + ")");
        }
        return c;
    }

    static Config load(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw Error("config", "cannot open config file " + p.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    const std::string& raw_text() const { return text_; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    // command-line override: replaces (or adds) a key with no source line
    void set_override(const std::string& key, const std::string& value) {
        kv_[key] = Entry{value, 0, false};
    }

    int line_of(const std::string& key) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? 0 : it->second.line;
    }

    std::string str(const std::string& key, const std::string& def = "") const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        it->second.used = true;
        return it->second.value;
    }

    std::string str_required(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw Error("config", "missing required key '" + key + "'");
        it->second.used = true;
        return it->second.value;
    }

    template <class R> R real(const std::string& key, const R& def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        it->second.used = true;
        return parse_entry<R>(key, it->second);
    }

    template <class R> R real_required(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw Error("config", "missing required key '" + key + "'");
        it->second.used = true;
        return parse_entry<R>(key, it->second);
    }

    long integer(const std::string& key, long def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        it->second.used = true;
        const std::string& v = it->second.value;
        std::size_t pos = 0;
        long out = 0;
        try {
            out = std::stol(v, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != v.size())
            throw Error("config", "line " + std::to_string(it->second.line) + ": '" + v +
                                      "' is not an integer (key '" + key + "')");
        return out;
    }

    bool flag(const std::string& key, bool def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        it->second.used = true;
        std::string v = it->second.value;
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw Error("config", "line " + std::to_string(it->second.line) + ": '" + it->second.value +
                                  "' is not a boolean (key '" + key + "')");
    }

    template <class R> std::vector<R> real_list(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return {};
        it->second.used = true;
        std::vector<R> out;
        std::istringstream in(it->second.value);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            if (item.empty()) continue;
            out.push_back(parse_entry<R>(key, Entry{item, it->second.line, true}));
        }
        return out;
    }

    // reject anything that was never consumed; catches typos with a line
    void reject_unknown() const {
        for (const auto& [key, e] : kv_)
            if (!e.used)
                throw Error("config", "line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }

private:
    template <class R> static R parse_entry(const std::string& key, const Entry& e) {
        if (e.value.empty())
            throw Error("config", "line " + std::to_string(e.line) + ": empty value for '" + key + "'");
        try {
            if constexpr (std::is_same_v<R, qreal>) {
                return qreal(e.value);
            } else {
                std::size_t pos = 0;
                R out = std::stod(e.value, &pos);
                if (pos != e.value.size()) throw std::invalid_argument("trailing garbage");
                return out;
            }
        } catch (const std::exception&) {
            throw Error("config", "line " + std::to_string(e.line) + ": '" + e.value +
                                      "' is not a number (key '" + key + "')");
        }
    }

    std::map<std::string, Entry> kv_;
    std::string text_;
};

// fixed-significant-digit CSV: one header line, then comma-joined columns
template <class R>
void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<const std::vector<R>*>& columns) {
    if (columns.empty()) throw Error("io", "write_csv needs at least one column");
    const std::size_t n = columns.front()->size();
    for (const auto* c : columns)
        if (c->size() != n) throw Error("io", "write_csv column length mismatch");
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
    out << header << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j)
            out << (j ? "," : "") << format_real((*columns[j])[i]);
        out << "\n";
    }
    if (!out) throw Error("io", "short write to " + path.string());
}

// observer CSV (t,value); '#' lines and one optional text header are skipped
template <class R>
TimeSeries<R> read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    TimeSeries<R> s;
    s.r_obs = R(0);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw Error("io", path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        const std::string f0 = detail::trim(t.substr(0, comma));
        const std::string f1 = detail::trim(t.substr(comma + 1));
        if (!f0.empty() && (std::isalpha(static_cast<unsigned char>(f0.front())))) {
            if (s.times.empty()) continue;  // header line
            throw Error("io", path.string() + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        try {
            s.times.push_back(parse_real<R>(f0));
            s.values.push_back(parse_real<R>(f1));
        } catch (const std::exception&) {
            throw Error("io", path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    if (s.times.size() < 2) throw Error("io", path.string() + ": fewer than two data rows");
    return s;
}

inline std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + path.string() + " for checksum");
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
    return static_cast<std::uint32_t>(crc);
}

struct RunManifest {
    std::string command;
    std::string config_echo;
    std::string version = version_string;
    std::string precision;
    std::string started, finished;  // UTC
    std::vector<std::string> files;  // names relative to the output directory
};

// Writes manifest.json into dir. Every produced file appears with its crc32;
// the manifest itself is listed last, necessarily without a checksum.
inline void write_manifest(const std::filesystem::path& dir, const RunManifest& man) {
    nlohmann::json j;
    j["command"] = man.command;
    j["config"] = man.config_echo;
    j["version"] = man.version;
    j["precision"] = man.precision;
    j["started"] = man.started;
    j["finished"] = man.finished;
    j["files"] = nlohmann::json::array();
    for (const auto& name : man.files) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "%08x", file_crc32(dir / name));
        j["files"].push_back({{"name", name}, {"crc32", hex}});
    }
    j["files"].push_back({{"name", "manifest.json"}});
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error("io", "cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << "\n";
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::filesystem::path output_root() {
    const char* e = std::getenv("EWM_OUTPUT_ROOT");
    if (e && *e) return std::filesystem::path(e);
    return std::filesystem::current_path();
}

inline std::filesystem::path resolve_out(const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : output_root() / q;
}

enum class DataKind { kicked, polynomial, file };

// everything needed to launch an evolution run, lifted out of a Config with
// per-key line attribution for every validation failure
template <class R> struct RunSpec {
    EquivariantIndex idx{1};
    int N = 1;
    RadialGrid<R> grid{R(1) / R(2), 9};
    EvolveMode mode = EvolveMode::nonlinear;
    R t_end{}, cfl = R(1) / R(2), dt{}, ko_eps = R(1) / R(10), dt_sample = R(1) / R(10);
    std::vector<R> observers, snapshot_times;
    bool track_support = false;
    R support_margin = R(12);
    DataKind data = DataKind::kicked;
    R eps = R(8) / R(10), r0 = R(3) / R(2), sigma = R(1) / R(10);
    std::string data_file;

    EvolutionConfig<R> evolution_config() const {
        EvolutionConfig<R> c(idx, N, grid, t_end);
        c.mode = mode;
        c.cfl = cfl;
        c.dt = dt;
        c.ko_eps = ko_eps;
        c.dt_sample = dt_sample;
        c.observers = observers;
        c.snapshot_times = snapshot_times;
        c.track_support = track_support;
        c.support_margin = support_margin;
        return c;
    }
};

template <class R>
RunSpec<R> run_spec_from(const Config& c) {
    RunSpec<R> s;
    auto fail = [&](const std::string& key, const std::string& msg) -> void {
        const int ln = c.line_of(key);
        throw Error("config", (ln ? "line " + std::to_string(ln) + ": " : "") + msg);
    };

    const long ell = c.integer("run.ell", 1);
    if (ell < 1) fail("run.ell", "ell must be >= 1");
    s.idx = EquivariantIndex(static_cast<int>(ell));
    s.N = static_cast<int>(c.integer("run.N", 1));
    if (s.N < 0) fail("run.N", "N must be >= 0");

    const R h = c.real_required<R>("grid.h");
    const R rmax = c.real_required<R>("grid.r_max");
    if (!(h > R(0))) fail("grid.h", "grid spacing must be positive");
    if (!(rmax > R(1))) fail("grid.r_max", "r_max must exceed 1");
    s.grid = RadialGrid<R>::with_extent(rmax, h);

    s.t_end = c.real_required<R>("run.t_end");
    if (!(s.t_end > R(0))) fail("run.t_end", "t_end must be positive");
    s.cfl = c.real<R>("run.cfl", s.cfl);
    if (!(s.cfl > R(0)) || s.cfl > R(1)) fail("run.cfl", "cfl must lie in (0, 1]");
    s.dt = c.real<R>("run.dt", R(0));
    s.ko_eps = c.real<R>("run.ko_eps", s.ko_eps);
    if (s.ko_eps < R(0) || !(s.ko_eps < R(1))) fail("run.ko_eps", "ko_eps must lie in [0, 1)");
    s.dt_sample = c.real<R>("run.dt_sample", s.dt_sample);
    if (!(s.dt_sample > R(0))) fail("run.dt_sample", "dt_sample must be positive");
    s.track_support = c.flag("run.track_support", false);
    s.support_margin = c.real<R>("run.support_margin", s.support_margin);

    const std::string mode = c.str("run.mode", "nonlinear");
    if (mode == "nonlinear") s.mode = EvolveMode::nonlinear;
    else if (mode == "linearized") s.mode = EvolveMode::linearized;
    else fail("run.mode", "mode must be nonlinear or linearized, got '" + mode + "'");

    s.observers = c.real_list<R>("output.observers");
    for (const R& r : s.observers) {
        if (r < R(1) || r > s.grid.r_max())
            fail("output.observers", "observer at r = " + format_real(r, 6) + " is outside the grid");
    }
    R obs_max(0);
    for (const R& r : s.observers) obs_max = std::max(obs_max, r);
    if (s.grid.r_max() < R(1) + R(2) * s.t_end + obs_max)
        fail("grid.r_max", "r_max must be at least 1 + 2 t_end + max observer radius = " +
                               format_real(R(1) + R(2) * s.t_end + obs_max, 6) +
                               " to keep the outer boundary silent");
    s.snapshot_times = c.real_list<R>("output.snapshots");
    for (const R& t : s.snapshot_times)
        if (t < R(0) || t > s.t_end + s.dt_sample)
            fail("output.snapshots", "snapshot time " + format_real(t, 6) + " is outside the run");

    const std::string data = c.str("data.type", "kicked");
    if (data == "kicked") s.data = DataKind::kicked;
    else if (data == "polynomial") s.data = DataKind::polynomial;
    else if (data == "file") s.data = DataKind::file;
    else fail("data.type", "data type must be kicked, polynomial or file, got '" + data + "'");
    s.eps = c.real<R>("data.eps", s.eps);
    s.r0 = c.real<R>("data.r0", s.r0);
    s.sigma = c.real<R>("data.sigma", s.sigma);
    if (s.data == DataKind::kicked && !(s.sigma > R(0)))
        fail("data.sigma", "kick width must be positive");
    s.data_file = c.str("data.file", "");
    if (s.data == DataKind::file && s.data_file.empty())
        fail("data.type", "data type 'file' needs data.file");
    if (s.data == DataKind::polynomial && s.mode == EvolveMode::linearized)
        fail("data.type", "polynomial data describes a full field, not a linear perturbation");

    c.reject_unknown();
    try {
        s.evolution_config().validate();
    } catch (const Error& e) {
        throw Error("config", e.what());
    }
    return s;
}

// initial-state CSV (r,u,v); rows must match the grid nodes
template <class R>
FieldState<R> read_state_csv(const std::filesystem::path& path, const RadialGrid<R>& grid) {
    using std::abs;
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    FieldState<R> s(grid.n);
    std::string line;
    int lineno = 0;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#' || std::isalpha(static_cast<unsigned char>(t.front())))
            continue;
        std::istringstream row(t);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(row, f, ',')) fields.push_back(detail::trim(f));
        if (fields.size() != 3)
            throw Error("io", path.string() + ":" + std::to_string(lineno) + ": expected r,u,v");
        if (i >= grid.n) throw Error("io", path.string() + ": more rows than grid nodes");
        const R r = parse_real<R>(fields[0]);
        if (abs(r - grid.r(i)) > R(1e-9) * (R(1) + abs(r)))
            throw Error("io", path.string() + ":" + std::to_string(lineno) +
                                  ": node mismatch, expected r = " + format_real(grid.r(i), 9));
        s.u[i] = parse_real<R>(fields[1]);
        s.v[i] = parse_real<R>(fields[2]);
        ++i;
    }
    if (i != grid.n) throw Error("io", path.string() + ": fewer rows than grid nodes");
    return s;
}

}  // namespace ewm
