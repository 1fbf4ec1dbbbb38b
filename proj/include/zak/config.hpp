#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "zak/evolve.hpp"
#include "zak/grid.hpp"
#include "zak/profiles.hpp"
#include "zak/profiles2d.hpp"
#include "zak/state.hpp"

namespace zak {

// Flat "key = value" configuration with [section] headers. Unknown sections or
// keys are rejected so that typos cannot silently change a run.
class Config {
public:
    static Config parse(const std::string& text) {
        Config cfg;
        cfg.canonical_.clear();
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("bad section header at line " +
                                                          std::to_string(lineno));
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value at line " + std::to_string(lineno));
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty() || section.empty())
                throw ConfigError("key outside a section at line " + std::to_string(lineno));
            const std::string full = section + "." + key;
            if (cfg.values_.count(full)) throw ConfigError("duplicate key: " + full);
            cfg.values_[full] = val;
        }
        cfg.rebuild_canonical();
        return cfg;
    }

    void set(const std::string& full_key, const std::string& value) {
        values_[full_key] = value;
        rebuild_canonical();
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            if (fallback.empty()) throw ConfigError("missing config key: " + key);
            return fallback;
        }
        mark_used(key);
        return it->second;
    }
    double get_double(const std::string& key) const {
        return parse_double(key, get_string(key));
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        mark_used(key);
        return parse_double(key, it->second);
    }
    long get_int(const std::string& key) const {
        const double d = get_double(key);
        return static_cast<long>(d);
    }
    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        mark_used(key);
        return static_cast<long>(parse_double(key, it->second));
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        mark_used(key);
        const std::string& v = it->second;
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw ConfigError("boolean expected for " + key);
    }
    std::vector<double> get_list(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        mark_used(key);
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) out.push_back(parse_double(key, tok));
        }
        return out;
    }

    void reject_unknown_keys() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw ConfigError("unknown config key: " + k);
    }

    const std::string& canonical_text() const { return canonical_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
        }
    }
    void rebuild_canonical() {
        canonical_.clear();
        for (const auto& [k, v] : values_) canonical_ += k + "=" + v + "\n";
    }
    void mark_used(const std::string& k) const { used_.insert(k); }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
    std::string canonical_;
};

// Everything needed to reproduce a simulation.
struct SimConfig {
    GridPtr grid;
    EvolveOptions evolve;
    std::string ic_family;
    // self-similar families
    double a = 0.0;
    int k = 1;
    double t_star = 1.0;
    double theta = 0.0;
    double profile_rmax = 40.0;
    std::size_t profile_points = 3200;
    // gaussian families
    double amplitude = 1.0;
    double width = 1.0;
    bool density_follows = true;
    std::vector<double> kphase;
    std::string prefix = "run";
    std::string canonical;
};

inline SimConfig build_sim_config(const Config& cfg) {
    SimConfig sc;
    const std::string kind = cfg.get_string("grid.kind");
    const int dim = static_cast<int>(cfg.get_int("grid.dim"));
    const double extent = cfg.get_double("grid.extent");
    const auto points = static_cast<std::size_t>(cfg.get_int("grid.points"));
    if (kind == "radial")
        sc.grid = Grid::radial(dim, extent, points);
    else if (kind == "periodic")
        sc.grid = Grid::periodic(dim, extent, points);
    else
        throw ConfigError("grid.kind must be radial or periodic");

    sc.evolve.dt = cfg.get_double("time.dt");
    sc.evolve.t_end = cfg.get_double("time.t_end");
    sc.evolve.sample_every = static_cast<std::size_t>(cfg.get_int("time.sample_every", 100));
    sc.evolve.snapshot_every = static_cast<std::size_t>(cfg.get_int("time.snapshot_every", 0));
    if (sc.evolve.dt <= 0) throw ConfigError("time.dt must be positive");
    if (sc.evolve.t_end <= 0) throw ConfigError("time.t_end must be positive");
    if (sc.evolve.sample_every == 0) throw ConfigError("time.sample_every must be positive");

    sc.evolve.blowup_factor = cfg.get_double("stop.blowup_factor", 1e3);
    sc.evolve.resolved_scale_check = cfg.get_bool("stop.resolved_scale_check", true);
    if (sc.evolve.blowup_factor <= 1.0)
        throw ConfigError("stop.blowup_factor must exceed 1 (relative to the initial state)");

    sc.evolve.sobolev_ell = cfg.get_list("diagnostics.sobolev_ell");
    sc.evolve.homogeneous_pair = cfg.get_bool("diagnostics.homogeneous_pair", false);
    sc.evolve.ym_scales = cfg.get_list("diagnostics.ym_scales");
    sc.evolve.variance = cfg.get_bool("diagnostics.variance", false);

    sc.ic_family = cfg.get_string("ic.family");
    if (sc.ic_family == "selfsim2d") {
        sc.a = cfg.get_double("ic.a");
        sc.t_star = cfg.get_double("ic.t_star");
        sc.theta = cfg.get_double("ic.theta", 0.0);
        sc.profile_rmax = cfg.get_double("ic.profile_rmax", 40.0);
        sc.profile_points = static_cast<std::size_t>(cfg.get_int("ic.profile_points", 3200));
    } else if (sc.ic_family == "selfsim3d") {
        sc.k = static_cast<int>(cfg.get_int("ic.k", 1));
        sc.t_star = cfg.get_double("ic.t_star");
    } else if (sc.ic_family == "gaussian" || sc.ic_family == "gaussian_periodic") {
        sc.amplitude = cfg.get_double("ic.amplitude");
        sc.width = cfg.get_double("ic.width");
        sc.density_follows = cfg.get_bool("ic.density_follows", true);
        if (sc.ic_family == "gaussian_periodic") {
            sc.kphase = {cfg.get_double("ic.kx", 0.0), cfg.get_double("ic.ky", 0.0),
                         cfg.get_double("ic.kz", 0.0)};
        }
    } else if (sc.ic_family == "zero") {
        // nothing to read
    } else {
        throw ConfigError("unknown ic.family: " + sc.ic_family);
    }

    sc.prefix = cfg.get_string("output.prefix", "run");
    cfg.reject_unknown_keys();
    sc.canonical = cfg.canonical_text();
    return sc;
}

inline WaveState build_initial_state(const SimConfig& sc) {
    if (sc.ic_family == "selfsim2d") {
        Family2d fam(sc.profile_rmax, sc.profile_points);
        ProfileSolution prof = fam.solve(sc.a);
        return self_similar_state_2d(prof, sc.a, 0.0, sc.t_star, sc.theta, sc.grid);
    }
    if (sc.ic_family == "selfsim3d") {
        ProfileSolution prof = find_profile_3d(sc.k);
        return self_similar_state_3d(prof, 0.0, sc.t_star, sc.grid);
    }
    if (sc.ic_family == "gaussian")
        return gaussian_radial_state(sc.grid, sc.amplitude, sc.width, sc.density_follows);
    if (sc.ic_family == "gaussian_periodic")
        return gaussian_periodic_state(sc.grid, sc.amplitude, sc.width, sc.kphase,
                                       sc.density_follows);
    return WaveState(sc.grid);  // zero
}

}  // namespace zak
