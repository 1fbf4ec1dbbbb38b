#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zak/evolve.hpp"
#include "zak/profiles.hpp"
#include "zak/series.hpp"
#include "zak/state.hpp"

namespace zak {

// shortest round-trippable decimal representation
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(s)));
    return buf;
}

inline void write_series_csv(const std::string& path, const DiagnosticSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path);
    for (std::size_t i = 0; i < series.columns.size(); ++i) {
        if (i) out << ',';
        out << series.columns[i];
    }
    out << '\n';
    for (const auto& row : series.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

inline DiagnosticSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    DiagnosticSeries s;
    std::string line;
    if (!std::getline(in, line)) throw Error("empty series file: " + path);
    std::istringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) s.columns.push_back(tok);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != s.columns.size()) throw Error("ragged series row in " + path);
        s.rows.push_back(std::move(row));
    }
    return s;
}

inline const char* family_name(ProfileFamily f) {
    switch (f) {
        case ProfileFamily::ground_state_2d: return "ground2d";
        case ProfileFamily::family_2d: return "family2d";
        default: return "ladder3d";
    }
}

// Two-column (eta, value) CSV per field with a metadata comment line.
inline void write_profile_csv(const std::string& path, const ProfileSolution& sol,
                              const std::vector<double>& values, const std::string& value_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path);
    out << "# family=" << family_name(sol.family) << ",parameter=" << format_double(sol.parameter)
        << ",P0=" << format_double(sol.P0) << ",N0=" << format_double(sol.N0)
        << ",p_decay_rate=" << format_double(sol.p_decay_rate)
        << ",n_tail_exponent=" << format_double(sol.n_tail_exponent) << '\n';
    out << "eta," << value_name << '\n';
    for (std::size_t i = 0; i < sol.eta.size(); ++i)
        out << format_double(sol.eta[i]) << ',' << format_double(values[i]) << '\n';
}

inline void write_snapshot(const std::string& dir, std::size_t index, const WaveState& s,
                           const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%05zu", index);
    const std::string base = dir + "/snap_" + tag;

    {
        std::ofstream out(base + "_psi.csv", std::ios::binary);
        out << "node,re,im\n";
        for (std::size_t j = 0; j < s.psi.size(); ++j)
            out << j << ',' << format_double(s.psi.v[j].real()) << ','
                << format_double(s.psi.v[j].imag()) << '\n';
    }
    for (const auto& [name, field] : {std::pair<const char*, const RField*>{"n", &s.n},
                                      std::pair<const char*, const RField*>{"nt", &s.nt}}) {
        std::ofstream out(base + "_" + name + ".csv", std::ios::binary);
        out << "node,value\n";
        for (std::size_t j = 0; j < field->size(); ++j)
            out << j << ',' << format_double(field->v[j]) << '\n';
    }
    nlohmann::json meta;
    meta["t"] = s.t;
    meta["config_hash"] = config_hash;
    const Grid& g = *s.grid();
    meta["grid"] = {{"kind", g.kind() == GridKind::radial ? "radial" : "periodic"},
                    {"dim", g.dim()},
                    {"extent", g.extent()},
                    {"points", g.points_per_axis()}};
    std::ofstream meta_out(base + "_meta.json", std::ios::binary);
    meta_out << meta.dump(2) << '\n';
}

}  // namespace zak
