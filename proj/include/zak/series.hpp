#pragma once

#include <string>
#include <vector>

#include "zak/grid.hpp"

namespace zak {

struct DiagnosticSeries {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
    std::vector<double> column(const std::string& name) const {
        const int idx = column_index(name);
        if (idx < 0) throw Error("diagnostic column not found: " + name);
        std::vector<double> out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            out[i] = rows[i][static_cast<std::size_t>(idx)];
        return out;
    }
    std::vector<double> times() const { return column("t"); }
};

struct BlowupFit {
    double t_star = 0.0;
    double exponent = 0.0;   // from the log-log fit against (t* - t)
    double amplitude = 0.0;  // c in 1/g = c (t* - t)
    double residual = 0.0;   // relative rms residual of the linear fit
    double window_lo = 0.0, window_hi = 0.0;
};

}  // namespace zak
