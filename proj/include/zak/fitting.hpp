#pragma once

#include <cmath>
#include <vector>

#include "zak/grid.hpp"

namespace zak {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of y - (intercept + slope x)
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw FitError("fit_line: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw FitError("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy * sxx - sx * sxy) / det;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

// slope of log|y| against log x over the samples with |y| > floor
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                          double floor = 0.0) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0 && std::abs(y[i]) > floor) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    if (lx.size() < 2) throw FitError("fit_loglog: not enough usable samples");
    return fit_line(lx, ly);
}

// slope of log|y| against x (exponential decay/growth rate)
inline LineFit fit_semilog(const std::vector<double>& x, const std::vector<double>& y,
                           double floor = 0.0) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(y[i]) > floor) {
            lx.push_back(x[i]);
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    if (lx.size() < 2) throw FitError("fit_semilog: not enough usable samples");
    return fit_line(lx, ly);
}

struct DecayFit {
    double exp_rate = 0.0;    // delta in  y ~ C exp(-delta x)
    double alg_exponent = 0.0;  // p in  y ~ C x^p
    double window_lo = 0.0, window_hi = 0.0;
};

}  // namespace zak
