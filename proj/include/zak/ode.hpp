#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "zak/grid.hpp"

namespace zak {

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 1e-4;
    double h_min = 1e-14;
    double h_max = 0.1;
};

// Adaptive Dormand-Prince 5(4). The observer is called after every accepted
// step with (x, y) and may return false to stop the integration early.
// Step sizes are clamped so the trajectory lands exactly on x_end.
template <std::size_t N, class RHS, class Observer>
double integrate_ode(RHS&& rhs, std::array<double, N>& y, double x0, double x_end,
                     const OdeOptions& opts, Observer&& observer) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double x = x0;
    double h = std::min(opts.h_init, opts.h_max);
    const double dir = (x_end >= x0) ? 1.0 : -1.0;
    h *= dir;

    std::array<double, N> k1, k2, k3, k4, k5, k6, k7, yt, ynew;
    rhs(x, y, k1);

    while (dir * (x_end - x) > 1e-15 * std::max(std::abs(x), 1.0)) {
        if (dir * (x + h - x_end) > 0) h = x_end - x;
        if (std::abs(h) < opts.h_min)
            throw Error("ode step size underflow near x = " + std::to_string(x));

        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        rhs(x + c2 * h, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(x + c3 * h, yt, k3);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(x + c4 * h, yt, k4);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(x + c5 * h, yt, k5);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(x + h, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(x + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                   e7 * k7[i]);
            const double sc =
                opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(ei) / sc);
        }

        if (err <= 1.0 || std::abs(h) <= opts.h_min * 2) {
            x += h;
            y = ynew;
            k1 = k7;  // FSAL
            if (!observer(x, y)) return x;
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::min(5.0, std::max(0.2, fac));
        h *= fac;
        if (std::abs(h) > opts.h_max) h = dir * opts.h_max;
    }
    return x;
}

}  // namespace zak
