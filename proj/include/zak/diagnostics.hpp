#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "zak/fitting.hpp"
#include "zak/operators.hpp"
#include "zak/series.hpp"
#include "zak/state.hpp"

namespace zak {

// v = -grad(InvLaplacian n_t); radial grids return the radial component only.
inline RField recover_velocity(const RField& nt) {
    const Grid& g = *nt.grid;
    RField u = invert_laplacian(nt, g.dim());
    if (g.kind() == GridKind::radial) {
        RField v = radial_derivative(u);
        for (auto& x : v.v) x = -x;
        return v;
    }
    throw Error("recover_velocity: use recover_velocity_periodic for periodic grids");
}

inline std::vector<RField> recover_velocity_periodic(const RField& nt) {
    const Grid& g = *nt.grid;
    RField u = invert_laplacian(nt, g.dim());
    std::vector<RField> v;
    for (int ax = 0; ax < g.dim(); ++ax) {
        RField comp = periodic_derivative(u, ax);
        for (auto& x : comp.v) x = -x;
        v.push_back(std::move(comp));
    }
    return v;
}

// H = int ( |grad psi|^2 + n |psi|^2 + 1/2 |v|^2 + 1/2 n^2 ) dx
inline double hamiltonian(const WaveState& s) {
    const Grid& g = *s.psi.grid;
    double h = grad_norm_sq(s.psi);
    RField dens(s.psi.grid);
    for (std::size_t i = 0; i < dens.size(); ++i)
        dens.v[i] = s.n.v[i] * std::norm(s.psi.v[i]) + 0.5 * s.n.v[i] * s.n.v[i];
    h += quadrature(dens);
    if (g.kind() == GridKind::radial) {
        RField v = recover_velocity(s.nt);
        h += 0.5 * l2_norm_sq(v);
    } else {
        auto v = recover_velocity_periodic(s.nt);
        for (const auto& comp : v) h += 0.5 * l2_norm_sq(comp);
    }
    return h;
}

// Linear momentum P = int ( (i/2)(psi grad psi* - psi* grad psi) + n v ) dx and
// angular momentum M (scalar, 2D). Radial symmetry forces both to vanish.
struct Momenta {
    std::array<double, 3> linear = {0, 0, 0};
    double angular = 0.0;
};

inline Momenta momenta(const WaveState& s) {
    const Grid& g = *s.psi.grid;
    Momenta out;
    if (g.kind() == GridKind::radial) return out;  // exactly zero by symmetry
    auto v = recover_velocity_periodic(s.nt);
    const std::size_t m = g.points_per_axis();
    const double h = g.h();
    const double L = g.extent();
    const int d = g.dim();
    std::vector<RField> dens(static_cast<std::size_t>(d), RField(s.psi.grid));
    for (int ax = 0; ax < d; ++ax) {
        CField dpsi = periodic_derivative(s.psi, ax);
        for (std::size_t i = 0; i < dpsi.size(); ++i) {
            // (i/2)(psi dpsi* - psi* dpsi) = Im(psi* dpsi)
            dens[static_cast<std::size_t>(ax)].v[i] =
                std::imag(std::conj(s.psi.v[i]) * dpsi.v[i]) + s.n.v[i] * v[static_cast<std::size_t>(ax)].v[i];
        }
        out.linear[static_cast<std::size_t>(ax)] = quadrature(dens[static_cast<std::size_t>(ax)]);
    }
    if (d == 2) {
        RField ang(s.psi.grid);
        for (std::size_t idx = 0; idx < ang.size(); ++idx) {
            const std::size_t iy = idx % m;
            const std::size_t ix = idx / m;
            const double x = static_cast<double>(ix) * h - 0.5 * L;
            const double y = static_cast<double>(iy) * h - 0.5 * L;
            ang.v[idx] = x * dens[1].v[idx] - y * dens[0].v[idx];
        }
        out.angular = quadrature(ang);
    }
    return out;
}

// weight p(r) = 2 (sqrt(1+r^2) - 1): behaves like r^2 near 0 and 2r at infinity
inline double variance_weight_deriv(double r, double m) {
    // d/dr of m^2 p(r/m) = 2 r / sqrt(1 + (r/m)^2)
    const double u = r / m;
    return 2.0 * r / std::sqrt(1.0 + u * u);
}

// y_m = -Im int (grad p_m . grad psi) psi* dx - int (grad p_m . v) n dx,
// the time derivative of the modified variance (see docs: the density term is
// real and enters with the sign coming from y = -dU/dt).
inline double modified_variance_rate(const WaveState& s, double m) {
    const Grid& g = *s.psi.grid;
    if (g.kind() != GridKind::radial) throw Error("modified_variance_rate: radial states only");
    CField dpsi = radial_derivative(s.psi);
    RField v = recover_velocity(s.nt);
    RField dens(s.psi.grid);
    const auto& r = g.radii();
    for (std::size_t j = 0; j < dens.size(); ++j) {
        const double pm = variance_weight_deriv(r[j], m);
        dens.v[j] = -pm * std::imag(std::conj(s.psi.v[j]) * dpsi.v[j]) - pm * v.v[j] * s.n.v[j];
    }
    return quadrature(dens);
}

// sup_{|x|>R} |f|^2 / ( R^{-d+1} |grad f|_{L2(|x|>R)} |f|_{L2(|x|>R)} )
inline double strauss_ratio(const RField& f, double r_cut) {
    const Grid& g = *f.grid;
    if (g.kind() != GridKind::radial || g.dim() < 2) throw Error("strauss_ratio: radial, d >= 2");
    RField df = radial_derivative(f);
    const auto& r = g.radii();
    double sup2 = 0.0;
    RField f2(f.grid), df2(f.grid);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const bool outside = r[j] > r_cut;
        if (outside) sup2 = std::max(sup2, f.v[j] * f.v[j]);
        f2.v[j] = outside ? f.v[j] * f.v[j] : 0.0;
        df2.v[j] = outside ? df.v[j] * df.v[j] : 0.0;
    }
    const double denom = std::pow(r_cut, 1 - g.dim()) * std::sqrt(quadrature(df2)) *
                         std::sqrt(quadrature(f2));
    if (denom == 0.0) {
        if (sup2 == 0.0) return 0.0;
        throw Error("strauss_ratio: vanishing denominator");
    }
    return sup2 / denom;
}

// Symbol matrix M_d = (1-alpha) xi xi^T + alpha |xi|^2 I of the vectorial
// dispersion operator; returns its eigenvalues (ascending) and whether
// |xi|^2 I <= M_d <= alpha |xi|^2 I holds.
struct SymbolCheck {
    std::vector<double> eigenvalues;
    bool bounds_ok = false;
};

inline SymbolCheck vector_symbol_check(const std::vector<double>& xi, double alpha) {
    const std::size_t d = xi.size();
    if (d != 2 && d != 3) throw Error("vector_symbol_check: xi must have 2 or 3 components");
    double xi2 = 0.0;
    for (double c : xi) xi2 += c * c;
    if (xi2 == 0.0) throw Error("vector_symbol_check: xi = 0");
    Eigen::MatrixXd M(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            M(i, j) = (1.0 - alpha) * xi[i] * xi[j] + (i == j ? alpha * xi2 : 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    SymbolCheck out;
    out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + d);
    const double lo = out.eigenvalues.front();
    const double hi = out.eigenvalues.back();
    out.bounds_ok = lo >= xi2 * (1.0 - 1e-12) && hi <= alpha * xi2 * (1.0 + 1e-12);
    return out;
}

// ---------------------------------------------------------------------------
// Blowup-rate fits
// ---------------------------------------------------------------------------

// Least-squares fit of 1/g to c (t* - t) over the last decade of growth of g,
// plus a log-log exponent against the fitted t*.
inline BlowupFit estimate_tstar(const std::vector<double>& t, const std::vector<double>& g) {
    if (t.size() != g.size() || t.size() < 5) throw FitError("estimate_tstar: need >= 5 samples");
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, x);
    std::vector<double> tw, gw;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (g[i] >= 0.1 * gmax) {
            tw.push_back(t[i]);
            gw.push_back(g[i]);
        }
    if (tw.size() < 5) throw FitError("estimate_tstar: fit window too short");
    for (std::size_t i = 1; i < gw.size(); ++i)
        if (gw[i] <= gw[i - 1] * (1.0 - 1e-3))
            throw FitError("estimate_tstar: non-monotone growth in the fit window");

    std::vector<double> y(gw.size());
    for (std::size_t i = 0; i < gw.size(); ++i) y[i] = 1.0 / gw[i];
    LineFit lf = fit_line(tw, y);  // y = intercept + slope t,  slope = -c
    if (lf.slope >= 0) throw FitError("estimate_tstar: series not blowing up");
    BlowupFit fit;
    fit.amplitude = -lf.slope;
    fit.t_star = -lf.intercept / lf.slope;
    fit.window_lo = tw.front();
    fit.window_hi = tw.back();
    double yscale = 0.0;
    for (double v : y) yscale = std::max(yscale, std::abs(v));
    fit.residual = lf.residual / std::max(yscale, 1e-300);

    std::vector<double> tau(tw.size());
    bool ok = true;
    for (std::size_t i = 0; i < tw.size(); ++i) {
        tau[i] = fit.t_star - tw[i];
        if (tau[i] <= 0) ok = false;
    }
    if (ok) {
        LineFit le = fit_loglog(tau, gw);
        fit.exponent = -le.slope;
    } else {
        fit.exponent = 1.0;
    }
    return fit;
}

inline BlowupFit estimate_tstar(const DiagnosticSeries& series,
                                const std::string& column = "grad_psi_l2") {
    return estimate_tstar(series.times(), series.column(column));
}

// Residual of the variance identity
//   d2V/dt2 = d H - (d-2) |grad psi|^2 - (d-1) |v|^2
// on a window of stored states with uniform sample spacing. V(t) is
// (1/4) int |x|^2 |psi|^2 + int_0^t int (x.v) n, the time integral taken with
// the trapezoid rule. Returns the max relative residual over interior samples.
struct VarianceCheck {
    double max_relative_residual = 0.0;
    std::vector<double> d2v;  // centered second differences at interior samples
    std::vector<double> rhs;
};

inline VarianceCheck variance_identity_residual(const std::vector<WaveState>& states) {
    if (states.size() < 5) throw Error("variance_identity_residual: need >= 5 snapshots");
    const Grid& g = *states.front().psi.grid;
    if (g.kind() != GridKind::radial) throw Error("variance identity: radial states only");
    const int d = g.dim();
    const std::size_t n = states.size();
    const double dt = states[1].t - states[0].t;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(states[i].t - states[i - 1].t - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw Error("variance identity: snapshots must be uniformly spaced");

    std::vector<double> V(n), I(n), rhs(n);
    const auto& r = g.radii();
    for (std::size_t i = 0; i < n; ++i) {
        RField m2(states[i].psi.grid);
        for (std::size_t j = 0; j < m2.size(); ++j) m2.v[j] = std::norm(states[i].psi.v[j]);
        const double quarter = 0.25 * quadrature(m2, 2);
        RField v = recover_velocity(states[i].nt);
        RField xvn(states[i].psi.grid);
        for (std::size_t j = 0; j < xvn.size(); ++j) xvn.v[j] = r[j] * v.v[j] * states[i].n.v[j];
        I[i] = quadrature(xvn);
        V[i] = quarter;  // integral part added below
        rhs[i] = d * hamiltonian(states[i]) - (d - 2) * grad_norm_sq(states[i].psi) -
                 (d - 1) * l2_norm_sq(v);
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        acc += 0.5 * (I[i - 1] + I[i]) * dt;
        V[i] += acc;
    }

    VarianceCheck out;
    double scale = 0.0;
    for (double x : rhs) scale = std::max(scale, std::abs(x));
    scale = std::max(scale, 1e-300);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d2 = (V[i + 1] - 2.0 * V[i] + V[i - 1]) / (dt * dt);
        out.d2v.push_back(d2);
        out.rhs.push_back(rhs[i]);
        out.max_relative_residual = std::max(out.max_relative_residual, std::abs(d2 - rhs[i]) / scale);
    }
    return out;
}

// Fitted growth exponent of the norm triple
//   |psi|_{H^{l+1/2}} + |n|_{H^l} + |nt|_{H^{l-1}}
// against the theoretical lower bound theta_l = (4 - d + 2l)/4.
struct RateBoundReport {
    double theta_fit = 0.0;
    double theta_bound = 0.0;
    double t_star = 0.0;
    bool pass = false;
};

inline RateBoundReport rate_bound_check(const DiagnosticSeries& series, int d, double ell,
                                        double t_star) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", ell);
    const std::string suffix = buf;
    auto t = series.times();
    auto a = series.column("psi_h" + suffix);
    auto b = series.column("n_h" + suffix);
    auto c = series.column("nt_h" + suffix);
    std::vector<double> triple(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) triple[i] = a[i] + b[i] + c[i];

    double gmax = 0.0;
    for (double x : triple) gmax = std::max(gmax, x);
    std::vector<double> tau, val;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (triple[i] >= 0.1 * gmax && t_star - t[i] > 0) {
            tau.push_back(t_star - t[i]);
            val.push_back(triple[i]);
        }
    if (tau.size() < 4) throw FitError("rate_bound_check: fit window too short");
    RateBoundReport rep;
    rep.t_star = t_star;
    rep.theta_fit = -fit_loglog(tau, val).slope;
    rep.theta_bound = 0.25 * (4.0 - d + 2.0 * ell);
    rep.pass = rep.theta_fit >= rep.theta_bound - 0.05;
    return rep;
}

}  // namespace zak
