#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "zak/grid.hpp"
#include "zak/operators.hpp"
#include "zak/profiles.hpp"

namespace zak {

// Field triple at one instant. w+/- and the velocity are derived on demand.
struct WaveState {
    double t = 0.0;
    CField psi;
    RField n;
    RField nt;

    WaveState() = default;
    explicit WaveState(const GridPtr& g) : psi(g), n(g), nt(g) {}

    const GridPtr& grid() const { return psi.grid; }

    bool finite() const {
        for (const auto& z : psi.v)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        for (double x : n.v)
            if (!std::isfinite(x)) return false;
        for (double x : nt.v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

namespace detail {

// Eigendecomposition of the flux-form radial Laplacian, symmetrized with the
// r^{d-1} quadrature weights. Used for operator functions (omega_1 powers) on
// radial grids; built once per grid shape.
struct RadialOmega {
    Eigen::MatrixXd V;        // eigenvectors of the symmetrized operator
    Eigen::VectorXd lambda;   // eigenvalues of the Laplacian (<= 0)
    std::vector<double> sqw;  // sqrt(r^{d-1})

    RadialOmega(const Grid& g) {
        const std::size_t m = g.points_per_axis();
        const auto& st = StencilCache::flux(g);
        const auto& r = g.radii();
        sqw.resize(m);
        for (std::size_t j = 0; j < m; ++j) sqw[j] = std::sqrt(std::pow(r[j], g.dim() - 1));
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t j = 0; j < m; ++j) {
            S(j, j) = st.diag[j];
            if (j + 1 < m) {
                const double off = st.upper[j] * sqw[j] / sqw[j + 1];
                S(j, j + 1) = off;
                S(j + 1, j) = off;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        V = es.eigenvectors();
        lambda = es.eigenvalues();
    }

    // f <- phi(-lambda) f  (phi of the positive Laplacian spectrum)
    template <class Phi>
    void apply(std::vector<double>& f, Phi&& phi) const {
        const auto m = static_cast<Eigen::Index>(f.size());
        Eigen::VectorXd u(m);
        for (Eigen::Index j = 0; j < m; ++j) u[j] = f[static_cast<std::size_t>(j)] * sqw[j];
        Eigen::VectorXd hat = V.transpose() * u;
        for (Eigen::Index i = 0; i < m; ++i) hat[i] *= phi(-lambda[i]);
        u = V * hat;
        for (Eigen::Index j = 0; j < m; ++j) f[static_cast<std::size_t>(j)] = u[j] / sqw[j];
    }
};

struct RadialOmegaCache {
    static const RadialOmega& get(const Grid& g) {
        static std::mutex mu;
        static std::map<std::tuple<int, std::size_t, double>, std::unique_ptr<RadialOmega>> map;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(g.dim(), g.points_per_axis(), g.extent());
        auto& slot = map[key];
        if (!slot) slot = std::make_unique<RadialOmega>(g);
        return *slot;
    }
};

// apply (1 + K)^{power} where K is the positive Laplacian symbol; the +1 is
// the low-wavenumber regularization
inline void apply_omega1(const Grid& g, RField& f, double power) {
    if (g.kind() == GridKind::periodic_box) {
        std::vector<complexd> buf(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) buf[i] = complexd(f.v[i]);
        apply_multiplier(g, buf, [power](double k2) { return std::pow(1.0 + k2, power); });
        for (std::size_t i = 0; i < f.size(); ++i) f.v[i] = buf[i].real();
    } else {
        RadialOmegaCache::get(g).apply(f.v, [power](double k2) { return std::pow(1.0 + k2, power); });
    }
}

}  // namespace detail

// First-order reduction w+/- = n +/- i omega_1^{-1} n_t with the regularized
// operator omega_1 = (1 - Laplacian)^{1/2}. With regularize = false the bare
// omega = (-Laplacian)^{1/2} is used, which fails on the k = 0 mode.
inline std::pair<CField, CField> to_first_order(const RField& n, const RField& nt,
                                                bool regularize = true) {
    check_same_grid(n.grid, nt.grid);
    const Grid& g = *n.grid;
    RField w = nt;
    if (regularize) {
        detail::apply_omega1(g, w, -0.5);
    } else {
        if (g.kind() != GridKind::periodic_box)
            throw Error("to_first_order: unregularized omega needs a periodic grid");
        std::vector<complexd> buf(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) buf[i] = complexd(w.v[i]);
        bool zero_mode = false;
        detail::apply_multiplier(*n.grid, buf, [&](double k2) {
            if (k2 == 0.0) {
                zero_mode = true;
                return 0.0;
            }
            return std::pow(k2, -0.5);
        });
        if (zero_mode) throw Error("to_first_order: zero-wavenumber division (regularization disabled)");
        for (std::size_t i = 0; i < w.size(); ++i) w.v[i] = buf[i].real();
    }
    CField wplus(n.grid), wminus(n.grid);
    for (std::size_t i = 0; i < n.size(); ++i) {
        wplus.v[i] = complexd(n.v[i], w.v[i]);
        wminus.v[i] = complexd(n.v[i], -w.v[i]);
    }
    return {std::move(wplus), std::move(wminus)};
}

inline std::pair<RField, RField> from_first_order(const CField& wplus, const CField& wminus,
                                                  bool regularize = true) {
    check_same_grid(wplus.grid, wminus.grid);
    RField n(wplus.grid), nt(wplus.grid);
    for (std::size_t i = 0; i < n.size(); ++i) {
        n.v[i] = 0.5 * (wplus.v[i] + wminus.v[i]).real();
        nt.v[i] = 0.5 * (wplus.v[i] - wminus.v[i]).imag();
    }
    if (regularize) {
        detail::apply_omega1(*n.grid, nt, 0.5);
    } else {
        if (n.grid->kind() != GridKind::periodic_box)
            throw Error("from_first_order: unregularized omega needs a periodic grid");
        std::vector<complexd> buf(nt.size());
        for (std::size_t i = 0; i < nt.size(); ++i) buf[i] = complexd(nt.v[i]);
        detail::apply_multiplier(*n.grid, buf, [](double k2) { return std::sqrt(k2); });
        for (std::size_t i = 0; i < nt.size(); ++i) nt.v[i] = buf[i].real();
    }
    return {std::move(n), std::move(nt)};
}

// ---------------------------------------------------------------------------
// Initial data factories
// ---------------------------------------------------------------------------

// Exact 2D self-similar state sampled at time t (t < t_star):
//   psi = P(rho)/(a tau) exp(i(theta + 1/(a^2 tau) - r^2/(4 tau)))
//   n   = N(rho)/(a tau)^2,   rho = r/(a tau), tau = t_star - t
// n_t comes from differentiating the similarity form in t.
inline WaveState self_similar_state_2d(const ProfileSolution& prof, double a, double t,
                                       double t_star, double theta, const GridPtr& grid) {
    if (t >= t_star) throw Error("self_similar_state_2d: t must be below t_star");
    if (grid->kind() != GridKind::radial || grid->dim() != 2)
        throw Error("self_similar_state_2d needs a radial 2D grid");
    const double tau = t_star - t;
    const double at = a * tau;
    const double eta_end = prof.eta.back();
    const double ntail_c = prof.N.back() * std::pow(eta_end, 3);

    WaveState s(grid);
    s.t = t;
    const auto& r = grid->radii();
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double rho = r[j] / at;
        double Pv, Nv, Ndv;
        if (rho <= eta_end) {
            Pv = prof.interp(prof.P, rho);
            Nv = prof.interp(prof.N, rho);
            Ndv = prof.interp(prof.dN, rho);
        } else {
            Pv = 0.0;
            Nv = ntail_c / (rho * rho * rho);
            Ndv = -3.0 * ntail_c / (rho * rho * rho * rho);
        }
        const double phase = theta + 1.0 / (a * a * tau) - r[j] * r[j] / (4.0 * tau);
        s.psi.v[j] = Pv / at * complexd(std::cos(phase), std::sin(phase));
        s.n.v[j] = Nv / (at * at);
        s.nt.v[j] = (2.0 * Nv + rho * Ndv) / (a * a * tau * tau * tau);
    }
    return s;
}

// Asymptotic 3D self-similar state sampled at time t:
//   psi ~ P(rho)/tau exp(i tau^{-1/3}),  rho = r/(sqrt(3) tau^{2/3})
//   n   ~ N(rho)/(3 tau^{4/3})
inline WaveState self_similar_state_3d(const ProfileSolution& prof, double t, double t_star,
                                       const GridPtr& grid) {
    if (t >= t_star) throw Error("self_similar_state_3d: t must be below t_star");
    if (grid->kind() != GridKind::radial || grid->dim() != 3)
        throw Error("self_similar_state_3d needs a radial 3D grid");
    const double tau = t_star - t;
    const double lam = std::sqrt(3.0) * std::pow(tau, 2.0 / 3.0);
    const double eta_end = prof.eta.back();
    const double ntail_c = prof.N.back() * eta_end * eta_end;

    WaveState s(grid);
    s.t = t;
    const auto& r = grid->radii();
    const double phase = std::pow(tau, -1.0 / 3.0);
    const complexd ph(std::cos(phase), std::sin(phase));
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double rho = r[j] / lam;
        double Pv, Nv, Ndv;
        if (rho <= eta_end) {
            Pv = prof.interp(prof.P, rho);
            Nv = prof.interp(prof.N, rho);
            Ndv = prof.interp(prof.dN, rho);
        } else {
            Pv = 0.0;
            Nv = ntail_c / (rho * rho);
            Ndv = -2.0 * ntail_c / (rho * rho * rho);
        }
        s.psi.v[j] = Pv / tau * ph;
        s.n.v[j] = Nv / (3.0 * std::pow(tau, 4.0 / 3.0));
        s.nt.v[j] = 2.0 / 9.0 * (2.0 * Nv + rho * Ndv) / std::pow(tau, 7.0 / 3.0);
    }
    return s;
}

// Radial Gaussian data psi = A exp(-(r/w)^2); n either 0 or -|psi|^2, n_t = 0.
inline WaveState gaussian_radial_state(const GridPtr& grid, double amplitude, double width,
                                       bool density_follows = true) {
    WaveState s(grid);
    const auto& r = grid->radii();
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double u = amplitude * std::exp(-(r[j] * r[j]) / (width * width));
        s.psi.v[j] = u;
        s.n.v[j] = density_follows ? -u * u : 0.0;
        s.nt.v[j] = 0.0;
    }
    return s;
}

// Periodic modulated Gaussian centered in the box; the phase factor exp(i k.x)
// makes the data non-symmetric for momentum diagnostics.
inline WaveState gaussian_periodic_state(const GridPtr& grid, double amplitude, double width,
                                         const std::vector<double>& kphase,
                                         bool density_follows = true) {
    if (grid->kind() != GridKind::periodic_box) throw Error("needs a periodic grid");
    WaveState s(grid);
    const double L = grid->extent();
    const int d = grid->dim();
    const std::size_t m = grid->points_per_axis();
    const double h = grid->h();
    for (std::size_t idx = 0; idx < s.psi.size(); ++idx) {
        std::size_t rem = idx;
        double r2 = 0.0, kx = 0.0;
        for (int ax = d - 1; ax >= 0; --ax) {
            const double x = static_cast<double>(rem % m) * h - 0.5 * L;
            r2 += x * x;
            if (static_cast<std::size_t>(ax) < kphase.size()) kx += kphase[ax] * x;
            rem /= m;
        }
        const double u = amplitude * std::exp(-r2 / (width * width));
        s.psi.v[idx] = u * complexd(std::cos(kx), std::sin(kx));
        s.n.v[idx] = density_follows ? -u * u : 0.0;
        s.nt.v[idx] = 0.0;
    }
    return s;
}

}  // namespace zak
