#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "zak/grid.hpp"
#include "zak/operators.hpp"
#include "zak/profiles.hpp"

namespace zak {

namespace detail2d {

// antiderivatives of sqrt(|a^2 x^2 - 1|)
inline double anti_super(double a, double x) {
    const double ax = std::max(a * x, 1.0);
    return 0.5 * x * std::sqrt(ax * ax - 1.0) - 0.5 / a * std::acosh(ax);
}
inline double anti_sub(double a, double x) {
    const double ax = std::min(a * x, 1.0);
    return 0.5 * x * std::sqrt(1.0 - ax * ax) + 0.5 / a * std::asin(ax);
}

// signed integral of sqrt(|a^2 x^2 - 1|) * sign(a^2 x^2 - 1) over [x0, x1]
inline double signed_integral(double a, double x0, double x1) {
    if (a == 0.0) return -(x1 - x0);
    const double es = 1.0 / a;
    if (x1 <= es) return -(anti_sub(a, x1) - anti_sub(a, x0));
    if (x0 >= es) return anti_super(a, x1) - anti_super(a, x0);
    return -(anti_sub(a, es) - anti_sub(a, x0)) + (anti_super(a, x1) - anti_super(a, es));
}

inline double mu_of(double a, double x) {
    return std::pow(std::abs(a * a * x * x - 1.0), 1.5);
}

// One row of the first-integral form of the density equation:
//   (a^2 eta^2 - 1) N' + 3 a^2 eta N = (P^2)'
// written as   sum cN_i N(col_i)  =  coef * (Q_hi - Q_lo) / h,  Q = P^2.
struct NRow {
    int ncol[2] = {-1, -1};
    double ncoef[2] = {0.0, 0.0};
    int qlo = -1, qhi = -1;
    double qcoef = 0.0;  // multiplies (Q_qhi - Q_qlo)/h
    double scale = 1.0;

    double residual(const std::vector<double>& N, const std::vector<double>& Q, double h) const {
        double v = 0.0;
        for (int s = 0; s < 2; ++s)
            if (ncol[s] >= 0) v += ncoef[s] * N[static_cast<std::size_t>(ncol[s])];
        if (qlo >= 0)
            v -= qcoef * (Q[static_cast<std::size_t>(qhi)] - Q[static_cast<std::size_t>(qlo)]) / h;
        return v * scale;
    }
};

// The density rows, one per block; row j is assigned so that the full system
// stays block tridiagonal (see the sonic-cell split below).
inline std::vector<NRow> build_density_rows(const Grid& g, double a) {
    const std::size_t m = g.points_per_axis();
    const double h = g.h();
    const auto& r = g.radii();
    std::vector<NRow> rows(m);

    const double eta_s = (a > 0) ? 1.0 / a : std::numeric_limits<double>::infinity();
    std::size_t fs = 0;  // sonic cell index: r[fs-1] < eta_s <= r[fs]
    bool sonic_inside = false;
    if (a > 0) {
        for (std::size_t f = 1; f < m; ++f)
            if (r[f - 1] < eta_s && eta_s <= r[f]) {
                fs = f;
                sonic_inside = true;
                break;
            }
    }

    auto cell_row = [&](std::size_t f) {
        NRow row;
        row.ncol[0] = static_cast<int>(f);
        row.ncoef[0] = mu_of(a, r[f]);
        row.ncol[1] = static_cast<int>(f - 1);
        row.ncoef[1] = -mu_of(a, r[f - 1]);
        row.qlo = static_cast<int>(f - 1);
        row.qhi = static_cast<int>(f);
        row.qcoef = signed_integral(a, r[f - 1], r[f]);
        row.scale = 1.0 / std::max({std::abs(row.ncoef[0]), std::abs(row.ncoef[1]), 1e-30});
        return row;
    };

    if (!sonic_inside) {
        // whole domain subsonic: N(r) = -P^2(r)/(1 - a^2 r^2) anchors the tail
        for (std::size_t f = 1; f < m; ++f) rows[f - 1] = cell_row(f);
        NRow anchor;
        anchor.ncol[0] = static_cast<int>(m - 1);
        anchor.ncoef[0] = 1.0 - a * a * r[m - 1] * r[m - 1];
        anchor.qlo = -1;
        anchor.scale = 1.0;
        rows[m - 1] = anchor;  // plus Q term handled explicitly in residual/jacobian
        return rows;
    }

    for (std::size_t f = 1; f < fs; ++f) rows[f - 1] = cell_row(f);
    // sonic cell split: the regular branch has N |c|^{3/2} -> 0 at eta_s,
    // anchoring both sides independently
    {
        NRow inner;
        inner.ncol[0] = static_cast<int>(fs - 1);
        inner.ncoef[0] = mu_of(a, r[fs - 1]);
        inner.qlo = static_cast<int>(fs - 1);
        inner.qhi = static_cast<int>(fs);
        inner.qcoef = -signed_integral(a, r[fs - 1], eta_s);
        inner.scale = 1.0 / std::max(std::abs(inner.ncoef[0]), 1e-30);
        rows[fs - 1] = inner;

        NRow outer;
        outer.ncol[0] = static_cast<int>(fs);
        outer.ncoef[0] = mu_of(a, r[fs]);
        outer.qlo = static_cast<int>(fs - 1);
        outer.qhi = static_cast<int>(fs);
        outer.qcoef = signed_integral(a, eta_s, r[fs]);
        outer.scale = 1.0 / std::max(std::abs(outer.ncoef[0]), 1e-30);
        rows[fs] = outer;
    }
    for (std::size_t f = fs + 1; f < m; ++f) rows[f] = cell_row(f);
    return rows;
}

// block tridiagonal solve, 2x2 blocks, in place on (rhs)
struct Block2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
};

inline void block_tridiag_solve(std::vector<Block2>& A, std::vector<Block2>& B,
                                std::vector<Block2>& C, std::vector<double>& rhs) {
    const std::size_t m = B.size();
    auto solve2 = [](const Block2& M, double& x, double& y) {
        const double det = M.a11 * M.a22 - M.a12 * M.a21;
        if (det == 0.0) throw Error("singular 2x2 block");
        const double u = (M.a22 * x - M.a12 * y) / det;
        const double v = (-M.a21 * x + M.a11 * y) / det;
        x = u;
        y = v;
    };
    auto mul2 = [](const Block2& M, double x, double y, double& ox, double& oy) {
        ox = M.a11 * x + M.a12 * y;
        oy = M.a21 * x + M.a22 * y;
    };
    // forward elimination: B_j <- B_j - A_j B_{j-1}^{-1} C_{j-1}
    for (std::size_t j = 1; j < m; ++j) {
        // X = B_{j-1}^{-1} C_{j-1} and  y = B_{j-1}^{-1} rhs_{j-1}
        Block2 X = C[j - 1];
        double c1 = X.a11, c2 = X.a21;
        solve2(B[j - 1], c1, c2);
        X.a11 = c1;
        X.a21 = c2;
        c1 = C[j - 1].a12;
        c2 = C[j - 1].a22;
        solve2(B[j - 1], c1, c2);
        X.a12 = c1;
        X.a22 = c2;
        double r1 = rhs[2 * (j - 1)], r2 = rhs[2 * (j - 1) + 1];
        solve2(B[j - 1], r1, r2);

        Block2& Aj = A[j];
        Block2 AX;
        AX.a11 = Aj.a11 * X.a11 + Aj.a12 * X.a21;
        AX.a12 = Aj.a11 * X.a12 + Aj.a12 * X.a22;
        AX.a21 = Aj.a21 * X.a11 + Aj.a22 * X.a21;
        AX.a22 = Aj.a21 * X.a12 + Aj.a22 * X.a22;
        B[j].a11 -= AX.a11;
        B[j].a12 -= AX.a12;
        B[j].a21 -= AX.a21;
        B[j].a22 -= AX.a22;
        double t1, t2;
        mul2(Aj, r1, r2, t1, t2);
        rhs[2 * j] -= t1;
        rhs[2 * j + 1] -= t2;
        C[j - 1] = X;  // stores B^{-1} C for the back substitution
    }
    // back substitution
    double x1 = rhs[2 * (m - 1)], x2 = rhs[2 * (m - 1) + 1];
    solve2(B[m - 1], x1, x2);
    rhs[2 * (m - 1)] = x1;
    rhs[2 * (m - 1) + 1] = x2;
    for (std::size_t j = m - 1; j-- > 0;) {
        double t1, t2;
        mul2(C[j], rhs[2 * (j + 1)], rhs[2 * (j + 1) + 1], t1, t2);
        double r1 = rhs[2 * j], r2 = rhs[2 * j + 1];
        r1 -= t1;
        r2 -= t2;
        solve2(B[j], r1, r2);
        rhs[2 * j] = r1;
        rhs[2 * j + 1] = r2;
    }
}

}  // namespace detail2d

// Residuals of the discretized 2D profile system for a candidate pair. First
// component: max |Delta P - P - N P|; second: max normalized residual of the
// first-integral form of the density equation.
inline std::pair<double, double> profile_residual_2d(const GridPtr& g, const std::vector<double>& P,
                                                     const std::vector<double>& N, double a) {
    const auto& st = detail::StencilCache::ghost(*g);
    const std::size_t m = g->points_per_axis();
    std::vector<double> lap(m);
    st.apply(P, lap);
    double rp = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        rp = std::max(rp, std::abs(lap[j] - P[j] - N[j] * P[j]));

    auto rows = detail2d::build_density_rows(*g, a);
    std::vector<double> Q(m);
    for (std::size_t j = 0; j < m; ++j) Q[j] = P[j] * P[j];
    double rn = 0.0;
    const double h = g->h();
    const auto& r = g->radii();
    const bool anchor = !(a > 0) || (1.0 / a > r[m - 1]);
    for (std::size_t j = 0; j < m; ++j) {
        double v = rows[j].residual(N, Q, h);
        if (anchor && j == m - 1) v += Q[m - 1];
        rn = std::max(rn, std::abs(v));
    }
    return {rp, rn};
}

// Newton continuation for the 2D self-similar pair (P_a, N_a) on a shared
// radial grid. Keeps the last converged pair to warm start subsequent targets.
class Family2d {
public:
    explicit Family2d(double r_max = 40.0, std::size_t m = 3200)
        : grid_(Grid::radial(2, r_max, m)) {}

    const GridPtr& grid() const { return grid_; }

    // Solve for parameter a, stepping from the nearest converged state.
    ProfileSolution solve(double a, double tol = 1e-10) {
        if (a < 0) throw Error("find_profile_2d: a must be >= 0");
        if (!seeded_) seed_from_townes();
        double cur = a_;
        std::vector<double> P = P_, N = N_;
        double step = 0.02;
        const double step_min = 1e-4;
        while (std::abs(cur - a) > 1e-14) {
            double next = cur + std::clamp(a - cur, -step, step);
            std::vector<double> Pt = P, Nt = N;
            if (newton(Pt, Nt, next, tol)) {
                P = Pt;
                N = Nt;
                cur = next;
                // cache every converged state along the path
                P_ = P;
                N_ = N;
                a_ = cur;
            } else {
                step *= 0.5;
                if (step < step_min)
                    throw ContinuationError(
                        "find_profile_2d: Newton continuation stalled; largest converged a = " +
                            std::to_string(cur),
                        cur);
            }
        }
        return package(P, N, a);
    }

private:
    void seed_from_townes() {
        ProfileSolution g0 = ground_state_2d(1e-12);
        const auto& r = grid_->radii();
        const std::size_t m = r.size();
        P_.assign(m, 0.0);
        N_.assign(m, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double pv = (r[j] <= g0.eta.back()) ? g0.interp(g0.P, r[j]) : 0.0;
            P_[j] = pv;
            N_[j] = -pv * pv;
        }
        if (!newton(P_, N_, 0.0, 1e-11))
            throw Error("find_profile_2d: could not converge the a = 0 pair");
        a_ = 0.0;
        seeded_ = true;
    }

    double resid_norm(const std::vector<double>& P, const std::vector<double>& N, double a,
                      const std::vector<detail2d::NRow>& rows) const {
        const auto& st = detail::StencilCache::ghost(*grid_);
        const std::size_t m = P.size();
        std::vector<double> lap(m), Q(m);
        st.apply(P, lap);
        for (std::size_t j = 0; j < m; ++j) Q[j] = P[j] * P[j];
        double rmax = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            rmax = std::max(rmax, std::abs(lap[j] - P[j] - N[j] * P[j]));
        const double h = grid_->h();
        const auto& r = grid_->radii();
        const bool anchor = !(a > 0) || (1.0 / a > r[m - 1]);
        for (std::size_t j = 0; j < m; ++j) {
            double v = rows[j].residual(N, Q, h);
            if (anchor && j == m - 1) v += Q[m - 1];
            rmax = std::max(rmax, std::abs(v));
        }
        return rmax;
    }

    bool newton(std::vector<double>& P, std::vector<double>& N, double a, double tol,
                int itmax = 40) {
        const std::size_t m = P.size();
        const auto& st = detail::StencilCache::ghost(*grid_);
        const auto rows = detail2d::build_density_rows(*grid_, a);
        const double h = grid_->h();
        const auto& r = grid_->radii();
        const bool anchor = !(a > 0) || (1.0 / a > r[m - 1]);

        std::vector<detail2d::Block2> A(m), B(m), C(m);
        std::vector<double> rhs(2 * m), lap(m), Q(m);

        double res = resid_norm(P, N, a, rows);
        for (int it = 0; it < itmax; ++it) {
            if (res < tol) return true;
            for (auto& b : A) b = {};
            for (auto& b : B) b = {};
            for (auto& b : C) b = {};
            st.apply(P, lap);
            for (std::size_t j = 0; j < m; ++j) Q[j] = P[j] * P[j];

            for (std::size_t j = 0; j < m; ++j) {
                // P equation in row slot 1 of block j
                rhs[2 * j] = -(lap[j] - P[j] - N[j] * P[j]);
                B[j].a11 = st.diag[j] - 1.0 - N[j];
                B[j].a12 = -P[j];
                if (j > 0) A[j].a11 = st.lower[j];
                if (j + 1 < m) C[j].a11 = st.upper[j];

                // density row in slot 2 of block j
                const auto& row = rows[j];
                double v = row.residual(N, Q, h);
                if (anchor && j == m - 1) v += Q[m - 1];
                rhs[2 * j + 1] = -v;
                for (int s = 0; s < 2; ++s) {
                    if (row.ncol[s] < 0) continue;
                    const std::size_t col = static_cast<std::size_t>(row.ncol[s]);
                    const double cval = row.ncoef[s] * row.scale;
                    if (col == j)
                        B[j].a22 += cval;
                    else if (col + 1 == j)
                        A[j].a22 += cval;
                    else if (col == j + 1)
                        C[j].a22 += cval;
                    else
                        throw Error("density row outside block bandwidth");
                }
                if (row.qlo >= 0) {
                    const std::size_t lo = static_cast<std::size_t>(row.qlo);
                    const std::size_t hi = static_cast<std::size_t>(row.qhi);
                    const double cq = row.qcoef * row.scale / h;
                    // d/dP[hi] (-cq (Q_hi - Q_lo)) = -cq 2 P_hi ; d/dP[lo] = +cq 2 P_lo
                    auto add = [&](std::size_t col, double val) {
                        if (col == j)
                            B[j].a21 += val;
                        else if (col + 1 == j)
                            A[j].a21 += val;
                        else if (col == j + 1)
                            C[j].a21 += val;
                        else
                            throw Error("density row outside block bandwidth");
                    };
                    add(hi, -cq * 2.0 * P[hi]);
                    add(lo, cq * 2.0 * P[lo]);
                }
                if (anchor && j == m - 1) B[j].a21 += 2.0 * P[m - 1];
            }

            try {
                detail2d::block_tridiag_solve(A, B, C, rhs);
            } catch (const Error&) {
                return false;
            }

            double lam = 1.0;
            bool accepted = false;
            std::vector<double> Pn(m), Nn(m);
            for (int halving = 0; halving < 40; ++halving) {
                for (std::size_t j = 0; j < m; ++j) {
                    Pn[j] = P[j] + lam * rhs[2 * j];
                    Nn[j] = N[j] + lam * rhs[2 * j + 1];
                }
                const double rn = resid_norm(Pn, Nn, a, rows);
                if (rn < res) {
                    res = rn;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            P.swap(Pn);
            N.swap(Nn);
            if (!accepted) return res < tol;
        }
        return res < tol;
    }

    ProfileSolution package(const std::vector<double>& P, const std::vector<double>& N,
                            double a) const {
        ProfileSolution sol;
        sol.family = (a == 0.0) ? ProfileFamily::ground_state_2d : ProfileFamily::family_2d;
        sol.parameter = a;
        sol.eta = grid_->radii();
        sol.P = P;
        sol.N = N;
        const std::size_t m = P.size();
        sol.dP.resize(m);
        sol.dN.resize(m);
        const double i2h = 0.5 / grid_->h();
        for (std::size_t j = 0; j < m; ++j) {
            const double pp = (j + 1 < m) ? P[j + 1] : -P[m - 1];
            const double pm = (j > 0) ? P[j - 1] : P[0];
            sol.dP[j] = (pp - pm) * i2h;
            const double np = (j + 1 < m) ? N[j + 1] : N[m - 1];
            const double nm = (j > 0) ? N[j - 1] : N[0];
            sol.dN[j] = (np - nm) * i2h;
        }
        sol.P0 = (9.0 * P[0] - P[1]) / 8.0;
        sol.N0 = (9.0 * N[0] - N[1]) / 8.0;
        sol.clean_eta = sol.eta.back();

        // decay fits
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < m; ++j) {
            if (sol.eta[j] > 20.0) break;
            if (sol.eta[j] >= 5.0 && std::abs(P[j]) > 1e-280) {
                xs.push_back(sol.eta[j]);
                ys.push_back(P[j]);
            }
        }
        if (xs.size() >= 4) sol.p_decay_rate = -fit_semilog(xs, ys).slope;
        if (a > 0) {
            const double lo = std::max(8.0, 2.5 / a);
            const double hi = 0.8 * grid_->extent();
            xs.clear();
            ys.clear();
            for (std::size_t j = 0; j < m; ++j)
                if (sol.eta[j] >= lo && sol.eta[j] <= hi) {
                    xs.push_back(sol.eta[j]);
                    ys.push_back(N[j]);
                }
            if (xs.size() >= 4) sol.n_tail_exponent = fit_loglog(xs, ys).slope;
        }
        return sol;
    }

    GridPtr grid_;
    std::vector<double> P_, N_;
    double a_ = 0.0;
    bool seeded_ = false;
};

// One-shot convenience wrapper around Family2d.
inline ProfileSolution find_profile_2d(double a, double tol = 1e-10, double r_max = 40.0,
                                       std::size_t m = 3200) {
    Family2d fam(r_max, m);
    return fam.solve(a, tol);
}

}  // namespace zak
