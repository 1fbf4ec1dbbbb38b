#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "zak/fitting.hpp"
#include "zak/grid.hpp"
#include "zak/ode.hpp"

namespace zak {

enum class ProfileFamily { ground_state_2d, family_2d, ladder_3d };

struct ProfileSolution {
    ProfileFamily family;
    double parameter = 0.0;  // a for 2D, k for the 3D ladder
    std::vector<double> eta;
    std::vector<double> P;
    std::vector<double> N;
    std::vector<double> dP;  // dP/deta on the same nodes
    std::vector<double> dN;
    double P0 = 0.0;
    double N0 = 0.0;
    double p_decay_rate = 0.0;      // delta:  P ~ C exp(-delta eta)
    double n_tail_exponent = 0.0;   // p:      N ~ C eta^p
    double clean_eta = 0.0;         // last eta where P is resolved above noise

    double interp(const std::vector<double>& f, double x) const {
        if (eta.empty()) throw Error("empty profile");
        if (x <= eta.front()) return f.front();
        if (x >= eta.back()) return f.back();
        const auto it = std::upper_bound(eta.begin(), eta.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - eta.begin());
        const double t = (x - eta[i - 1]) / (eta[i] - eta[i - 1]);
        return f[i - 1] * (1.0 - t) + f[i] * t;
    }
};

// resonance values alpha_k = (1/3) sqrt(2k(4k+3))
inline double alpha_k(int k) {
    if (k < 1) throw Error("alpha_k: k must be >= 1");
    return std::sqrt(2.0 * k * (4.0 * k + 3.0)) / 3.0;
}

// N(0) = 9 P(0)^2 / (14 - 9 P(0)^2)
inline double n0_from_p0(double p0) {
    const double denom = 14.0 - 9.0 * p0 * p0;
    if (std::abs(denom) < 1e-12) throw SingularRelationError("n0_from_p0: 9 p0^2 = 14");
    return 9.0 * p0 * p0 / denom;
}

struct SeriesSeed {
    double p0 = 0.0;
    std::vector<double> a;  // P(eta) = sum a_i eta^{2i}
    std::vector<double> b;  // N(eta) = sum b_i eta^{2i}
    double eta0 = 0.0;      // seed radius

    // (P, P', N, N') of the truncated series at x
    std::array<double, 4> eval(double x) const {
        double P = 0, dP = 0, N = 0, dN = 0, pw = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            P += a[i] * pw;
            if (i < b.size()) N += b[i] * pw;
            pw *= x * x;
        }
        pw = x;
        for (std::size_t i = 1; i < a.size(); ++i) {
            dP += a[i] * 2.0 * static_cast<double>(i) * pw;
            if (i < b.size()) dN += b[i] * 2.0 * static_cast<double>(i) * pw;
            pw *= x * x;
        }
        return {P, dP, N, dN};
    }
};

// Taylor coefficients of the 3D profile pair around the origin. At each order
// the pair (a_{j+1}, b_j) solves a 2x2 system whose determinant vanishes
// exactly at p0 = alpha_{j+1}; those resonances are rejected.
inline SeriesSeed series_seed_3d(double p0, int order = 40, double tol = 1e-13) {
    for (int i = 1; i <= order; ++i)
        if (std::abs(p0 - alpha_k(i)) < 1e-6)
            throw ResonanceError("series_seed_3d: p0 within 1e-6 of alpha_" + std::to_string(i));
    SeriesSeed s;
    s.p0 = p0;
    s.a = {p0};
    s.b = {};
    for (int j = 0; j < order; ++j) {
        const double A = (2.0 * j + 2.0) * (2.0 * j + 3.0);
        const double B = 4.0 / 9.0 * (4.0 * j + 7.0) * (j + 1.0);
        double c1 = s.a[j];
        for (int mth = 0; mth < j; ++mth) c1 += s.b[mth] * s.a[j - mth];
        double sum = 0.0;
        for (int mth = 1; mth <= j; ++mth) sum += s.a[mth] * s.a[j + 1 - mth];
        const double det = A * (B - 2.0 * p0 * p0);
        const double aj1 = (B * c1 + p0 * A * sum) / det;
        const double bj = A * (2.0 * p0 * c1 + A * sum) / det;
        s.a.push_back(aj1);
        s.b.push_back(bj);
    }
    // largest seed radius in [1e-3, 1e-1] with a negligible truncated tail
    double eta0 = 1e-1;
    while (eta0 > 1e-3) {
        const double tail = std::abs(s.a.back()) * std::pow(eta0, 2.0 * (s.a.size() - 1)) +
                            std::abs(s.b.back()) * std::pow(eta0, 2.0 * (s.b.size() - 1));
        if (tail < tol * std::max(1.0, std::abs(p0))) break;
        eta0 *= 0.5;
    }
    s.eta0 = std::max(eta0, 1e-3);
    return s;
}

enum class ShotOutcome { decays, diverges_plus, diverges_minus, crosses_zero };

inline const char* to_string(ShotOutcome o) {
    switch (o) {
        case ShotOutcome::decays: return "decays";
        case ShotOutcome::diverges_plus: return "diverges+";
        case ShotOutcome::diverges_minus: return "diverges-";
        default: return "crosses-zero";
    }
}

struct Shot {
    ShotOutcome outcome;
    std::vector<double> eta, P, dP, N, dN;
};

namespace detail {

// P'' = P + N P - (2/eta) P'
// N'' = [9 (P'^2 + P^2 (1+N)) - 13 eta N' - 14 N] / (2 eta^2)
inline void ladder_rhs(double e, const std::array<double, 4>& y, std::array<double, 4>& dy) {
    const double P = y[0], dP = y[1], N = y[2], dN = y[3];
    dy[0] = dP;
    dy[1] = P + N * P - 2.0 / e * dP;
    dy[2] = dN;
    dy[3] = (9.0 * (dP * dP + P * P * (1.0 + N)) - 13.0 * e * dN - 14.0 * N) / (2.0 * e * e);
}

}  // namespace detail

// Integrate the 3D profile ODEs outward from the series seed and classify the
// P branch. |P| < 1e-8 before any divergence counts as the decaying branch.
// In record mode the trajectory is sampled on a uniform eta grid.
inline Shot shoot_3d(double p0, double eta_max = 25.0, bool record = false,
                     double record_step = 0.005) {
    if (p0 <= 0) throw Error("shoot_3d: p0 must be positive");
    const SeriesSeed seed = series_seed_3d(p0);
    auto y0 = seed.eval(seed.eta0);
    std::array<double, 4> y = {y0[0], y0[1], y0[2], y0[3]};

    Shot shot;
    shot.outcome = ShotOutcome::diverges_plus;
    const double big = 1e6;
    const double decayed = 1e-8;

    OdeOptions opts;
    opts.rel_tol = 1e-10;
    opts.abs_tol = 1e-14;
    opts.h_init = 1e-4;
    opts.h_max = 0.05;

    auto classify = [&](const std::array<double, 4>& yy, ShotOutcome& out) {
        if (!std::isfinite(yy[0]) || !std::isfinite(yy[2])) {
            out = yy[0] > 0 ? ShotOutcome::diverges_plus : ShotOutcome::diverges_minus;
            return true;
        }
        if (yy[0] <= 0.0) {
            out = ShotOutcome::crosses_zero;
            return true;
        }
        if (std::abs(yy[0]) > big) {
            out = yy[0] > 0 ? ShotOutcome::diverges_plus : ShotOutcome::diverges_minus;
            return true;
        }
        if (std::abs(yy[0]) < decayed) {
            out = ShotOutcome::decays;
            return true;
        }
        return false;
    };

    bool done = false;
    if (!record) {
        auto observe = [&](double, const std::array<double, 4>& yy) {
            done = classify(yy, shot.outcome);
            return !done;
        };
        integrate_ode<4>(detail::ladder_rhs, y, seed.eta0, eta_max, opts, observe);
    } else {
        auto push = [&](double x) {
            shot.eta.push_back(x);
            shot.P.push_back(y[0]);
            shot.dP.push_back(y[1]);
            shot.N.push_back(y[2]);
            shot.dN.push_back(y[3]);
        };
        push(seed.eta0);
        double x = seed.eta0;
        auto keep_going = [](double, const std::array<double, 4>&) { return true; };
        while (x < eta_max - 1e-12 && !done) {
            const double x1 = std::min(x + record_step, eta_max);
            try {
                integrate_ode<4>(detail::ladder_rhs, y, x, x1, opts, keep_going);
            } catch (const Error&) {
                done = true;
                classify(y, shot.outcome);
                break;
            }
            x = x1;
            push(x);
            done = classify(y, shot.outcome);
        }
    }
    if (!done) {
        shot.outcome = (y[0] > 0) ? ShotOutcome::diverges_plus : ShotOutcome::crosses_zero;
        if (std::abs(y[0]) < decayed) shot.outcome = ShotOutcome::decays;
    }
    return shot;
}

namespace detail {

inline int shot_sign(ShotOutcome o) {
    // bisection parity: undershoot (crossing) vs overshoot (positive divergence)
    return (o == ShotOutcome::crosses_zero || o == ShotOutcome::diverges_minus) ? -1 : +1;
}

// continue the pair beyond the point where P left resolution: P follows the
// linearised decaying branch C (eta_c/eta) e^{-(eta-eta_c)} and N the
// source-free Euler equation
inline void extend_tail(std::vector<double>& eta, std::vector<double>& P, std::vector<double>& dP,
                        std::vector<double>& N, std::vector<double>& dN, double eta_max,
                        double step) {
    const double eta_c = eta.back();
    const double Pc = P.back();
    std::array<double, 2> y = {N.back(), dN.back()};
    auto rhs = [](double e, const std::array<double, 2>& yy, std::array<double, 2>& dy) {
        dy[0] = yy[1];
        dy[1] = -(13.0 * e * yy[1] + 14.0 * yy[0]) / (2.0 * e * e);
    };
    OdeOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-16;
    opts.h_max = step;
    auto obs = [&](double x, const std::array<double, 2>& yy) {
        eta.push_back(x);
        const double pv = Pc * (eta_c / x) * std::exp(-(x - eta_c));
        P.push_back(pv);
        dP.push_back(-pv * (1.0 + 1.0 / x));
        N.push_back(yy[0]);
        dN.push_back(yy[1]);
        return true;
    };
    integrate_ode<2>(rhs, y, eta_c, eta_max, opts, obs);
}

}  // namespace detail

// Bisection for the k-th 3D profile in (alpha_k, alpha_{k+1}).
inline ProfileSolution find_profile_3d(int k, double tol = 1e-12, double eta_max = 25.0) {
    if (k < 1) throw Error("find_profile_3d: k must be >= 1");
    const double margin = 0.01 * (alpha_k(k + 1) - alpha_k(k));
    double lo = alpha_k(k) + margin;
    double hi = alpha_k(k + 1) - margin;

    int slo = detail::shot_sign(shoot_3d(lo, eta_max).outcome);
    int shi = detail::shot_sign(shoot_3d(hi, eta_max).outcome);
    if (slo == shi) {
        // one retry with an extended horizon before giving up
        const double ext = 1.5 * eta_max;
        slo = detail::shot_sign(shoot_3d(lo, ext).outcome);
        shi = detail::shot_sign(shoot_3d(hi, ext).outcome);
        if (slo == shi)
            throw BracketError("find_profile_3d: no classification change across (alpha_" +
                               std::to_string(k) + ", alpha_" + std::to_string(k + 1) + ")");
        eta_max = ext;
    }
    while (hi - lo > std::max(tol, 1e-15 * hi)) {
        const double mid = 0.5 * (lo + hi);
        if (detail::shot_sign(shoot_3d(mid, eta_max).outcome) == slo)
            lo = mid;
        else
            hi = mid;
    }
    const double p0 = 0.5 * (lo + hi);

    Shot shot = shoot_3d(p0, eta_max, true);
    ProfileSolution sol;
    sol.family = ProfileFamily::ladder_3d;
    sol.parameter = k;
    sol.P0 = p0;
    sol.N0 = n0_from_p0(p0);

    // keep the trajectory up to the global minimum of |P| (the bisection noise
    // floor), then extend with the linearised decaying branch
    std::size_t cut = shot.P.size();
    {
        std::size_t imin = 0;
        for (std::size_t i = 1; i < shot.P.size(); ++i)
            if (std::abs(shot.P[i]) < std::abs(shot.P[imin])) imin = i;
        if (std::abs(shot.P[imin]) < 1e-5 * sol.P0) cut = imin + 1;
        // drop any non-positive samples
        for (std::size_t i = 0; i < cut; ++i)
            if (shot.P[i] <= 0.0) {
                cut = i;
                break;
            }
        if (cut == 0) throw BracketError("find_profile_3d: converged shot lost positivity");
    }
    sol.eta.assign(shot.eta.begin(), shot.eta.begin() + cut);
    sol.P.assign(shot.P.begin(), shot.P.begin() + cut);
    sol.dP.assign(shot.dP.begin(), shot.dP.begin() + cut);
    sol.N.assign(shot.N.begin(), shot.N.begin() + cut);
    sol.dN.assign(shot.dN.begin(), shot.dN.begin() + cut);
    sol.clean_eta = sol.eta.back();
    if (sol.clean_eta < eta_max - 1e-9)
        detail::extend_tail(sol.eta, sol.P, sol.dP, sol.N, sol.dN, eta_max, 0.005);

    // decay fits over [10, eta_max]; the P fit uses only the resolved part
    {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < sol.eta.size(); ++i)
            if (sol.eta[i] >= 10.0 && sol.eta[i] <= std::min(sol.clean_eta, eta_max)) {
                xs.push_back(sol.eta[i]);
                ys.push_back(sol.P[i]);
            }
        if (xs.size() >= 4) sol.p_decay_rate = -fit_semilog(xs, ys).slope;
        xs.clear();
        ys.clear();
        for (std::size_t i = 0; i < sol.eta.size(); ++i)
            if (sol.eta[i] >= 10.0 && sol.eta[i] <= eta_max) {
                xs.push_back(sol.eta[i]);
                ys.push_back(sol.N[i]);
            }
        if (xs.size() >= 4) sol.n_tail_exponent = fit_loglog(xs, ys).slope;
    }
    return sol;
}

// NLS ground state (Townes soliton) in d = 2: R'' + R'/eta - R + R^3 = 0,
// shooting on R(0).
inline ProfileSolution ground_state_2d(double tol = 1e-12, double eta_max = 20.0) {
    auto rhs = [](double e, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = y[1];
        dy[1] = y[0] - y[0] * y[0] * y[0] - y[1] / e;
    };
    auto classify = [&](double R0) {
        const double eta0 = 1e-3;
        const double c = (R0 - R0 * R0 * R0) / 4.0;  // R(eta) = R0 + c eta^2 + ...
        std::array<double, 2> y = {R0 + c * eta0 * eta0, 2.0 * c * eta0};
        OdeOptions opts;
        opts.rel_tol = 1e-12;
        opts.abs_tol = 1e-14;
        opts.h_max = 0.05;
        int sign = +1;
        auto obs = [&](double, const std::array<double, 2>& yy) {
            if (yy[0] <= 0.0) {
                sign = -1;
                return false;
            }
            if (yy[0] > 50.0) {
                sign = +1;
                return false;
            }
            return true;
        };
        integrate_ode<2>(rhs, y, eta0, eta_max, opts, obs);
        return sign;
    };

    double lo = 1.5, hi = 3.0;
    const int slo = classify(lo);
    if (slo == classify(hi)) throw BracketError("ground_state_2d: bracket failure");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (classify(mid) == slo)
            lo = mid;
        else
            hi = mid;
    }
    const double R0 = 0.5 * (lo + hi);

    ProfileSolution sol;
    sol.family = ProfileFamily::ground_state_2d;
    sol.parameter = 0.0;
    sol.P0 = R0;
    sol.N0 = -R0 * R0;

    const double eta0 = 1e-3;
    const double c = (R0 - R0 * R0 * R0) / 4.0;
    std::array<double, 2> y = {R0 + c * eta0 * eta0, 2.0 * c * eta0};
    OdeOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-16;
    opts.h_max = 0.005;
    double pmin = R0;
    auto obs = [&](double x, const std::array<double, 2>& yy) {
        if (yy[0] <= 0.0 || std::abs(yy[0]) > 3.0 * pmin + 1e-9) return false;
        pmin = std::min(pmin, std::abs(yy[0]));
        sol.eta.push_back(x);
        sol.P.push_back(yy[0]);
        sol.dP.push_back(yy[1]);
        sol.N.push_back(-yy[0] * yy[0]);
        sol.dN.push_back(-2.0 * yy[0] * yy[1]);
        if (std::abs(yy[0]) < 1e-12) return false;
        return true;
    };
    sol.eta.push_back(eta0);
    sol.P.push_back(y[0]);
    sol.dP.push_back(y[1]);
    sol.N.push_back(-y[0] * y[0]);
    sol.dN.push_back(-2.0 * y[0] * y[1]);
    integrate_ode<2>(rhs, y, eta0, eta_max, opts, obs);
    sol.clean_eta = sol.eta.back();

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < sol.eta.size(); ++i)
        if (sol.eta[i] >= 5.0) {
            xs.push_back(sol.eta[i]);
            ys.push_back(sol.P[i]);
        }
    if (xs.size() >= 4) sol.p_decay_rate = -fit_semilog(xs, ys).slope;
    sol.n_tail_exponent = 0.0;  // N = -R^2 decays exponentially
    return sol;
}

}  // namespace zak
