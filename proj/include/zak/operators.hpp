#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "zak/fft.hpp"
#include "zak/grid.hpp"

namespace zak {

namespace detail {

// Tridiagonal solve (Thomas). diag/lower/upper are the matrix bands; lower[0]
// and upper[m-1] are unused. rhs is overwritten with the solution.
template <class T>
void solve_tridiag(const std::vector<double>& lower, std::vector<T> diag,
                   const std::vector<double>& upper, std::vector<T>& rhs) {
    const std::size_t m = diag.size();
    for (std::size_t i = 1; i < m; ++i) {
        const T w = T(lower[i]) / diag[i - 1];
        diag[i] -= w * T(upper[i - 1]);
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[m - 1] /= diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - T(upper[i]) * rhs[i + 1]) / diag[i];
}

template <class T>
void solve_tridiag_c(const std::vector<double>& lower, std::vector<complexd> diag,
                     const std::vector<double>& upper, std::vector<T>& rhs) {
    const std::size_t m = diag.size();
    for (std::size_t i = 1; i < m; ++i) {
        const complexd w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[m - 1] /= diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Radial Laplacian stencil, centered differences with even-parity ghost at the
// origin and an antisymmetric (Dirichlet at the outer cell face) ghost at r_max.
struct RadialStencil {
    std::vector<double> lower, diag, upper;  // bands of the matrix

    RadialStencil(const Grid& g) {
        const std::size_t m = g.points_per_axis();
        const double h = g.h();
        const double ih2 = 1.0 / (h * h);
        const auto& r = g.radii();
        const double c = (g.dim() - 1) * 0.5 / h;
        lower.assign(m, 0.0);
        diag.assign(m, -2.0 * ih2);
        upper.assign(m, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double lo = ih2 - c / r[j];
            const double up = ih2 + c / r[j];
            if (j > 0) lower[j] = lo;
            if (j + 1 < m) upper[j] = up;
            if (j == 0) diag[0] += lo;           // parity ghost f_{-1} = f_0
            if (j + 1 == m) diag[j] -= up;       // outer ghost f_m = -f_{m-1}
        }
    }

    template <class T>
    void apply(const std::vector<T>& f, std::vector<T>& out) const {
        const std::size_t m = f.size();
        for (std::size_t j = 0; j < m; ++j) {
            T acc = T(diag[j]) * f[j];
            if (j > 0) acc += T(lower[j]) * f[j - 1];
            if (j + 1 < m) acc += T(upper[j]) * f[j + 1];
            out[j] = acc;
        }
    }
};

// Conservative (flux form) radial Laplacian; exactly self-adjoint with respect
// to the r^{d-1} quadrature weights, used by the time steppers.
struct FluxStencil {
    std::vector<double> lower, diag, upper;

    FluxStencil(const Grid& g) {
        const std::size_t m = g.points_per_axis();
        const double h = g.h();
        const int d = g.dim();
        const auto& r = g.radii();
        lower.assign(m, 0.0);
        diag.assign(m, 0.0);
        upper.assign(m, 0.0);
        auto facew = [&](std::size_t face) {  // r_face^{d-1}
            const double rf = static_cast<double>(face) * h;
            return std::pow(rf, d - 1);
        };
        for (std::size_t j = 0; j < m; ++j) {
            const double invw = 1.0 / (std::pow(r[j], d - 1) * h * h);
            const double cm = facew(j) * invw;
            const double cp = facew(j + 1) * invw;
            if (j > 0) lower[j] = cm;
            if (j + 1 < m) upper[j] = cp;
            diag[j] = -(cm + cp);
            if (j + 1 == m) diag[j] -= cp;  // outer ghost f_m = -f_{m-1}
        }
        // flux through r = 0 vanishes identically (facew(0) = 0 for d > 1);
        // for d = 1 the parity ghost gives the same cancellation
        if (d == 1) diag[0] += 1.0 / (h * h);
    }

    template <class T>
    void apply(const std::vector<T>& f, std::vector<T>& out) const {
        const std::size_t m = f.size();
        for (std::size_t j = 0; j < m; ++j) {
            T acc = T(diag[j]) * f[j];
            if (j > 0) acc += T(lower[j]) * f[j - 1];
            if (j + 1 < m) acc += T(upper[j]) * f[j + 1];
            out[j] = acc;
        }
    }
};

struct StencilCache {
    static const RadialStencil& ghost(const Grid& g) {
        static std::mutex mu;
        static std::map<std::tuple<int, std::size_t, double>, std::unique_ptr<RadialStencil>> map;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(g.dim(), g.points_per_axis(), g.extent());
        auto& slot = map[key];
        if (!slot) slot = std::make_unique<RadialStencil>(g);
        return *slot;
    }
    static const FluxStencil& flux(const Grid& g) {
        static std::mutex mu;
        static std::map<std::tuple<int, std::size_t, double>, std::unique_ptr<FluxStencil>> map;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(g.dim(), g.points_per_axis(), g.extent());
        auto& slot = map[key];
        if (!slot) slot = std::make_unique<FluxStencil>(g);
        return *slot;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Laplacian
// ---------------------------------------------------------------------------

template <class T>
FieldT<T> laplacian(const FieldT<T>& f, int dim) {
    const Grid& g = *f.grid;
    if (dim != g.dim()) throw Error("laplacian: dimension does not match the grid");
    FieldT<T> out(f.grid);
    if (g.kind() == GridKind::radial) {
        detail::StencilCache::ghost(g).apply(f.v, out.v);
    } else {
        std::vector<complexd> buf(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) buf[i] = complexd(f.v[i]);
        detail::apply_multiplier(g, buf, [](double k2) { return -k2; });
        for (std::size_t i = 0; i < f.size(); ++i) {
            if constexpr (std::is_same_v<T, double>)
                out.v[i] = buf[i].real();
            else
                out.v[i] = buf[i];
        }
    }
    return out;
}

// Solve laplacian(g) = f. Radial grids use the decay condition g(r_max) = 0;
// periodic grids zero the mean mode and require f to have (numerically) zero mean.
template <class T>
FieldT<T> invert_laplacian(const FieldT<T>& f, int dim) {
    const Grid& g = *f.grid;
    if (dim != g.dim()) throw Error("invert_laplacian: dimension does not match the grid");
    FieldT<T> out = f;
    if (g.kind() == GridKind::radial) {
        const auto& st = detail::StencilCache::ghost(g);
        std::vector<T> diag(st.diag.begin(), st.diag.end());
        detail::solve_tridiag(st.lower, diag, st.upper, out.v);
    } else {
        T mean = std::accumulate(f.v.begin(), f.v.end(), T{}) / T(double(f.size()));
        double scale = 0.0;
        for (const auto& x : f.v) scale = std::max(scale, std::abs(x));
        if (std::abs(mean) > 1e-10 * std::max(scale, 1.0))
            throw Error("invert_laplacian: periodic input has nonzero mean");
        std::vector<complexd> buf(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) buf[i] = complexd(f.v[i]);
        detail::apply_multiplier(g, buf, [](double k2) { return k2 > 0 ? -1.0 / k2 : 0.0; });
        for (std::size_t i = 0; i < f.size(); ++i) {
            if constexpr (std::is_same_v<T, double>)
                out.v[i] = buf[i].real();
            else
                out.v[i] = buf[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

// d/dr of an even radial field (result is odd); centered differences
template <class T>
FieldT<T> radial_derivative(const FieldT<T>& f) {
    const Grid& g = *f.grid;
    if (g.kind() != GridKind::radial) throw Error("radial_derivative needs a radial grid");
    const std::size_t m = f.size();
    const double i2h = 0.5 / g.h();
    FieldT<T> out(f.grid);
    for (std::size_t j = 0; j < m; ++j) {
        const T fp = (j + 1 < m) ? f.v[j + 1] : -f.v[m - 1];
        const T fm = (j > 0) ? f.v[j - 1] : f.v[0];
        out.v[j] = (fp - fm) * T(i2h);
    }
    return out;
}

// spectral partial derivative along one axis of a periodic grid
inline CField periodic_derivative(const CField& f, int axis) {
    const Grid& g = *f.grid;
    if (g.kind() != GridKind::periodic_box) throw Error("periodic_derivative needs a periodic grid");
    if (axis < 0 || axis >= g.dim()) throw Error("axis out of range");
    CField out = f;
    detail::fft_forward(g, out.v);
    const auto& kax = g.wavenumbers();
    const std::size_t m = g.points_per_axis();
    const int d = g.dim();
    // axis numbering follows coordinate order; last coordinate varies fastest
    const int fast_pos = d - 1 - axis;
    std::size_t stride = 1;
    for (int i = 0; i < fast_pos; ++i) stride *= m;
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        const std::size_t ia = (idx / stride) % m;
        out.v[idx] *= complexd(0.0, kax[ia]);
    }
    detail::fft_backward(g, out.v);
    return out;
}

inline RField periodic_derivative(const RField& f, int axis) {
    CField tmp(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) tmp.v[i] = f.v[i];
    CField der = periodic_derivative(tmp, axis);
    RField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = der.v[i].real();
    return out;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace detail {

// Midpoint rule on the staggered radial grid for \int_0^{r_max} u(r) r^p dr
// with u even, plus Euler-Maclaurin corrections at the origin. Odd p needs a
// correction because r^p u has nonzero odd derivatives at r = 0.
inline double radial_integral(const std::vector<double>& u, double h, int p) {
    const std::size_t m = u.size();
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double r = (j + 0.5) * h;
        s += u[j] * std::pow(r, p);
    }
    s *= h;
    if (m >= 3) {
        const double u0 = (9.0 * u[0] - u[1]) / 8.0;  // u(0), O(h^4)
        // u = c0 + c2 r^2 + ... from the first three nodes
        const double r0 = 0.5 * h, r1 = 1.5 * h;
        const double c2 = (u[1] - u[0]) / (r1 * r1 - r0 * r0);
        if (p == 1) {
            // G = r u: G'(0) = u(0), G'''(0) = 3 u''(0) = 6 c2
            s -= h * h / 24.0 * u0;
            s += 7.0 * std::pow(h, 4) / 5760.0 * 6.0 * c2;
        } else if (p == 3) {
            // G = r^3 u: G'''(0) = 6 u(0)
            s += 7.0 * std::pow(h, 4) / 5760.0 * 6.0 * u0;
        } else if (p == 5) {
            // corrections start at h^6; nothing to do
        }
    }
    return s;
}

}  // namespace detail

// \int f r^{weight} dx. Radial grids include the sphere-area constant; periodic
// grids only support weight = 0 (plain box integral).
inline double quadrature(const RField& f, int weight = 0) {
    const Grid& g = *f.grid;
    if (g.kind() == GridKind::radial) {
        const int p = weight + g.dim() - 1;
        return g.sphere_factor() * detail::radial_integral(f.v, g.h(), p);
    }
    if (weight != 0) throw Error("weighted quadrature needs a radial grid");
    double s = std::accumulate(f.v.begin(), f.v.end(), 0.0);
    return s * std::pow(g.h(), g.dim());
}

inline double l2_norm_sq(const RField& f) {
    RField sq(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) sq.v[i] = f.v[i] * f.v[i];
    return quadrature(sq);
}
inline double l2_norm_sq(const CField& f) {
    RField sq(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) sq.v[i] = std::norm(f.v[i]);
    return quadrature(sq);
}
template <class T>
double l2_norm(const FieldT<T>& f) {
    return std::sqrt(l2_norm_sq(f));
}

template <class T>
double sup_abs(const FieldT<T>& f) {
    double s = 0.0;
    for (const auto& x : f.v) s = std::max(s, std::abs(x));
    return s;
}

// ||grad f||_{L2}^2
inline double grad_norm_sq(const CField& f) {
    const Grid& g = *f.grid;
    if (g.kind() == GridKind::radial) {
        CField der = radial_derivative(f);
        return l2_norm_sq(der);
    }
    CField buf = f;
    detail::fft_forward(g, buf.v);
    const std::size_t m = g.points_per_axis();
    const auto& kax = g.wavenumbers();
    double acc = 0.0;
    std::size_t idx = 0;
    const std::size_t n = buf.size();
    for (idx = 0; idx < n; ++idx) {
        double k2 = 0.0;
        std::size_t rem = idx;
        for (int ax = 0; ax < g.dim(); ++ax) {
            k2 += kax[rem % m] * kax[rem % m];
            rem /= m;
        }
        acc += k2 * std::norm(buf.v[idx]);
    }
    const double l = g.extent();
    const double nn = static_cast<double>(n);
    return acc * std::pow(l, g.dim()) / (nn * nn);
}
inline double grad_norm_sq(const RField& f) {
    CField tmp(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) tmp.v[i] = f.v[i];
    return grad_norm_sq(tmp);
}

// ---------------------------------------------------------------------------
// Sobolev norms
// ---------------------------------------------------------------------------

namespace detail {

// Radial Fourier transform kernels: hat f(k) = S_d \int f(r) kern(kr) r^{d-1} dr
inline double radial_kernel(int d, double kr) {
    if (d == 1) return std::cos(kr);
    if (d == 2) return std::cyl_bessel_j(0.0, kr);
    return kr > 1e-8 ? std::sin(kr) / kr : 1.0 - kr * kr / 6.0;
}

// Cached kernel matrix for the radial continuous Fourier transform.
struct RadialSpectral {
    std::vector<double> k;        // staggered k nodes
    double dk;
    std::vector<double> kernel;   // [K x M], kernel(k_i r_j) * r_j^{d-1} * h
    std::size_t m;
    int d;

    RadialSpectral(const Grid& g) {
        m = g.points_per_axis();
        d = g.dim();
        const double h = g.h();
        const std::size_t K = std::min<std::size_t>(m, 2048);
        const double kmax = 3.14159265358979323846 / h;
        dk = kmax / static_cast<double>(K);
        k.resize(K);
        for (std::size_t i = 0; i < K; ++i) k[i] = (i + 0.5) * dk;
        kernel.resize(K * m);
        const auto& r = g.radii();
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < m; ++j)
                kernel[i * m + j] = radial_kernel(d, k[i] * r[j]) * std::pow(r[j], d - 1) * h;
    }

};

struct RadialSpectralCache {
    static const RadialSpectral& get(const Grid& g) {
        static std::mutex mu;
        static std::map<std::tuple<int, std::size_t, double>, std::unique_ptr<RadialSpectral>> map;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(g.dim(), g.points_per_axis(), g.extent());
        auto& slot = map[key];
        if (!slot) slot = std::make_unique<RadialSpectral>(g);
        return *slot;
    }
};

// |hat f(k_i)|^2 on the staggered k grid of the cache
template <class T>
std::vector<double> radial_power_spectrum(const FieldT<T>& f) {
    const Grid& g = *f.grid;
    const auto& rs = RadialSpectralCache::get(g);
    const std::size_t K = rs.k.size();
    const std::size_t m = rs.m;
    const double h = g.h();
    std::vector<double> ps(K);
    // origin corrections for d = 2 (the d = 1, 3 integrands have no odd
    // low-order derivatives at r = 0)
    T f0{}, c2{};
    if (g.dim() == 2 && m >= 2) {
        f0 = (T(9.0) * f.v[0] - f.v[1]) / T(8.0);
        const double r0 = 0.5 * h, r1 = 1.5 * h;
        c2 = (f.v[1] - f.v[0]) / T(r1 * r1 - r0 * r0);
    }
    for (std::size_t i = 0; i < K; ++i) {
        complexd acc(0.0);
        const double* row = rs.kernel.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * complexd(f.v[j]);
        if (g.dim() == 2 && m >= 3) {
            const double kk = rs.k[i];
            // G(r) = f(r) J0(k r) r: G'(0) = f(0); G'''(0) = 3 f''(0) - 1.5 f(0) k^2
            acc -= h * h / 24.0 * complexd(f0);
            acc += 7.0 * std::pow(h, 4) / 5760.0 * (complexd(6.0 * c2) - 1.5 * kk * kk * complexd(f0));
        }
        acc *= g.sphere_factor();
        ps[i] = std::norm(acc);
    }
    return ps;
}

// integrate w(k) * ps(k) * k^{d-1} dk on the staggered k grid with the same
// origin correction scheme as the r quadrature
inline double spectral_integral(const std::vector<double>& ps, const std::vector<double>& wk,
                                double dk, int d) {
    const std::size_t K = ps.size();
    std::vector<double> u(K);
    for (std::size_t i = 0; i < K; ++i) u[i] = ps[i] * wk[i];
    return radial_integral(u, dk, d - 1);
}

}  // namespace detail

// Sobolev norm ||f||_{H^s}. Periodic grids use exact spectral weights; radial
// grids go through the continuous radial Fourier transform. The homogeneous
// variant weights by |k|^{2s} instead of (1+|k|^2)^s.
template <class T>
double sobolev_norm(const FieldT<T>& f, double s, bool homogeneous = false) {
    if (s < -2.0) throw Error("sobolev_norm: s below -2 unsupported");
    const Grid& g = *f.grid;
    const double pi = 3.14159265358979323846;
    if (g.kind() == GridKind::periodic_box) {
        std::vector<complexd> buf(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) buf[i] = complexd(f.v[i]);
        detail::fft_forward(g, buf);
        const std::size_t m = g.points_per_axis();
        const auto& kax = g.wavenumbers();
        double acc = 0.0;
        for (std::size_t idx = 0; idx < buf.size(); ++idx) {
            double k2 = 0.0;
            std::size_t rem = idx;
            for (int ax = 0; ax < g.dim(); ++ax) {
                k2 += kax[rem % m] * kax[rem % m];
                rem /= m;
            }
            const double w = homogeneous ? std::pow(k2, s) : std::pow(1.0 + k2, s);
            if (homogeneous && k2 == 0.0) continue;
            acc += w * std::norm(buf[idx]);
        }
        const double n = static_cast<double>(buf.size());
        return std::sqrt(acc * std::pow(g.extent(), g.dim()) / (n * n));
    }
    const auto& rs = detail::RadialSpectralCache::get(g);
    auto ps = detail::radial_power_spectrum(f);
    std::vector<double> wk(rs.k.size());
    for (std::size_t i = 0; i < wk.size(); ++i) {
        const double k2 = rs.k[i] * rs.k[i];
        wk[i] = homogeneous ? std::pow(k2, s) : std::pow(1.0 + k2, s);
    }
    const double integral = detail::spectral_integral(ps, wk, rs.dk, g.dim());
    return std::sqrt(integral * g.sphere_factor() / std::pow(2.0 * pi, g.dim()));
}

}  // namespace zak
