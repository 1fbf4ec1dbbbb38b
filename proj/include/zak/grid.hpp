#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace zak {

using complexd = std::complex<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ResonanceError : Error {
    using Error::Error;
};
struct BracketError : Error {
    using Error::Error;
};
struct ContinuationError : Error {
    double a_reached;
    ContinuationError(const std::string& msg, double a) : Error(msg), a_reached(a) {}
};
struct SingularRelationError : Error {
    using Error::Error;
};
struct FitError : Error {
    using Error::Error;
};

enum class GridKind { radial, periodic_box };

// Spatial grid. Radial grids are staggered: nodes sit at r_j = (j+1/2) h so no
// node coincides with the origin and even-parity ghost values are exact
// reflections. Periodic grids are uniform tensor grids x_i = i h on [0, L)^d.
class Grid {
public:
    static std::shared_ptr<const Grid> radial(int dim, double r_max, std::size_t m) {
        if (dim < 1 || dim > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
        if (m < 16) throw ConfigError("grid needs at least 16 points");
        if (r_max <= 0) throw ConfigError("r_max must be positive");
        auto g = std::shared_ptr<Grid>(new Grid());
        g->kind_ = GridKind::radial;
        g->dim_ = dim;
        g->extent_ = r_max;
        g->m_ = m;
        g->h_ = r_max / static_cast<double>(m);
        g->nodes_.resize(m);
        for (std::size_t j = 0; j < m; ++j) g->nodes_[j] = (j + 0.5) * g->h_;
        return g;
    }

    static std::shared_ptr<const Grid> periodic(int dim, double length, std::size_t m) {
        if (dim < 1 || dim > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
        if (m < 16) throw ConfigError("grid needs at least 16 points per axis");
        if (length <= 0) throw ConfigError("box length must be positive");
        auto g = std::shared_ptr<Grid>(new Grid());
        g->kind_ = GridKind::periodic_box;
        g->dim_ = dim;
        g->extent_ = length;
        g->m_ = m;
        g->h_ = length / static_cast<double>(m);
        g->wavenumbers_.resize(m);
        const double dk = 2.0 * 3.14159265358979323846 / length;
        for (std::size_t i = 0; i < m; ++i) {
            const auto si = static_cast<long>(i);
            const long half = static_cast<long>(m) / 2;
            const long kidx = (si <= half) ? si : si - static_cast<long>(m);
            g->wavenumbers_[i] = dk * static_cast<double>(kidx);
        }
        return g;
    }

    GridKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double extent() const { return extent_; }
    std::size_t points_per_axis() const { return m_; }
    double h() const { return h_; }

    // total number of degrees of freedom
    std::size_t size() const {
        if (kind_ == GridKind::radial) return m_;
        std::size_t n = 1;
        for (int i = 0; i < dim_; ++i) n *= m_;
        return n;
    }

    const std::vector<double>& radii() const {
        if (kind_ != GridKind::radial) throw Error("radii() on non-radial grid");
        return nodes_;
    }
    // per-axis wavenumbers in FFT storage order
    const std::vector<double>& wavenumbers() const {
        if (kind_ != GridKind::periodic_box) throw Error("wavenumbers() on non-periodic grid");
        return wavenumbers_;
    }

    // surface area of the unit sphere times radial measure constant:
    // 2 (d=1, even functions), 2*pi (d=2), 4*pi (d=3)
    double sphere_factor() const {
        const double pi = 3.14159265358979323846;
        switch (dim_) {
            case 1: return 2.0;
            case 2: return 2.0 * pi;
            default: return 4.0 * pi;
        }
    }

private:
    Grid() = default;
    GridKind kind_ = GridKind::radial;
    int dim_ = 1;
    double extent_ = 0;
    std::size_t m_ = 0;
    double h_ = 0;
    std::vector<double> nodes_;
    std::vector<double> wavenumbers_;
};

using GridPtr = std::shared_ptr<const Grid>;

template <class T>
struct FieldT {
    GridPtr grid;
    std::vector<T> v;

    FieldT() = default;
    explicit FieldT(GridPtr g, T fill = T{}) : grid(std::move(g)), v(grid->size(), fill) {}
    FieldT(GridPtr g, std::vector<T> values) : grid(std::move(g)), v(std::move(values)) {
        if (v.size() != grid->size()) throw Error("field length does not match grid");
    }

    std::size_t size() const { return v.size(); }
    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }
};

using RField = FieldT<double>;
using CField = FieldT<complexd>;

inline void check_same_grid(const GridPtr& a, const GridPtr& b) {
    if (a.get() != b.get()) throw Error("fields live on different grids");
}

template <class F>
RField make_radial_field(const GridPtr& g, F&& f) {
    RField out(g);
    const auto& r = g->radii();
    for (std::size_t j = 0; j < r.size(); ++j) out.v[j] = f(r[j]);
    return out;
}

template <class F>
CField make_radial_cfield(const GridPtr& g, F&& f) {
    CField out(g);
    const auto& r = g->radii();
    for (std::size_t j = 0; j < r.size(); ++j) out.v[j] = f(r[j]);
    return out;
}

// evaluate f(x) on a periodic tensor grid; f takes a pointer to dim coordinates
template <class F>
CField make_periodic_cfield(const GridPtr& g, F&& f) {
    CField out(g);
    const std::size_t m = g->points_per_axis();
    const int d = g->dim();
    const double h = g->h();
    double x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        std::size_t rem = idx;
        for (int ax = d - 1; ax >= 0; --ax) {
            x[ax] = static_cast<double>(rem % m) * h;
            rem /= m;
        }
        out.v[idx] = f(x);
    }
    return out;
}

template <class F>
RField make_periodic_field(const GridPtr& g, F&& f) {
    RField out(g);
    const std::size_t m = g->points_per_axis();
    const int d = g->dim();
    const double h = g->h();
    double x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        std::size_t rem = idx;
        for (int ax = d - 1; ax >= 0; --ax) {
            x[ax] = static_cast<double>(rem % m) * h;
            rem /= m;
        }
        out.v[idx] = f(x);
    }
    return out;
}

// even-parity extrapolation of a staggered radial field to r = 0, O(h^4)
template <class T>
T origin_value(const FieldT<T>& f) {
    if (f.size() < 2) throw Error("field too short");
    return (T(9.0) * f.v[0] - f.v[1]) / T(8.0);
}

}  // namespace zak
