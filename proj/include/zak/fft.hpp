#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "zak/grid.hpp"

namespace zak::detail {

// FFTW plan registry. Plan creation is not thread safe, execution through the
// new-array interface is. Plans are keyed by (dim, m, sign) and reused for all
// grids of the same shape.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    void transform(int dim, std::size_t m, complexd* data, int sign) {
        fftw_plan plan = get_plan(dim, m, sign);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get_plan(int dim, std::size_t m, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(dim, m, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::size_t n = 1;
        for (int i = 0; i < dim; ++i) n *= m;
        std::vector<complexd> buf(n);
        int dims[3] = {static_cast<int>(m), static_cast<int>(m), static_cast<int>(m)};
        fftw_plan plan = fftw_plan_dft(dim, dims, reinterpret_cast<fftw_complex*>(buf.data()),
                                       reinterpret_cast<fftw_complex*>(buf.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw Error("fftw plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans_;
};

inline void fft_forward(const Grid& g, std::vector<complexd>& data) {
    FftPlans::instance().transform(g.dim(), g.points_per_axis(), data.data(), FFTW_FORWARD);
}

inline void fft_backward(const Grid& g, std::vector<complexd>& data) {
    FftPlans::instance().transform(g.dim(), g.points_per_axis(), data.data(), FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(g.size());
    for (auto& z : data) z *= scale;
}

// |k|^2 for the flattened index of a periodic grid
inline double ksq_at(const Grid& g, std::size_t idx) {
    const auto& k = g.wavenumbers();
    const std::size_t m = g.points_per_axis();
    double s = 0.0;
    std::size_t rem = idx;
    for (int ax = 0; ax < g.dim(); ++ax) {
        s += k[rem % m] * k[rem % m];
        rem /= m;
    }
    return s;
}

// apply a multiplier phi(|k|^2) in Fourier space, in place
template <class Phi>
void apply_multiplier(const Grid& g, std::vector<complexd>& data, Phi&& phi) {
    fft_forward(g, data);
    const std::size_t m = g.points_per_axis();
    const auto& kax = g.wavenumbers();
    const std::size_t n = data.size();
    // walk indices axis-by-axis to avoid recomputing |k|^2 from scratch
    if (g.dim() == 1) {
        for (std::size_t i = 0; i < n; ++i) data[i] *= phi(kax[i] * kax[i]);
    } else if (g.dim() == 2) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double k2i = kax[i] * kax[i];
            for (std::size_t j = 0; j < m; ++j, ++idx) data[idx] *= phi(k2i + kax[j] * kax[j]);
        }
    } else {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double k2i = kax[i] * kax[i];
            for (std::size_t j = 0; j < m; ++j) {
                const double k2ij = k2i + kax[j] * kax[j];
                for (std::size_t l = 0; l < m; ++l, ++idx) data[idx] *= phi(k2ij + kax[l] * kax[l]);
            }
        }
    }
    fft_backward(g, data);
}

}  // namespace zak::detail
