#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "zak/diagnostics.hpp"
#include "zak/grid.hpp"
#include "zak/operators.hpp"
#include "zak/state.hpp"

namespace zak {

// ---------------------------------------------------------------------------
// Time steppers: symmetric Strang composition
//   P(dt/2) W(dt/2) K(dt) W(dt/2) P(dt/2)
// P: potential phase (exact pointwise rotation). K: free Schroedinger flow.
// W: wave flow n_tt = Delta(n + |psi|^2) with |psi|^2 frozen; psi is constant
// along W so the frozen-source flow is the exact subflow. On periodic grids
// K and W are exact spectral maps; on radial grids both are Crank-Nicolson
// with the flux-form Laplacian, which conserves the discrete psi mass exactly.
// ---------------------------------------------------------------------------

class PeriodicStepper {
public:
    PeriodicStepper(const GridPtr& g, double dt) : grid_(g), dt_(dt) {
        if (g->kind() != GridKind::periodic_box)
            throw Error("PeriodicStepper needs a periodic grid");
    }

    void step(WaveState& s) const {
        potential_half(s);
        wave_half(s);
        kinetic_full(s);
        wave_half(s);
        potential_half(s);
        s.t += dt_;
    }

private:
    void potential_half(WaveState& s) const {
        const double hdt = 0.5 * dt_;
        for (std::size_t i = 0; i < s.psi.size(); ++i) {
            const double ph = -s.n.v[i] * hdt;
            s.psi.v[i] *= complexd(std::cos(ph), std::sin(ph));
        }
    }

    void kinetic_full(WaveState& s) const {
        detail::fft_forward(*grid_, s.psi.v);
        const std::size_t m = grid_->points_per_axis();
        const auto& kax = grid_->wavenumbers();
        for (std::size_t idx = 0; idx < s.psi.size(); ++idx) {
            double k2 = 0.0;
            std::size_t rem = idx;
            for (int ax = 0; ax < grid_->dim(); ++ax) {
                k2 += kax[rem % m] * kax[rem % m];
                rem /= m;
            }
            const double ph = -k2 * dt_;
            s.psi.v[idx] *= complexd(std::cos(ph), std::sin(ph));
        }
        detail::fft_backward(*grid_, s.psi.v);
    }

    void wave_half(WaveState& s) const {
        const double dth = 0.5 * dt_;
        const std::size_t nn = s.n.size();
        std::vector<complexd> nh(nn), nth(nn), sh(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            nh[i] = complexd(s.n.v[i]);
            nth[i] = complexd(s.nt.v[i]);
            sh[i] = complexd(std::norm(s.psi.v[i]));
        }
        detail::fft_forward(*grid_, nh);
        detail::fft_forward(*grid_, nth);
        detail::fft_forward(*grid_, sh);
        const std::size_t m = grid_->points_per_axis();
        const auto& kax = grid_->wavenumbers();
        for (std::size_t idx = 0; idx < nn; ++idx) {
            double k2 = 0.0;
            std::size_t rem = idx;
            for (int ax = 0; ax < grid_->dim(); ++ax) {
                k2 += kax[rem % m] * kax[rem % m];
                rem /= m;
            }
            const double k = std::sqrt(k2);
            const double c = std::cos(k * dth);
            const double snc = (k > 0) ? std::sin(k * dth) / k : dth;
            const complexd u = nh[idx] + sh[idx];
            const complexd u1 = u * c + nth[idx] * snc;
            nth[idx] = -u * (k * std::sin(k * dth)) + nth[idx] * c;
            nh[idx] = u1 - sh[idx];
        }
        detail::fft_backward(*grid_, nh);
        detail::fft_backward(*grid_, nth);
        for (std::size_t i = 0; i < nn; ++i) {
            s.n.v[i] = nh[i].real();
            s.nt.v[i] = nth[i].real();
        }
    }

    GridPtr grid_;
    double dt_;
};

class RadialStepper {
public:
    RadialStepper(const GridPtr& g, double dt) : grid_(g), dt_(dt) {
        if (g->kind() != GridKind::radial) throw Error("RadialStepper needs a radial grid");
        const auto& st = detail::StencilCache::flux(*g);
        const std::size_t m = g->size();
        const complexd z(0.0, 0.5 * dt);
        kin_diag_.resize(m);
        for (std::size_t j = 0; j < m; ++j) kin_diag_[j] = 1.0 - z * st.diag[j];
        const double al = 0.25 * (0.5 * dt) * (0.5 * dt);
        wav_diag_.resize(m);
        for (std::size_t j = 0; j < m; ++j) wav_diag_[j] = 1.0 - al * st.diag[j];
    }

    void step(WaveState& s) const {
        potential_half(s);
        wave_half(s);
        kinetic_full(s);
        wave_half(s);
        potential_half(s);
        s.t += dt_;
    }

private:
    void potential_half(WaveState& s) const {
        const double hdt = 0.5 * dt_;
        for (std::size_t i = 0; i < s.psi.size(); ++i) {
            const double ph = -s.n.v[i] * hdt;
            s.psi.v[i] *= complexd(std::cos(ph), std::sin(ph));
        }
    }

    // Crank-Nicolson (I - i dt/2 L) psi+ = (I + i dt/2 L) psi
    void kinetic_full(WaveState& s) const {
        const auto& st = detail::StencilCache::flux(*grid_);
        const std::size_t m = s.psi.size();
        std::vector<complexd> rhs(m), lap(m);
        st.apply(s.psi.v, lap);
        const complexd z(0.0, 0.5 * dt_);
        for (std::size_t j = 0; j < m; ++j) rhs[j] = s.psi.v[j] + z * lap[j];
        std::vector<complexd> diag = kin_diag_;
        for (std::size_t i = 1; i < m; ++i) {
            const complexd w = (-z * st.lower[i]) / diag[i - 1];
            diag[i] -= w * (-z * st.upper[i - 1]);
            rhs[i] -= w * rhs[i - 1];
        }
        rhs[m - 1] /= diag[m - 1];
        for (std::size_t i = m - 1; i-- > 0;)
            rhs[i] = (rhs[i] - (-z * st.upper[i]) * rhs[i + 1]) / diag[i];
        s.psi.v = std::move(rhs);
    }

    // Crank-Nicolson for n' = nt, nt' = L(n + source) over dt/2, source frozen
    void wave_half(WaveState& s) const {
        const auto& st = detail::StencilCache::flux(*grid_);
        const std::size_t m = s.n.size();
        const double dth = 0.5 * dt_;
        std::vector<double> rn(m), rhs(m), tmp(m), lap(m);
        for (std::size_t j = 0; j < m; ++j) rn[j] = s.n.v[j] + 0.5 * dth * s.nt.v[j];
        for (std::size_t j = 0; j < m; ++j)
            tmp[j] = rn[j] + s.n.v[j] + 2.0 * std::norm(s.psi.v[j]);
        st.apply(tmp, lap);
        for (std::size_t j = 0; j < m; ++j) rhs[j] = s.nt.v[j] + 0.5 * dth * lap[j];
        const double al = 0.25 * dth * dth;
        std::vector<double> diag = wav_diag_;
        for (std::size_t i = 1; i < m; ++i) {
            const double w = (-al * st.lower[i]) / diag[i - 1];
            diag[i] -= w * (-al * st.upper[i - 1]);
            rhs[i] -= w * rhs[i - 1];
        }
        rhs[m - 1] /= diag[m - 1];
        for (std::size_t i = m - 1; i-- > 0;)
            rhs[i] = (rhs[i] - (-al * st.upper[i]) * rhs[i + 1]) / diag[i];
        for (std::size_t j = 0; j < m; ++j) {
            s.n.v[j] = rn[j] + 0.5 * dth * rhs[j];
            s.nt.v[j] = rhs[j];
        }
    }

    GridPtr grid_;
    double dt_;
    std::vector<complexd> kin_diag_;
    std::vector<double> wav_diag_;
};

class Stepper {
public:
    Stepper(const GridPtr& g, double dt) {
        if (g->kind() == GridKind::periodic_box)
            periodic_.emplace(g, dt);
        else
            radial_.emplace(g, dt);
    }
    void step(WaveState& s) const {
        if (periodic_)
            periodic_->step(s);
        else
            radial_->step(s);
    }

private:
    std::optional<PeriodicStepper> periodic_;
    std::optional<RadialStepper> radial_;
};

// ---------------------------------------------------------------------------
// Run driver
// ---------------------------------------------------------------------------

enum class StopReason { reached_t_end, blowup_threshold, resolved_scale, nan_detected };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::reached_t_end: return "t_end";
        case StopReason::blowup_threshold: return "blowup-stop";
        case StopReason::resolved_scale: return "resolved-scale-stop";
        default: return "nan-stop";
    }
}

struct EvolveOptions {
    double dt = 1e-4;
    double t_end = 1.0;
    std::size_t sample_every = 100;    // diagnostics cadence in steps
    std::size_t snapshot_every = 0;    // full-state snapshots; 0 disables
    double blowup_factor = 1e3;        // stop when ||grad psi|| grows by this factor
    bool resolved_scale_check = true;  // stop when sup|grad psi| h > 0.5
    std::vector<double> sobolev_ell;   // record the norm triple for these l
    bool homogeneous_pair = false;     // record |psi|_{Hdot1/2} and |n|_{L2}
    std::vector<double> ym_scales;     // modified-variance weights m
    bool variance = false;             // record the variance integrand and V(t)
    double boundary_decay_tol = 1e-10;
};

struct RunResult {
    DiagnosticSeries series;
    std::vector<WaveState> snapshots;
    StopReason stop_reason = StopReason::reached_t_end;
    double t_final = 0.0;
    bool boundary_decay_warning = false;
    WaveState final_state;
};

inline double grad_psi_l2(const WaveState& s) { return std::sqrt(grad_norm_sq(s.psi)); }

namespace detail {

inline double max_grad_times_h(const CField& psi) {
    const Grid& g = *psi.grid;
    if (g.kind() == GridKind::radial) {
        double mx = 0.0;
        for (std::size_t i = 0; i + 1 < psi.size(); ++i)
            mx = std::max(mx, std::abs(psi.v[i + 1] - psi.v[i]));
        return mx;
    }
    double mx = 0.0;
    const std::size_t m = g.points_per_axis();
    for (std::size_t i = 0; i + 1 < psi.size(); ++i)
        if ((i + 1) % m != 0) mx = std::max(mx, std::abs(psi.v[i + 1] - psi.v[i]));
    return mx;
}

}  // namespace detail

inline RunResult run(WaveState state, const EvolveOptions& opts) {
    if (opts.dt <= 0) throw ConfigError("dt must be positive");
    if (opts.t_end <= state.t) throw ConfigError("t_end must exceed the initial time");
    const GridPtr grid = state.grid();
    const bool radial = grid->kind() == GridKind::radial;
    Stepper stepper(grid, opts.dt);

    RunResult res;
    auto& cols = res.series.columns;
    cols = {"t", "mass", "hamiltonian", "grad_psi_l2", "n_l2", "v_l2", "sup_psi"};
    if (!radial) cols.insert(cols.end(), {"px", "py", "momentum_ang"});
    for (double ell : opts.sobolev_ell) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%g", ell);
        cols.push_back(std::string("psi_h") + buf);
        cols.push_back(std::string("n_h") + buf);
        cols.push_back(std::string("nt_h") + buf);
    }
    if (opts.homogeneous_pair) {
        cols.push_back("psi_hdot_half");
        cols.push_back("n_l2_hom");
    }
    if (opts.variance) {
        cols.push_back("variance_v");
        cols.push_back("variance_integrand");
    }
    for (std::size_t i = 0; i < opts.ym_scales.size(); ++i)
        cols.push_back("ym_" + std::to_string(i));

    const double grad0 = grad_psi_l2(state);
    if (opts.blowup_factor > 0 && opts.blowup_factor <= 1.0)
        throw ConfigError("blowup threshold must exceed the initial gradient norm");
    double variance_acc = 0.0;
    double last_integrand = 0.0;
    bool have_integrand = false;
    double last_sample_t = state.t;

    auto sample = [&](const WaveState& s) {
        std::vector<double> row;
        row.reserve(cols.size());
        row.push_back(s.t);
        row.push_back(l2_norm_sq(s.psi));
        row.push_back(hamiltonian(s));
        row.push_back(grad_psi_l2(s));
        row.push_back(l2_norm(s.n));
        double vl2;
        if (radial) {
            vl2 = l2_norm(recover_velocity(s.nt));
        } else {
            double acc = 0.0;
            for (const auto& comp : recover_velocity_periodic(s.nt)) acc += l2_norm_sq(comp);
            vl2 = std::sqrt(acc);
        }
        row.push_back(vl2);
        row.push_back(sup_abs(s.psi));
        if (!radial) {
            Momenta mom = momenta(s);
            row.push_back(mom.linear[0]);
            row.push_back(mom.linear[1]);
            row.push_back(mom.angular);
        }
        for (double ell : opts.sobolev_ell) {
            row.push_back(sobolev_norm(s.psi, ell + 0.5));
            row.push_back(sobolev_norm(s.n, ell));
            row.push_back(sobolev_norm(s.nt, ell - 1.0));
        }
        if (opts.homogeneous_pair) {
            row.push_back(sobolev_norm(s.psi, 0.5, true));
            row.push_back(l2_norm(s.n));
        }
        if (opts.variance) {
            RField m2(s.psi.grid);
            for (std::size_t j = 0; j < m2.size(); ++j) m2.v[j] = std::norm(s.psi.v[j]);
            const double quarter = 0.25 * quadrature(m2, 2);
            RField v = recover_velocity(s.nt);
            RField xvn(s.psi.grid);
            const auto& r = grid->radii();
            for (std::size_t j = 0; j < xvn.size(); ++j) xvn.v[j] = r[j] * v.v[j] * s.n.v[j];
            const double integrand = quadrature(xvn);
            if (have_integrand)
                variance_acc += 0.5 * (last_integrand + integrand) * (s.t - last_sample_t);
            last_integrand = integrand;
            have_integrand = true;
            row.push_back(quarter + variance_acc);
            row.push_back(integrand);
        }
        for (double mscale : opts.ym_scales) row.push_back(modified_variance_rate(s, mscale));
        last_sample_t = s.t;
        res.series.rows.push_back(std::move(row));
    };

    sample(state);
    if (opts.snapshot_every > 0) res.snapshots.push_back(state);

    WaveState last_finite = state;
    std::size_t step_count = 0;
    res.stop_reason = StopReason::reached_t_end;
    while (state.t < opts.t_end - 0.5 * opts.dt) {
        stepper.step(state);
        ++step_count;
        const bool sample_now = (step_count % opts.sample_every) == 0;
        const bool snapshot_now = opts.snapshot_every > 0 && (step_count % opts.snapshot_every) == 0;
        if (!sample_now && !snapshot_now) continue;

        if (!state.finite()) {
            res.stop_reason = StopReason::nan_detected;
            state = last_finite;
            break;
        }
        if (sample_now) {
            sample(state);
            last_finite = state;
            const double gr = grad_psi_l2(state);
            if (opts.blowup_factor > 1.0 && gr >= opts.blowup_factor * grad0) {
                res.stop_reason = StopReason::blowup_threshold;
                break;
            }
            if (opts.resolved_scale_check && detail::max_grad_times_h(state.psi) > 0.5) {
                res.stop_reason = StopReason::resolved_scale;
                break;
            }
            if (radial) {
                double edge = std::abs(state.psi.v.back());
                double peak = sup_abs(state.psi);
                if (edge > opts.boundary_decay_tol * std::max(peak, 1.0))
                    res.boundary_decay_warning = true;
            }
        }
        if (snapshot_now) res.snapshots.push_back(state);
    }
    res.t_final = state.t;
    res.final_state = std::move(state);
    return res;
}

}  // namespace zak
