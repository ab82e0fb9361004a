#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "model.hpp"
#include "steady_state.hpp"

namespace quadom {

using Matrix6c = Eigen::Matrix<cplx, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector6c = Eigen::Matrix<cplx, 6, 1>;

// Linearized pair-basis fluctuation system d/dt u = M u + noise, with
// u = (c, c+, n, d, d+, m) fluctuations and diagonal diffusion gamma.
struct DriftSystem {
    Matrix6c M;           // rad/s
    Vector6d gamma_diag;  // rad/s, all non-negative
    SteadyState steady;
};

// All matrix entries transcribed from the linearized generator; omega/Omega are
// the frame (bare) frequencies, the zeta/chi/beta shifts carry the couplings.
inline DriftSystem build_drift(const SystemParams& p, const DerivedParams& dp,
                               const SteadyState& s) {
    const double w = p.omega_bare;
    const double W = p.Omega_bare;
    const double n = s.n_bar;
    const double m = s.m_bar;
    const double b = dp.beta;
    const double z = dp.zeta;
    const double x = dp.chi;
    const cplx I(0.0, 1.0);

    Matrix6c M = Matrix6c::Zero();
    // photon-pair row and its conjugate image
    M(0, 0) = I * 2.0 * (w - z * m) - p.kappa;
    M(0, 2) = -I * b * m;
    M(0, 3) = I * b * (n + 0.5);
    M(0, 4) = I * b * (n + 0.5);
    M(0, 5) = -I * b * (n + 0.5);
    M(1, 1) = -I * 2.0 * (w - z * m) - p.kappa;
    M(1, 2) = I * b * m;
    M(1, 3) = -I * b * (n + 0.5);
    M(1, 4) = -I * b * (n + 0.5);
    M(1, 5) = I * b * (n + 0.5);
    // photon number row
    M(2, 0) = I * 2.0 * b * m;
    M(2, 1) = -I * 2.0 * b * m;
    M(2, 2) = -p.kappa;
    // phonon-pair row and its conjugate image
    M(3, 0) = I * b * (m + 0.5);
    M(3, 1) = I * b * (m + 0.5);
    M(3, 2) = -I * x * (m + 0.5);
    M(3, 3) = -I * 2.0 * (W + z * n) - p.Gamma;
    M(3, 5) = -I * x * n;
    M(4, 0) = -I * b * (m + 0.5);
    M(4, 1) = -I * b * (m + 0.5);
    M(4, 2) = I * x * (m + 0.5);
    M(4, 4) = I * 2.0 * (W + z * n) - p.Gamma;
    M(4, 5) = I * x * n;
    // phonon number row
    M(5, 3) = I * 2.0 * x * n;
    M(5, 4) = -I * 2.0 * x * n;
    M(5, 5) = -p.Gamma;

    DriftSystem ds;
    ds.M = M;
    const double dmag = std::abs(s.d_bar);
    ds.gamma_diag << n * p.kappa, n * p.kappa, 4.0 * n * p.kappa,
                     2.0 * dmag * p.Gamma, 2.0 * dmag * p.Gamma, 4.0 * dmag * p.Gamma;
    ds.steady = s;
    return ds;
}

enum class StabilityState { stable, marginal, unstable };

struct StabilityReport {
    Vector6c eigenvalues;
    bool stable = false;      // all real parts strictly negative
    double margin = 0.0;      // max real part, rad/s
    StabilityState state = StabilityState::unstable;
};

inline StabilityReport stability(const DriftSystem& ds) {
    Eigen::ComplexEigenSolver<Matrix6c> solver(ds.M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw eigensolver_error("dense eigensolver failed on the 6x6 drift matrix");

    StabilityReport r;
    r.eigenvalues = solver.eigenvalues();
    r.margin = r.eigenvalues.real().maxCoeff();
    r.stable = r.margin < 0.0;
    const double marginal_band = 1e-12 * ds.M.norm();
    if (std::abs(r.margin) <= marginal_band) r.state = StabilityState::marginal;
    else r.state = r.stable ? StabilityState::stable : StabilityState::unstable;
    return r;
}

// A steady state imposed from outside (map scans, threshold searches); the pair
// amplitude follows the resonant constraint |d| = sqrt(m^2-m)/2 when m >= 1.
inline SteadyState imposed_state(double n_bar, double m_bar) {
    SteadyState s;
    s.n_bar = n_bar;
    s.m_bar = m_bar;
    s.d_bar = m_bar >= 1.0 ? cplx(0.5 * std::sqrt(m_bar * m_bar - m_bar), 0.0)
                           : cplx(0.0, 0.0);
    return s;
}

struct StabilityMap {
    std::vector<double> n_bars;   // axis 1 (rows)
    std::vector<double> m_bars;   // axis 2 (columns)
    std::vector<StabilityState> state;  // row-major [i*m_bars.size()+j]
    std::vector<double> margin;         // same layout; NaN where the cell failed
    std::vector<std::string> cell_error;  // empty when the cell solved

    bool stable_at(std::size_t i, std::size_t j) const {
        return state[i * m_bars.size() + j] == StabilityState::stable;
    }
};

// Per-cell eigenvalue stability at imposed populations. Eigensolver failures
// are recorded per cell so one bad corner cannot abort the whole map.
inline StabilityMap stability_map(const SystemParams& p, const DerivedParams& dp,
                                  const std::vector<double>& n_bars,
                                  const std::vector<double>& m_bars) {
    StabilityMap map;
    map.n_bars = n_bars;
    map.m_bars = m_bars;
    const std::size_t total = n_bars.size() * m_bars.size();
    map.state.assign(total, StabilityState::unstable);
    map.margin.assign(total, std::numeric_limits<double>::quiet_NaN());
    map.cell_error.assign(total, {});
    for (std::size_t i = 0; i < n_bars.size(); ++i) {
        for (std::size_t j = 0; j < m_bars.size(); ++j) {
            const std::size_t k = i * m_bars.size() + j;
            try {
                const auto ds = build_drift(p, dp, imposed_state(n_bars[i], m_bars[j]));
                const auto rep = stability(ds);
                map.state[k] = rep.state;
                map.margin[k] = rep.margin;
            } catch (const error& e) {
                map.cell_error[k] = e.what();
            }
        }
    }
    return map;
}

// Smallest coupling (within [eps_lo, eps_hi]) at which the margin crosses zero
// at fixed imposed populations; bisection on epsilon with all derived
// quantities rebuilt per step. Requires a genuine sign change on the interval.
inline double instability_threshold_epsilon(SystemParams p, double n_bar, double m_bar,
                                            double eps_lo, double eps_hi,
                                            int max_iter = 200) {
    auto margin_at = [&](double eps) {
        p.epsilon = eps;
        const auto dp = derive_params(p);
        return stability(build_drift(p, dp, imposed_state(n_bar, m_bar))).margin;
    };
    double flo = margin_at(eps_lo), fhi = margin_at(eps_hi);
    if (!(flo < 0.0) || !(fhi > 0.0))
        throw no_convergence("margin does not change sign on the epsilon interval: "
                             "margin(lo)=" + std::to_string(flo) +
                             ", margin(hi)=" + std::to_string(fhi));
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (eps_lo + eps_hi);
        if (margin_at(mid) < 0.0) eps_lo = mid; else eps_hi = mid;
        if ((eps_hi - eps_lo) <= 1e-12 * eps_hi) break;
    }
    return 0.5 * (eps_lo + eps_hi);
}

} // namespace quadom
