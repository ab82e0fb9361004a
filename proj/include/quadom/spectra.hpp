#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace quadom {

// One fitted Gaussian line: s * exp[-(w - omega)^2 / delta^2].
struct GaussianPeak {
    double s_j = 0.0;            // amplitude above the local baseline
    double omega_j = 0.0;        // center, rad/s
    double delta_omega_j = 0.0;  // spread, rad/s
    double baseline = 0.0;       // fitted local offset
    double fit_residual = 0.0;   // rms misfit over the fit window, relative
    bool overlapping = false;    // fit window intersected a neighbour's window
};

// Input-weight bookkeeping variants for the output spectral density.
//  - fifth_weight_on_pair: attach the half-quantum (m+1/2) input weight to the
//    phonon-pair channel |S14|^2 (duplicating it) instead of the phonon-number
//    channel |S16|^2 that the input correlation table implies. Default off.
//  - thermal_input: use the thermal occupancy of the mechanical bath in the
//    weights instead of the steady-state phonon population. Default off.
struct WeightOptions {
    bool fifth_weight_on_pair = false;
    bool thermal_input = false;
    double n_thermal = 0.0;  // used only when thermal_input is set
};

struct Spectrum {
    std::vector<double> freq_grid;  // w, rad/s, strictly increasing
    std::vector<double> s_cc;       // output PSD at w (NaN where the solve failed)
    std::vector<double> s_aa;       // recovered quadrature PSD at x = w/2
    std::vector<GaussianPeak> peaks;
    WeightOptions mode_flags;
    int warnings = 0;  // count of grid points skipped as singular
};

// S(w) = I - sqrt(gamma) (M - i w I)^(-1) sqrt(gamma).
inline Matrix6c scattering_matrix(const DriftSystem& ds, double w) {
    Matrix6c A = ds.M;
    for (int i = 0; i < 6; ++i) A(i, i) -= cplx(0.0, w);
    Eigen::FullPivLU<Matrix6c> lu(A);
    if (!lu.isInvertible())
        throw singular_matrix_error("drift resolvent singular at w=" + std::to_string(w));
    const Vector6c root_gamma = ds.gamma_diag.array().sqrt().cast<cplx>();
    Matrix6c S = root_gamma.asDiagonal() * lu.inverse() * root_gamma.asDiagonal();
    return Matrix6c::Identity() - S;
}

// Input correlation weights per channel (c, c+, n, d, d+, m); the first row of
// the table applies for w > 0, the second for w < 0.
inline std::array<double, 6> input_weights(double m_eff, bool positive_w) {
    if (positive_w) return {1.0, 0.0, 0.5, m_eff + 1.0, m_eff, m_eff + 0.5};
    return {0.0, 1.0, 0.5, m_eff, m_eff + 1.0, m_eff + 0.5};
}

namespace detail {

inline double spectrum_point(const DriftSystem& ds, double w,
                             const std::array<double, 6>& weights,
                             bool fifth_on_pair) {
    const Matrix6c S = scattering_matrix(ds, w);
    std::array<double, 6> wts = weights;
    if (fifth_on_pair) {
        wts[3] += wts[5];  // ride the half-quantum weight on the pair channel
        wts[5] = 0.0;
    }
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) acc += wts[static_cast<std::size_t>(j)] * std::norm(S(0, j));
    return acc;
}

} // namespace detail

// Output spectral density on the grid. Singular grid points (possible only on
// the margin = 0 loci) become NaN gaps and bump the warning counter instead of
// aborting the sweep. Grid-parallel when jobs > 1; assembly is order-stable.
inline Spectrum output_spectrum(const DriftSystem& ds, const std::vector<double>& grid,
                                const WeightOptions& opt = {}, unsigned jobs = 1) {
    Spectrum spec;
    spec.freq_grid = grid;
    spec.s_cc.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    spec.mode_flags = opt;

    const double m_eff = opt.thermal_input ? opt.n_thermal : ds.steady.m_bar;

    std::vector<int> failed(jobs > 1 ? jobs : 1, 0);
    auto worker = [&](std::size_t begin, std::size_t end, int slot) {
        for (std::size_t i = begin; i < end; ++i) {
            const double w = grid[i];
            try {
                spec.s_cc[i] = detail::spectrum_point(
                    ds, w, input_weights(m_eff, w >= 0.0), opt.fifth_weight_on_pair);
            } catch (const singular_matrix_error&) {
                ++failed[static_cast<std::size_t>(slot)];
            }
        }
    };

    if (jobs <= 1 || grid.size() < 64) {
        worker(0, grid.size(), 0);
    } else {
        const std::size_t chunk = (grid.size() + jobs - 1) / jobs;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            const std::size_t b = t * chunk;
            if (b >= grid.size()) break;
            pool.emplace_back(worker, b, std::min(grid.size(), b + chunk),
                              static_cast<int>(t));
        }
        for (auto& th : pool) th.join();
    }
    for (int f : failed) spec.warnings += f;
    return spec;
}

// Frequency grid: uniform base over (0, w_max] plus deterministic log-spaced
// refinement clusters around every underdamped eigenfrequency supplied, so
// lines as narrow as the mechanical loss rate are actually sampled.
inline std::vector<double> frequency_grid(const std::vector<Vector6c>& eig_sets,
                                          double w_max,
                                          std::size_t n_uniform = std::size_t{1} << 14,
                                          std::size_t per_side = 24) {
    if (!(w_max > 0.0)) throw invalid_parameter("w_max", "grid upper edge must be positive");
    std::vector<double> g;
    g.reserve(n_uniform + eig_sets.size() * 6 * (2 * per_side + 1));
    const double dw = w_max / static_cast<double>(n_uniform);
    for (std::size_t i = 1; i <= n_uniform; ++i) g.push_back(dw * static_cast<double>(i));

    for (const auto& eig : eig_sets) {
        for (int k = 0; k < 6; ++k) {
            const double wc = eig[k].imag();
            if (!(wc > 0.0) || wc > w_max) continue;
            const double hw = std::max(std::abs(eig[k].real()), 1e-12 * w_max);
            g.push_back(wc);
            for (std::size_t j = 0; j < per_side; ++j) {
                // offsets from hw*1e-3 out to hw*1e+2, log-spaced
                const double off = hw * std::pow(10.0, -3.0 + 5.0 *
                    static_cast<double>(j) / static_cast<double>(per_side - 1));
                if (wc - off > 0.0) g.push_back(wc - off);
                if (wc + off <= w_max) g.push_back(wc + off);
            }
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(), [](double a, double b) {
                return std::abs(a - b) <= 1e-15 * std::max(std::abs(a), std::abs(b));
            }),
            g.end());
    return g;
}

// Relative L2 distance ||a-b|| / ||a|| over finite samples.
inline double relative_l2_difference(const std::vector<double>& a,
                                     const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct FitOptions {
    double prominence = 0.02;   // candidate height above baseline, relative to range
    int max_peaks = 16;
    int iterations = 80;
};

namespace detail {

// Damped Gauss-Newton for y = b + s exp[-(w-c)^2/d^2] on a window.
struct GaussFit {
    double s, c, d, b, residual;
    bool ok;
};

inline GaussFit fit_gaussian_window(const std::vector<double>& w,
                                    const std::vector<double>& y,
                                    std::size_t lo, std::size_t hi,
                                    double s0, double c0, double d0, double b0,
                                    int iterations) {
    Eigen::Vector4d q(s0, c0, d0, b0);
    const auto count = static_cast<Eigen::Index>(hi - lo);
    GaussFit out{s0, c0, d0, b0, std::numeric_limits<double>::infinity(), false};
    if (count < 7) return out;

    double lambda = 1e-3;
    auto cost = [&](const Eigen::Vector4d& v) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double e = (w[i] - v[1]) / v[2];
            const double r = y[i] - (v[3] + v[0] * std::exp(-e * e));
            acc += r * r;
        }
        return acc;
    };
    double best = cost(q);
    for (int it = 0; it < iterations; ++it) {
        Eigen::Matrix4d JTJ = Eigen::Matrix4d::Zero();
        Eigen::Vector4d JTr = Eigen::Vector4d::Zero();
        for (std::size_t i = lo; i < hi; ++i) {
            const double e = (w[i] - q[1]) / q[2];
            const double g = std::exp(-e * e);
            const double r = y[i] - (q[3] + q[0] * g);
            Eigen::Vector4d J;
            J << g, q[0] * g * 2.0 * e / q[2], q[0] * g * 2.0 * e * e / q[2], 1.0;
            JTJ += J * J.transpose();
            JTr += J * r;
        }
        bool stepped = false;
        for (int damp = 0; damp < 12; ++damp) {
            Eigen::Matrix4d A = JTJ;
            A.diagonal() += lambda * JTJ.diagonal().cwiseMax(1e-30);
            const Eigen::Vector4d step = A.ldlt().solve(JTr);
            const Eigen::Vector4d trial = q + step;
            if (trial[0] > 0.0 && trial[2] > 0.0) {
                const double c_trial = cost(trial);
                if (c_trial < best) {
                    q = trial;
                    best = c_trial;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    stepped = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!stepped) break;
    }
    const double scale = std::max({std::abs(q[0]), std::abs(q[3]), 1e-300});
    out = {q[0], q[1], q[2], q[3],
           std::sqrt(best / static_cast<double>(count)) / scale, true};
    return out;
}

} // namespace detail

// Detect and fit isolated Gaussian lines in s_cc. Local maxima above a
// prominence threshold seed half-width estimates; each seed is refined on a
// window of +-3 initial half-widths (at least 7 samples). Peaks come back
// sorted by center; windows that intersect a neighbour are flagged overlapping.
inline std::vector<GaussianPeak> fit_peaks(const Spectrum& spec,
                                           const FitOptions& opt = {}) {
    const auto& w = spec.freq_grid;
    const auto& y = spec.s_cc;
    const std::size_t n = w.size();
    std::vector<GaussianPeak> peaks;
    if (n < 7) return peaks;

    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (double v : y)
        if (std::isfinite(v)) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
    const double range = y_max - y_min;
    if (!(range > 1e-12 * std::max(1.0, std::abs(y_max)))) return peaks;  // flat

    // candidate local maxima, strongest first
    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!std::isfinite(y[i])) continue;
        if (y[i] >= y[i - 1] && y[i] > y[i + 1] &&
            (y[i] - y_min) > opt.prominence * range)
            cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(),
              [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

    std::vector<std::pair<double, double>> windows;
    for (std::size_t idx : cand) {
        if (static_cast<int>(peaks.size()) >= opt.max_peaks) break;
        // skip maxima inside an already-fitted window (same physical line)
        bool inside = false;
        for (const auto& win : windows)
            if (w[idx] >= win.first && w[idx] <= win.second) { inside = true; break; }
        if (inside) continue;

        // half-height walk for the initial spread
        const double half = y_min + 0.5 * (y[idx] - y_min);
        std::size_t l = idx, r = idx;
        while (l > 0 && std::isfinite(y[l]) && y[l] > half) --l;
        while (r + 1 < n && std::isfinite(y[r]) && y[r] > half) ++r;
        const double half_width =
            std::max(0.5 * (w[r] - w[l]), w[idx] * 1e-12 + 1e-300);
        const double d0 = half_width / std::sqrt(std::log(2.0));

        // fit window: +-3 initial half-widths, at least 7 samples
        const double wlo = w[idx] - 3.0 * half_width, whi = w[idx] + 3.0 * half_width;
        std::size_t lo = static_cast<std::size_t>(
            std::lower_bound(w.begin(), w.end(), wlo) - w.begin());
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(w.begin(), w.end(), whi) - w.begin());
        while (hi - lo < 7 && (lo > 0 || hi < n)) {
            if (lo > 0) --lo;
            if (hi < n) ++hi;
        }
        if (hi - lo < 7) continue;

        const auto fit = detail::fit_gaussian_window(w, y, lo, hi, y[idx] - y_min,
                                                     w[idx], d0, y_min, opt.iterations);
        if (!fit.ok || !(fit.s > 0.0) || !(fit.d > 0.0)) continue;
        if (fit.c < w.front() || fit.c > w.back()) continue;

        GaussianPeak pk;
        pk.s_j = fit.s;
        pk.omega_j = fit.c;
        pk.delta_omega_j = fit.d;
        pk.baseline = fit.b;
        pk.fit_residual = fit.residual;
        peaks.push_back(pk);
        windows.emplace_back(w[lo], w[hi - 1]);
    }

    // overlap flags on the fitted windows (well-isolated assumption check)
    for (std::size_t i = 0; i < peaks.size(); ++i)
        for (std::size_t j = i + 1; j < peaks.size(); ++j) {
            const double gap = std::abs(peaks[i].omega_j - peaks[j].omega_j);
            const double reach = 3.0 * (peaks[i].delta_omega_j + peaks[j].delta_omega_j);
            if (gap < reach) peaks[i].overlapping = peaks[j].overlapping = true;
        }

    std::sort(peaks.begin(), peaks.end(),
              [](const GaussianPeak& a, const GaussianPeak& b) {
                  return a.omega_j < b.omega_j;
              });
    return peaks;
}

// Quadrature PSD recovered from the fitted lines, evaluated at frequency x:
//   S_AA(x) = 2 pi sqrt(pi) sum_j (s_j omega_j^2 / delta_j)
//             exp[-(x - omega_j/2)^2 / (2 delta_j^2)].
// The constant already absorbs the quadrature normalization; no extra factor.
inline double s_aa_value(const std::vector<GaussianPeak>& peaks, double x) {
    double acc = 0.0;
    for (const auto& pk : peaks) {
        const double e = x - 0.5 * pk.omega_j;
        acc += pk.s_j * pk.omega_j * pk.omega_j / pk.delta_omega_j *
               std::exp(-e * e / (2.0 * pk.delta_omega_j * pk.delta_omega_j));
    }
    return 2.0 * pi * std::sqrt(pi) * acc;
}

// Fill spec.s_aa on the halved-frequency axis: row i holds S_AA(freq_grid[i]/2),
// so the recovered line for a density peak at omega_j sits on the same rows.
inline void fill_s_aa(Spectrum& spec) {
    spec.s_aa.resize(spec.freq_grid.size());
    for (std::size_t i = 0; i < spec.freq_grid.size(); ++i)
        spec.s_aa[i] = s_aa_value(spec.peaks, 0.5 * spec.freq_grid[i]);
}

} // namespace quadom
