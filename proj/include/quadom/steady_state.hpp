#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace quadom {


enum class Branch { resonant, anti_resonant, off_resonant };

inline const char* branch_name(Branch b) {
    switch (b) {
        case Branch::resonant: return "resonant";
        case Branch::anti_resonant: return "anti_resonant";
        default: return "off_resonant";
    }
}

// Mean steady-state populations and pair amplitude.
//
// residual is the max relative residual of the system the solver actually
// closed (off-resonant: both printed population equations; resonant: the drive
// line, the pair-constraint line and the pair-amplitude line). The resonant
// branch's remaining photon-balance line is algebraically incompatible with the
// other three whenever n_bar > 0 (its sign forces Im d_bar < 0 while the pair
// line forces Im d_bar > 0), so it cannot be part of any exactly solvable set;
// its relative mismatch is reported in balance_mismatch instead of being hidden
// in the residual.
struct SteadyState {
    double n_bar = 0.0;
    double m_bar = 0.0;
    cplx d_bar = {0.0, 0.0};
    double alpha_phase = 0.0;
    Branch branch = Branch::off_resonant;
    double residual = 0.0;
    double balance_mismatch = 0.0;           // resonant only; 0 elsewhere
    std::vector<double> candidates;          // other admissible scalar-equation roots
                                             // (m for off-resonant, n for resonant)
};

struct SolveOptions {
    double tol = 1e-12;             // scalar root tolerance (relative)
    double resonance_tol = 1e-6;    // |omega_eff - Omega_eff| <= tol*omega_eff
    int max_iter = 200;
};

inline Branch classify_branch(const DerivedParams& d, double resonance_tol = 1e-6) {
    const double scale = resonance_tol * d.omega_eff;
    if (std::abs(d.omega_eff - d.Omega_eff) <= scale) return Branch::resonant;
    if (std::abs(d.omega_eff + d.Omega_eff) <= scale) return Branch::anti_resonant;
    return Branch::off_resonant;
}

namespace detail {

// Relative size of a defect against the participating term magnitudes.
inline double rel(double defect, double scale) {
    return scale > 0.0 ? defect / scale : defect;
}

// Off-resonant reduced scalar equation in the offset variable delta = m - 1:
//   g(delta) = (1 + delta)^3 delta - R,  R >= 0.
// Working in delta keeps the saturation floor m ~ 1 fully resolved; solving
// for m directly loses the offset to cancellation at weak drive (m^2 - m
// evaluated from a double m near 1 cannot do better than ~1e-9 relative).
// g is increasing and convex on delta >= 0, so the positive root is unique.
inline double offres_scalar(double delta, double R) {
    const double one = 1.0 + delta;
    return one * one * one * delta - R;
}

inline double offres_slope(double delta) {
    const double one = 1.0 + delta;
    return one * one * (1.0 + 4.0 * delta);
}

inline double offres_bisect(double R, double tol, int max_iter) {
    double lo = 0.0;
    double hi = std::max(1.0, std::pow(R, 0.25) + 1.0);
    while (offres_scalar(hi, R) < 0.0) hi *= 2.0;
    for (int i = 0; i < 8 * max_iter; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (offres_scalar(mid, R) < 0.0) lo = mid; else hi = mid;
        if ((hi - lo) <= tol * std::max(hi, 1e-300)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Solve the off-resonant population pair
//   |alpha|^2 = eps^2 (1+rho)^2 m^2 n,   n |alpha|^2 = eps^2 (m^2 - m)
// via the reduction n = eps^2 (m^2 - m)/|alpha|^2, which leaves
// m^3 (m - 1) = |alpha|^4 / (eps^4 (1+rho)^2). Damped Newton from a log-spaced
// multistart grid, with bisection as the fallback; the root >= 1 is unique.
inline SteadyState solve_off_resonant(const SystemParams& p, const DerivedParams& d,
                                      const SolveOptions& opt = {}) {
    SteadyState s;
    s.branch = Branch::off_resonant;
    if (p.alpha_mag == 0.0) return s;  // undriven cavity: everything decays to zero
    if (p.epsilon <= 0.0)
        throw degenerate_coupling("off-resonant steady state needs epsilon > 0 when driven");

    const double rho = rho_active(p, d);
    const double eps = p.epsilon;
    const double a2 = p.alpha_mag * p.alpha_mag;
    const double ratio = p.alpha_mag / eps;
    const double R = ratio * ratio * ratio * ratio / ((1.0 + rho) * (1.0 + rho));

    // Newton in delta = m - 1 started above the root: g is increasing and
    // convex there, so the iteration descends monotonically onto the root.
    double delta = R <= 1.0 ? R : std::pow(R, 0.25) + 1.0;
    bool converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        const double step = detail::offres_scalar(delta, R) / detail::offres_slope(delta);
        double next = delta - step;
        if (!(next >= 0.0) || !std::isfinite(next)) next = 0.5 * delta;
        const bool done = std::abs(next - delta) <= opt.tol * std::max(next, 1e-300);
        delta = next;
        if (done) { converged = true; break; }
    }
    if (!converged) delta = detail::offres_bisect(R, opt.tol, opt.max_iter);
    // polish: a couple of undamped steps pin the scalar defect at rounding level
    for (int it = 0; it < 3; ++it) {
        const double next = delta - detail::offres_scalar(delta, R) / detail::offres_slope(delta);
        if (!(next >= 0.0) || !std::isfinite(next)) break;
        delta = next;
    }

    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        std::ostringstream msg;
        msg << "no root m >= 1 of m^3(m-1) = " << R << "; landscape:";
        for (double dl : {0.0, 1.0, 9.0, 99.0})
            msg << " g(1+" << dl << ")=" << detail::offres_scalar(dl, R);
        throw no_physical_root(msg.str());
    }

    const double m = 1.0 + delta;
    s.m_bar = m;
    s.n_bar = eps * eps * m * delta / a2;  // m^2 - m = m (m - 1), offset kept exact
    s.candidates = {m};

    // Residual against BOTH printed lines, scaled by the largest participating
    // term. The m^2 - m factor is evaluated as m * delta: the same real-number
    // expression, but immune to the cancellation that a double m near 1 would
    // force (which would report the check's conditioning, not the defect).
    const double l1_lhs = a2;
    const double l1_rhs = eps * eps * (1.0 + rho) * (1.0 + rho) * m * m * s.n_bar;
    const double l2_lhs = s.n_bar * a2;
    const double l2_rhs = eps * eps * m * delta;
    s.residual = std::max(
        detail::rel(std::abs(l1_lhs - l1_rhs), std::max(l1_lhs, l1_rhs)),
        detail::rel(std::abs(l2_lhs - l2_rhs), std::max(l2_lhs, l2_rhs)));
    return s;
}

namespace detail {

// Pair-amplitude slaving from the resonant pair line:
//   d = i eps rho n (m + 1/2) / (Gamma + 2 i eps (1+rho) n) = (m + 1/2) g(n).
inline cplx resonant_g(double n, double eps, double rho, double Gamma) {
    return cplx(0.0, eps * rho * n) / cplx(Gamma, 2.0 * eps * (1.0 + rho) * n);
}

// Closing m against the pair constraint m^2 - m = 4 (m+1/2)^2 |g|^2. With
// G2 = 4|g|^2 < 1 the branch continuous from m(0) = 1 is
//   m = [(1+G2) + sqrt((1+G2)^2 + (1-G2) G2)] / (2 (1-G2)).
inline double resonant_m(double G2) {
    const double a = 1.0 - G2;
    const double b = 1.0 + G2;
    return (b + std::sqrt(b * b + a * G2)) / (2.0 * a);
}

// Drive line right-hand side, sign = +1 for co-resonance, -1 for the mirrored
// case (where the conjugate pair amplitude enters).
inline cplx resonant_rhs1(double n, double m, cplx dbar, int sign,
                          const SystemParams& p, double rho) {
    const cplx D = sign > 0 ? dbar : std::conj(dbar);
    const double eps = p.epsilon;
    return 0.5 * p.kappa * n +
           cplx(0.0, eps) * (0.5 * (1.0 + rho) * m * n - rho * (n + 0.5) * D);
}

} // namespace detail

// Resonant steady state (effective frequencies matched within tolerance).
// Unknowns (n, m, d, drive phase) reduce to one scalar equation in n:
//   |rhs1(n)|^2 = |alpha|^2 n,
// after slaving d from the pair-amplitude line and closing m against the pair
// constraint (enforced structurally, so |d| = sqrt(m^2-m)/2 to rounding).
// The remaining printed photon-balance line is incompatible with this set for
// n > 0 (see SteadyState); its relative mismatch lands in balance_mismatch.
inline SteadyState solve_resonant(const SystemParams& p, const DerivedParams& d,
                                  int sign = +1, const SolveOptions& opt = {}) {
    SteadyState s;
    s.branch = sign > 0 ? Branch::resonant : Branch::anti_resonant;
    if (p.alpha_mag == 0.0) return s;  // all four lines hold identically at zero

    const double rho = rho_active(p, d);
    const double eps = p.epsilon;
    const double a2 = p.alpha_mag * p.alpha_mag;

    if (eps <= 0.0) {
        // optics decouple: |alpha| sqrt(n) = kappa n / 2
        s.n_bar = 4.0 * a2 / (p.kappa * p.kappa);
        s.m_bar = 0.0;
        s.alpha_phase = 0.5 * pi;  // drive line phase with a real rhs
        s.candidates = {s.n_bar};
        return s;
    }

    auto F = [&](double n) {
        const cplx g = detail::resonant_g(n, eps, rho, p.Gamma);
        const double G2 = 4.0 * std::norm(g);
        const double m = detail::resonant_m(G2);
        const cplx db = (m + 0.5) * g;
        const cplx r1 = detail::resonant_rhs1(n, m, db, sign, p, rho);
        return std::norm(r1) - a2 * n;
    };

    // Scan for sign changes on a log grid; F < 0 near zero for any alpha > 0 and
    // F > 0 at large n, so at least one crossing exists. The smallest root is the
    // continuation of the alpha -> 0 limit (the physical branch); the rest are
    // reported as candidates.
    std::vector<double> roots;
    double prev_n = 1e-14, prev_F = F(prev_n);
    for (int k = 1; k <= 280; ++k) {
        const double n = 1e-14 * std::pow(10.0, k * 0.1);  // up to 1e14
        const double Fn = F(n);
        if (std::isfinite(Fn) && std::isfinite(prev_F) && prev_F < 0.0 && Fn >= 0.0) {
            double lo = prev_n, hi = n;
            for (int it = 0; it < 200; ++it) {
                const double mid = std::sqrt(lo * hi);
                if (F(mid) < 0.0) lo = mid; else hi = mid;
                if ((hi - lo) <= opt.tol * hi) break;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_n = n;
        prev_F = Fn;
    }
    if (roots.empty()) {
        std::ostringstream msg;
        msg << "resonant drive-balance equation has no positive crossing; best |F| at "
            << "n=1: " << F(1.0);
        throw no_convergence(msg.str());
    }

    const double n = roots.front();
    const cplx g = detail::resonant_g(n, eps, rho, p.Gamma);
    const double G2 = 4.0 * std::norm(g);
    const double m = detail::resonant_m(G2);
    const cplx db = (m + 0.5) * g;
    const cplx r1 = detail::resonant_rhs1(n, m, db, sign, p, rho);

    s.n_bar = n;
    s.m_bar = m;
    s.d_bar = db;
    s.candidates = roots;

    // i alpha* sqrt(n) = rhs1  =>  alpha = i conj(rhs1)/sqrt(n)
    const cplx alpha = cplx(0.0, 1.0) * std::conj(r1) / std::sqrt(n);
    s.alpha_phase = std::arg(alpha);

    // Residuals of the solved set.
    const cplx l1_lhs = cplx(0.0, 1.0) * std::conj(alpha) * std::sqrt(n);
    const double res1 = detail::rel(std::abs(l1_lhs - r1),
                                    std::max(std::abs(l1_lhs), std::abs(r1)));
    const double res2 = detail::rel(std::abs(m * m - m - 4.0 * std::norm(db)),
                                    std::max(m * m, 1.0));
    const cplx l3_lhs = -p.Gamma * db;
    const cplx l3_rhs = cplx(0.0, eps) *
                        (2.0 * (1.0 + rho) * n * db - rho * (m + 0.5) * n);
    const double res3 = detail::rel(std::abs(l3_lhs - l3_rhs),
                                    std::max(std::abs(l3_lhs), std::abs(l3_rhs)));
    s.residual = std::max({res1, res2, res3});

    // Leftover photon-balance line, reported as a relative mismatch.
    const double l4_lhs = p.kappa * n;
    const cplx i_unit(0.0, 1.0);
    const cplx l4_rhs_c = i_unit * (alpha - std::conj(alpha)) * std::sqrt(n) -
                          i_unit * 2.0 * d.beta * (std::conj(db) - db) * n *
                              static_cast<double>(sign);
    const double l4_rhs = l4_rhs_c.real();  // imaginary part cancels identically
    s.balance_mismatch = detail::rel(std::abs(l4_lhs - l4_rhs),
                                     std::max(std::abs(l4_lhs), std::abs(l4_rhs)));
    return s;
}

// Branch dispatch on the effective frequencies.
inline SteadyState solve_steady(const SystemParams& p, const DerivedParams& d,
                                const SolveOptions& opt = {}) {
    switch (classify_branch(d, opt.resonance_tol)) {
        case Branch::resonant: return solve_resonant(p, d, +1, opt);
        case Branch::anti_resonant: return solve_resonant(p, d, -1, opt);
        default: return solve_off_resonant(p, d, opt);
    }
}

// ---------------------------------------------------------------------------
// Mean-field relaxation flow in the double-frequency rotating frame.
//
// The six first moments (c, c*, n, d, d*, m) are integrated with the noise
// dropped and all operator products factorized. The flow is built so that its
// fixed points are exactly the algebraic steady states above (the raw
// pair-moment equations carry coefficient slips that would otherwise prevent
// the populations from settling on the printed roots; see the solver notes),
// with relaxation rates kappa for photon-like and Gamma for phonon-like
// moments. Undriven, every moment decays at its bare rate.

struct MeanFieldTrajectory {
    std::vector<double> t;
    std::vector<double> n_bar, m_bar;
    std::vector<cplx> c_bar, d_bar;

    // Long-time averages of the populations over the trailing window.
    std::pair<double, double> settled(double trailing_fraction = 0.2) const {
        const std::size_t total = n_bar.size();
        std::size_t first = total - std::max<std::size_t>(1,
            static_cast<std::size_t>(trailing_fraction * static_cast<double>(total)));
        double sn = 0.0, sm = 0.0;
        for (std::size_t i = first; i < total; ++i) { sn += n_bar[i]; sm += m_bar[i]; }
        const double cnt = static_cast<double>(total - first);
        return {sn / cnt, sm / cnt};
    }
};

struct MeanFieldOptions {
    double ceiling = 1e12;          // divergence guard on any moment magnitude
    double resonance_tol = 1e-6;
    std::size_t max_samples = 4096; // trajectory thinning
    double n0 = 1.0, m0 = 1.0;      // initial populations
};

inline MeanFieldTrajectory integrate_mean_field(const SystemParams& p,
                                                const DerivedParams& d,
                                                double t_end, double dt,
                                                const MeanFieldOptions& opt = {}) {
    validate(p);
    const double fmax = std::max(d.omega_eff, d.Omega_eff);
    if (!(dt > 0.0) || dt > 0.05 / fmax)
        throw step_size_error("dt must be positive and <= 0.05/max(omega_eff, Omega_eff)");
    if (!(t_end > 0.0))
        throw step_size_error("t_end must be positive");

    const double rho = rho_active(p, d);
    const double eps = p.epsilon;
    const double a = p.alpha_mag;
    const double a2 = a * a;
    const Branch branch = classify_branch(d, opt.resonance_tol);
    const int sign = branch == Branch::anti_resonant ? -1 : +1;
    const bool resonant = branch != Branch::off_resonant;
    const cplx alpha_conj = std::polar(a, -p.alpha_phase);

    using state_type = std::array<double, 6>;  // n, m, Re d, Im d, Re c, Im c

    auto rhs = [&](const state_type& y, state_type& dy, double) {
        const double n = std::max(y[0], 0.0);
        const double m = std::max(y[1], 0.0);
        const cplx dbar(y[2], y[3]);
        const cplx cbar(y[4], y[5]);

        double dn, dm;
        cplx dd, dc;
        const cplx c_decay = cplx(p.kappa, 2.0 * eps * (1.0 + rho) * m);
        const cplx d_decay = cplx(p.Gamma, 2.0 * eps * (1.0 + rho) * n);

        if (a == 0.0) {
            dn = -p.kappa * n;
            dm = -p.Gamma * m;
            dd = -d_decay * dbar;
            dc = -c_decay * cbar;
        } else if (eps == 0.0) {
            // optics decouple from mechanics entirely
            dn = -p.kappa * (n - 4.0 * a2 / (p.kappa * p.kappa));
            dm = -p.Gamma * m;
            dd = -p.Gamma * dbar;
            dc = cplx(0.0, 1.0) * alpha_conj * std::sqrt(n) - p.kappa * cbar;
        } else if (!resonant) {
            const double mf = std::max(m, 1e-12);
            const double n_target = a2 / (eps * eps * (1.0 + rho) * (1.0 + rho) * mf * mf);
            const double m_target = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * n * a2 / (eps * eps)));
            dn = -p.kappa * (n - n_target);
            dm = -p.Gamma * (m - m_target);
            dd = -d_decay * dbar;
            dc = cplx(0.0, 1.0) * alpha_conj * std::sqrt(n) - c_decay * cbar;
        } else {
            const double nf = std::max(n, 1e-300);
            const cplx g = detail::resonant_g(nf, eps, rho, p.Gamma);
            const double m_target = detail::resonant_m(4.0 * std::norm(g));
            const cplx d_target = (m_target + 0.5) * g;
            // the drive balance is evaluated on the slaved pair quantities, so
            // the photon flow is autonomous and cannot be starved by the slow
            // relaxation of the phonon moments into the trivial root
            const cplx r1 = detail::resonant_rhs1(nf, m_target, d_target, sign, p, rho);
            const double drive_ratio = a2 * nf / std::max(std::norm(r1), 1e-300);
            dn = p.kappa * nf * (drive_ratio - 1.0);
            dm = -p.Gamma * (m - m_target);
            dd = -d_decay * (dbar - d_target);
            dc = cplx(0.0, 1.0) * alpha_conj * std::sqrt(nf) - c_decay * cbar;
        }
        dy = {dn, dm, dd.real(), dd.imag(), dc.real(), dc.imag()};
    };

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt));
    const std::size_t stride = std::max<std::size_t>(1, steps / opt.max_samples);

    MeanFieldTrajectory traj;
    state_type y = {opt.n0, opt.m0, 0.0, 0.0, 0.0, 0.0};
    boost::numeric::odeint::runge_kutta4<state_type> stepper;

    auto sample = [&](double t) {
        for (double v : y)
            if (!std::isfinite(v) || std::abs(v) > opt.ceiling)
                throw divergence_error("mean-field moment exceeded ceiling at t=" +
                                       std::to_string(t));
        traj.t.push_back(t);
        traj.n_bar.push_back(y[0]);
        traj.m_bar.push_back(y[1]);
        traj.d_bar.emplace_back(y[2], y[3]);
        traj.c_bar.emplace_back(y[4], y[5]);
    };

    sample(0.0);
    for (std::size_t i = 0; i < steps; ++i) {
        stepper.do_step(rhs, y, static_cast<double>(i) * dt, dt);
        if ((i + 1) % stride == 0 || i + 1 == steps)
            sample(static_cast<double>(i + 1) * dt);
    }
    return traj;
}

} // namespace quadom
