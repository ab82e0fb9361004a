#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "model.hpp"
#include "output.hpp"
#include "spectra.hpp"
#include "steady_state.hpp"

namespace quadom {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_solver = 3;
inline constexpr int exit_unstable = 4;
inline constexpr int exit_verify = 5;

inline unsigned resolve_jobs(int cli_jobs) {
    if (cli_jobs > 0) return static_cast<unsigned>(cli_jobs);
    if (const char* env = std::getenv("QUADOM_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

namespace detail {

inline std::vector<double> logspace(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi >= lo) || points < 1)
        throw config_error("log sweep needs 0 < min <= max and points >= 1");
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) { v[0] = lo; return v; }
    const double l0 = std::log10(lo), l1 = std::log10(hi);
    for (int i = 0; i < points; ++i)
        v[static_cast<std::size_t>(i)] =
            std::pow(10.0, l0 + (l1 - l0) * i / (points - 1));
    return v;
}

inline std::vector<double> linspace(double lo, double hi, int points) {
    if (!(hi >= lo) || points < 1)
        throw config_error("linear sweep needs min <= max and points >= 1");
    std::vector<double> v(static_cast<std::size_t>(points));
    if (points == 1) { v[0] = lo; return v; }
    for (int i = 0; i < points; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return v;
}

inline std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

inline const char* state_name(StabilityState s) {
    switch (s) {
        case StabilityState::stable: return "stable";
        case StabilityState::marginal: return "marginal";
        default: return "unstable";
    }
}

// One steady-state table row at given drive and frequency ratio.
inline std::vector<Cell> steady_row(const RunConfig& cfg, double alpha, double ratio) {
    RunConfig local = cfg;
    local.alpha = alpha;
    if (ratio > 0.0) local.ratio = ratio;
    std::vector<Cell> row;
    row.reserve(8);
    row.emplace_back(alpha);
    try {
        const SystemParams p = to_params(local);
        validate(p);
        const DerivedParams d = derive_params(p);
        SolveOptions opt;
        opt.tol = cfg.solver_tol;
        opt.resonance_tol = cfg.resonance_tol;
        const SteadyState s = solve_steady(p, d, opt);
        row.emplace_back(p.Omega_bare / p.omega_bare);
        row.emplace_back(s.n_bar);
        row.emplace_back(s.m_bar);
        row.emplace_back(std::abs(s.d_bar));
        row.emplace_back(std::string(branch_name(s.branch)));
        row.emplace_back(s.residual);
        row.emplace_back(std::string("ok"));
    } catch (const error& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.emplace_back(nan);
        row.emplace_back(nan);
        row.emplace_back(nan);
        row.emplace_back(nan);
        row.emplace_back(std::string("none"));
        row.emplace_back(nan);
        row.emplace_back("error: " + csv_safe(e.what()));
    }
    return row;
}

inline const std::vector<std::string>& steady_columns() {
    static const std::vector<std::string> cols = {
        "alpha", "ratio", "n_bar", "m_bar", "d_abs", "branch", "residual", "status"};
    return cols;
}

inline bool row_ok(const std::vector<Cell>& row) {
    return std::holds_alternative<std::string>(row.back()) &&
           std::get<std::string>(row.back()) == "ok";
}

} // namespace detail

// Steady-state drive sweep at the configured frequency ratio.
inline int cmd_steady(const RunConfig& cfg, const std::string& out_dir) {
    validate(to_params(cfg)); // reject a bad parameter set before sweeping
    Table t;
    t.columns = detail::steady_columns();
    std::size_t ok = 0;
    for (double a : detail::logspace(cfg.alpha_min, cfg.alpha_max, cfg.alpha_points)) {
        t.rows.push_back(detail::steady_row(cfg, a, 0.0));
        if (detail::row_ok(t.rows.back())) ++ok;
    }
    const std::string path = emit_table(t, cfg, out_dir, "steady");
    std::cout << "steady: " << ok << "/" << t.rows.size() << " points solved -> "
              << path << "\n";
    return ok == 0 ? exit_solver : exit_ok;
}

// Two-dimensional drive x frequency-ratio sweep over a worker pool. Rows are
// assembled by grid index, so the output is identical for any job count.
inline int cmd_sweep(const RunConfig& cfg, const std::string& out_dir, unsigned jobs) {
    validate(to_params(cfg)); // reject a bad parameter set before sweeping
    const auto alphas = detail::logspace(cfg.alpha_min, cfg.alpha_max, cfg.alpha_points);
    const auto ratios = detail::linspace(cfg.ratio_min, cfg.ratio_max, cfg.ratio_points);

    const std::size_t total = alphas.size() * ratios.size();
    std::vector<std::vector<Cell>> rows(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next.fetch_add(1); k < total; k = next.fetch_add(1)) {
            const double a = alphas[k / ratios.size()];
            const double r = ratios[k % ratios.size()];
            rows[k] = detail::steady_row(cfg, a, r);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    Table t;
    t.columns = detail::steady_columns();
    t.rows = std::move(rows);
    std::size_t ok = 0;
    for (const auto& row : t.rows)
        if (detail::row_ok(row)) ++ok;
    const std::string path = emit_table(t, cfg, out_dir, "sweep");
    std::cout << "sweep: " << ok << "/" << total << " points solved -> " << path << "\n";
    return ok == 0 ? exit_solver : exit_ok;
}

// Stability map over imposed populations.
inline int cmd_stability(const RunConfig& cfg, const std::string& out_dir) {
    const SystemParams p = to_params(cfg);
    validate(p);
    const DerivedParams d = derive_params(p);
    const auto map = stability_map(
        p, d, detail::linspace(cfg.map_n_min, cfg.map_n_max, cfg.map_n_points),
        detail::linspace(cfg.map_m_min, cfg.map_m_max, cfg.map_m_points));

    Table t;
    t.columns = {"n_bar", "m_bar", "margin", "state", "cell_error"};
    std::size_t unstable = 0;
    bool reported_first = false;
    for (std::size_t i = 0; i < map.n_bars.size(); ++i)
        for (std::size_t j = 0; j < map.m_bars.size(); ++j) {
            const std::size_t k = i * map.m_bars.size() + j;
            t.rows.push_back({map.n_bars[i], map.m_bars[j], map.margin[k],
                              std::string(detail::state_name(map.state[k])),
                              detail::csv_safe(map.cell_error[k])});
            if (map.state[k] == StabilityState::unstable && map.cell_error[k].empty()) {
                ++unstable;
                if (!reported_first) {
                    std::cout << "first unstable cell: n_bar=" << map.n_bars[i]
                              << " m_bar=" << map.m_bars[j]
                              << " margin=" << map.margin[k] << "\n";
                    reported_first = true;
                }
            }
        }
    const std::string path = emit_table(t, cfg, out_dir, "stability_map");
    std::cout << "stability: " << (t.rows.size() - unstable) << "/" << t.rows.size()
              << " cells stable -> " << path << "\n";
    return exit_ok;
}

// Output spectra with the momentum interaction on and off, one invocation.
// Emits paired spectrum files (frequency column is w/2, the plot axis), a peak
// table and a difference summary. With the interaction disabled for the whole
// run only the momentum-free mode is computed and the difference summary is
// skipped; that is the way to reach the momentum-free spectrum when the full
// model is unstable at the same operating point. If any computed mode is
// dynamically unstable, a stability report is emitted instead and the exit
// code flags it.
inline int cmd_spectrum(const RunConfig& cfg, const std::string& out_dir, unsigned jobs) {
    struct Mode {
        std::string name;
        SystemParams p;
        DerivedParams d;
        SteadyState s;
        DriftSystem ds;
        StabilityReport rep;
        Spectrum spec;
    };
    const bool compare = cfg.include_nonstandard;
    std::vector<Mode> modes(compare ? 2 : 1);
    modes[0].name = compare ? "nonstandard_on" : "nonstandard_off";
    if (compare) modes[1].name = "nonstandard_off";

    for (std::size_t k = 0; k < modes.size(); ++k) {
        Mode& m = modes[k];
        RunConfig local = cfg;
        local.include_nonstandard = compare && k == 0;
        m.p = to_params(local);
        validate(m.p);
        m.d = derive_params(m.p);
        SolveOptions opt;
        opt.tol = cfg.solver_tol;
        opt.resonance_tol = cfg.resonance_tol;
        try {
            m.s = solve_steady(m.p, m.d, opt);
        } catch (const error& e) {
            std::cerr << "steady-state solve failed (" << m.name << "): " << e.what()
                      << "\n";
            return exit_solver;
        }
        m.ds = build_drift(m.p, m.d, m.s);
        m.rep = stability(m.ds);
    }

    const bool any_unstable = std::any_of(modes.begin(), modes.end(),
                                          [](const Mode& m) { return !m.rep.stable; });
    if (any_unstable) {
        Table t;
        t.columns = {"mode", "state", "margin", "eig_index", "eig_real", "eig_imag"};
        for (const Mode& m : modes)
            for (int k = 0; k < 6; ++k)
                t.rows.push_back({std::string(m.name),
                                  std::string(detail::state_name(m.rep.state)),
                                  m.rep.margin, static_cast<double>(k),
                                  m.rep.eigenvalues[k].real(),
                                  m.rep.eigenvalues[k].imag()});
        const std::string path = emit_table(t, cfg, out_dir, "stability_report");
        std::cerr << "configuration dynamically unstable (margins";
        for (const Mode& m : modes) std::cerr << " " << m.rep.margin;
        std::cerr << "); stability report -> " << path << "\n";
        return exit_unstable;
    }

    double w_max = 0.0;
    std::vector<Vector6c> eig_sets;
    for (const Mode& m : modes) {
        w_max = std::max({w_max, m.d.omega_eff, m.d.Omega_eff});
        eig_sets.push_back(m.rep.eigenvalues);
    }
    w_max *= cfg.freq_max_factor;
    const auto grid = frequency_grid(
        eig_sets, w_max, static_cast<std::size_t>(cfg.freq_points),
        static_cast<std::size_t>(cfg.cluster_points_per_side));

    FitOptions fit_opt;
    fit_opt.prominence = cfg.fit_prominence;
    fit_opt.max_peaks = cfg.fit_max_peaks;

    for (Mode& m : modes) {
        WeightOptions wopt;
        wopt.fifth_weight_on_pair = cfg.pair_channel_weight;
        wopt.thermal_input = cfg.thermal_input;
        wopt.n_thermal = thermal_occupancy(m.d.Omega_eff, m.p.temperature);
        m.spec = output_spectrum(m.ds, grid, wopt, jobs);
        m.spec.peaks = fit_peaks(m.spec, fit_opt);
        fill_s_aa(m.spec);

        Table t;
        t.columns = {"freq", "s_cc", "s_aa"};  // freq = w/2, the plot axis
        t.rows.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            t.rows.push_back({0.5 * m.spec.freq_grid[i], m.spec.s_cc[i], m.spec.s_aa[i]});
        emit_table(t, cfg, out_dir, "spectrum_" + m.name);
    }

    Table peaks;
    peaks.columns = {"mode", "s", "omega_center", "half_freq_center", "delta_omega",
                     "baseline", "fit_residual", "overlapping"};
    for (const Mode& m : modes)
        for (const auto& pk : m.spec.peaks)
            peaks.rows.push_back({std::string(m.name), pk.s_j, pk.omega_j,
                                  0.5 * pk.omega_j, pk.delta_omega_j, pk.baseline,
                                  pk.fit_residual,
                                  std::string(pk.overlapping ? "yes" : "no")});
    const std::string peaks_path = emit_table(peaks, cfg, out_dir, "spectrum_peaks");

    if (!compare) {
        std::cout << "spectrum: momentum-free mode only (" << modes[0].spec.peaks.size()
                  << " fitted peaks) -> " << peaks_path << "\n";
        return exit_ok;
    }

    // difference metric on the plain uniform grid, so cluster placement
    // (driven by each mode's eigenvalues) cannot bias the comparison
    std::vector<double> uniform(static_cast<std::size_t>(cfg.freq_points));
    for (int i = 1; i <= cfg.freq_points; ++i)
        uniform[static_cast<std::size_t>(i - 1)] = w_max * i / cfg.freq_points;
    WeightOptions wopt;
    wopt.fifth_weight_on_pair = cfg.pair_channel_weight;
    wopt.thermal_input = cfg.thermal_input;
    std::vector<Spectrum> base(2);
    for (int k = 0; k < 2; ++k) {
        wopt.n_thermal = thermal_occupancy(modes[static_cast<std::size_t>(k)].d.Omega_eff,
                                           modes[static_cast<std::size_t>(k)].p.temperature);
        base[static_cast<std::size_t>(k)] =
            output_spectrum(modes[static_cast<std::size_t>(k)].ds, uniform, wopt, jobs);
    }
    const double l2 = relative_l2_difference(base[0].s_cc, base[1].s_cc);

    Table diff;
    diff.columns = {"l2_relative_difference", "peaks_on", "peaks_off",
                    "warnings_on", "warnings_off"};
    diff.rows.push_back({l2, static_cast<double>(modes[0].spec.peaks.size()),
                         static_cast<double>(modes[1].spec.peaks.size()),
                         static_cast<double>(modes[0].spec.warnings),
                         static_cast<double>(modes[1].spec.warnings)});
    const std::string diff_path = emit_table(diff, cfg, out_dir, "spectrum_diff");
    std::cout << "spectrum: relative L2 difference (on vs off) = " << l2 << " -> "
              << diff_path << "\n";
    return exit_ok;
}

// Oracle suite: operator-algebra closure, the two Hamiltonian forms, and the
// relaxation-flow cross-check of the algebraic steady state.
inline int cmd_verify(const RunConfig& cfg, const std::string& out_dir) {
    struct Check {
        std::string name;
        double value;
        double threshold;
        bool pass;
    };
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double value, double threshold) {
        checks.push_back({name, value, threshold, value < threshold});
    };

    const auto closure = fock::verify_closure(cfg.verify_cutoff);
    for (const auto& [label, dev] : closure.identities)
        add("closure: " + label, dev, 1e-12);
    add("closure: cross-sector commutator", closure.cross_sector_deviation, 1e-15);

    const SystemParams p = to_params(cfg);
    validate(p);
    const DerivedParams d = derive_params(p);
    const auto ham = fock::verify_hamiltonian(p, d, cfg.verify_ham_cutoff);
    add("hamiltonian: hermiticity (quadrature form)", ham.hermiticity_quadrature, 1e-12);
    add("hamiltonian: hermiticity (pair-basis form)", ham.hermiticity_pair_basis, 1e-12);
    // relative: the absolute deviation scales with the (config-dependent)
    // frequency magnitudes, so demand machine-level agreement per entry
    add("hamiltonian: relative form agreement on interior block",
        ham.interior_difference / std::max(ham.interior_scale, 1e-300), 1e-12);

    SolveOptions sopt;
    sopt.tol = cfg.solver_tol;
    sopt.resonance_tol = cfg.resonance_tol;
    const SteadyState s = solve_steady(p, d, sopt);
    const double fmax = std::max(d.omega_eff, d.Omega_eff);
    const double dt = cfg.mf_dt > 0.0 ? cfg.mf_dt : 0.05 / fmax;
    const double t_end =
        cfg.mf_t_end > 0.0 ? cfg.mf_t_end : 6.0 / std::min(p.kappa, p.Gamma);
    MeanFieldOptions mopt;
    mopt.ceiling = cfg.mf_ceiling;
    mopt.resonance_tol = cfg.resonance_tol;
    const auto traj = integrate_mean_field(p, d, t_end, dt, mopt);
    const auto [n_mf, m_mf] = traj.settled();
    auto rel_or_abs = [](double got, double want) {
        return want > 1e-8 ? std::abs(got - want) / want : std::abs(got - want) * 1e2;
    };
    add("steady vs relaxation flow: photon population", rel_or_abs(n_mf, s.n_bar), 0.01);
    add("steady vs relaxation flow: phonon population", rel_or_abs(m_mf, s.m_bar), 0.01);

    Table t;
    t.columns = {"check", "value", "threshold", "pass"};
    bool all_pass = true;
    for (const auto& c : checks) {
        t.rows.push_back({std::string(c.name), c.value, c.threshold,
                          std::string(c.pass ? "pass" : "fail")});
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.value
                  << " vs " << c.threshold << ")\n";
        all_pass = all_pass && c.pass;
    }
    emit_table(t, cfg, out_dir, "verify_report");
    return all_pass ? exit_ok : exit_verify;
}

} // namespace quadom
