#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace quadom {

// Flat run configuration. Frequencies are entered in Hz (pre-2pi) and converted
// to rad/s when building SystemParams; the drive flux alpha is in 1/s as-is;
// temperature in K. Defaults are the weak-coupling reference point used
// throughout: omega = Omega = 720 kHz, kappa = 5.5 kHz, Gamma = 2.4 Hz,
// epsilon = 5 Hz, T = 40 mK.
struct RunConfig {
    // physics (Hz pre-2pi unless noted)
    double omega = 720000.0;
    double Omega = 720000.0;
    double kappa = 5500.0;
    double Gamma = 2.4;
    double epsilon = 5.0;
    double alpha = 1000.0;        // 1/s
    double alpha_phase = 0.0;     // rad
    double temperature = 0.04;    // K
    double ratio = 0.0;           // >0 overrides Omega := ratio * omega
    bool include_nonstandard = true;
    bool pair_channel_weight = false;  // ride the half-quantum weight on the pair channel
    bool thermal_input = false;

    // alpha sweep (log-spaced)
    double alpha_min = 1.0;
    double alpha_max = 10000.0;
    int alpha_points = 81;

    // frequency-ratio sweep (2D sweep verb)
    double ratio_min = 0.5;
    double ratio_max = 2.0;
    int ratio_points = 5;

    // spectrum grid
    double freq_max_factor = 4.0;     // w_max = factor * max effective frequency
    int freq_points = 16384;
    int cluster_points_per_side = 24;

    // solver
    double solver_tol = 1e-12;
    double resonance_tol = 1e-6;

    // mean-field integration (0 = automatic)
    double mf_t_end = 0.0;
    double mf_dt = 0.0;
    double mf_ceiling = 1e12;

    // stability map grid
    double map_n_min = 0.0, map_n_max = 100.0;
    int map_n_points = 21;
    double map_m_min = 0.0, map_m_max = 100.0;
    int map_m_points = 21;

    // peak fitting
    double fit_prominence = 0.02;
    int fit_max_peaks = 16;

    // verification cutoffs
    int verify_cutoff = 30;
    int verify_ham_cutoff = 12;

    std::string out_format = "csv";  // csv | json
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse '" + v + "' as an integer");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("key '" + key + "': cannot parse '" + v + "' as a boolean");
}

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

// Strict parser: one `key = value` per line, '#' comments, unknown keys
// rejected. Lines may carry a leading "# " so an emitted config echo is
// directly re-ingestable.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
#define QUADOM_DBL(name) {#name, [](RunConfig& r, const std::string& k, const std::string& v) { r.name = detail::parse_double(k, v); }}
#define QUADOM_INT(name) {#name, [](RunConfig& r, const std::string& k, const std::string& v) { r.name = detail::parse_int(k, v); }}
#define QUADOM_BOOL(name) {#name, [](RunConfig& r, const std::string& k, const std::string& v) { r.name = detail::parse_bool(k, v); }}
        QUADOM_DBL(omega), QUADOM_DBL(Omega), QUADOM_DBL(kappa), QUADOM_DBL(Gamma),
        QUADOM_DBL(epsilon), QUADOM_DBL(alpha), QUADOM_DBL(alpha_phase),
        QUADOM_DBL(temperature), QUADOM_DBL(ratio),
        QUADOM_BOOL(include_nonstandard), QUADOM_BOOL(pair_channel_weight),
        QUADOM_BOOL(thermal_input),
        QUADOM_DBL(alpha_min), QUADOM_DBL(alpha_max), QUADOM_INT(alpha_points),
        QUADOM_DBL(ratio_min), QUADOM_DBL(ratio_max), QUADOM_INT(ratio_points),
        QUADOM_DBL(freq_max_factor), QUADOM_INT(freq_points),
        QUADOM_INT(cluster_points_per_side),
        QUADOM_DBL(solver_tol), QUADOM_DBL(resonance_tol),
        QUADOM_DBL(mf_t_end), QUADOM_DBL(mf_dt), QUADOM_DBL(mf_ceiling),
        QUADOM_DBL(map_n_min), QUADOM_DBL(map_n_max), QUADOM_INT(map_n_points),
        QUADOM_DBL(map_m_min), QUADOM_DBL(map_m_max), QUADOM_INT(map_m_points),
        QUADOM_DBL(fit_prominence), QUADOM_INT(fit_max_peaks),
        QUADOM_INT(verify_cutoff), QUADOM_INT(verify_ham_cutoff),
        {"out_format", [](RunConfig& r, const std::string& k, const std::string& v) {
             if (v != "csv" && v != "json")
                 throw config_error("key '" + k + "': expected csv or json, got '" + v + "'");
             r.out_format = v;
         }},
#undef QUADOM_DBL
#undef QUADOM_INT
#undef QUADOM_BOOL
    };

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = detail::trim(raw);
        if (line.rfind("# ", 0) == 0) line = detail::trim(line.substr(2));
        else if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "config_hash") continue;  // derived, present in emitted echoes
        const auto it = setters.find(key);
        if (it == setters.end())
            throw config_error("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(c, key, val);
    }
    return c;
}

// Canonical echo of the fully resolved config, one key = value per line in a
// fixed order; re-ingesting this text reproduces the same RunConfig.
inline std::string echo_config(const RunConfig& c) {
    std::ostringstream out;
    auto d = [&](const char* k, double v) { out << k << " = " << detail::fmt_double(v) << '\n'; };
    auto i = [&](const char* k, int v) { out << k << " = " << v << '\n'; };
    auto b = [&](const char* k, bool v) { out << k << " = " << (v ? "true" : "false") << '\n'; };
    d("omega", c.omega); d("Omega", c.Omega); d("kappa", c.kappa); d("Gamma", c.Gamma);
    d("epsilon", c.epsilon); d("alpha", c.alpha); d("alpha_phase", c.alpha_phase);
    d("temperature", c.temperature); d("ratio", c.ratio);
    b("include_nonstandard", c.include_nonstandard);
    b("pair_channel_weight", c.pair_channel_weight);
    b("thermal_input", c.thermal_input);
    d("alpha_min", c.alpha_min); d("alpha_max", c.alpha_max); i("alpha_points", c.alpha_points);
    d("ratio_min", c.ratio_min); d("ratio_max", c.ratio_max); i("ratio_points", c.ratio_points);
    d("freq_max_factor", c.freq_max_factor); i("freq_points", c.freq_points);
    i("cluster_points_per_side", c.cluster_points_per_side);
    d("solver_tol", c.solver_tol); d("resonance_tol", c.resonance_tol);
    d("mf_t_end", c.mf_t_end); d("mf_dt", c.mf_dt); d("mf_ceiling", c.mf_ceiling);
    d("map_n_min", c.map_n_min); d("map_n_max", c.map_n_max); i("map_n_points", c.map_n_points);
    d("map_m_min", c.map_m_min); d("map_m_max", c.map_m_max); i("map_m_points", c.map_m_points);
    d("fit_prominence", c.fit_prominence); i("fit_max_peaks", c.fit_max_peaks);
    i("verify_cutoff", c.verify_cutoff); i("verify_ham_cutoff", c.verify_ham_cutoff);
    out << "out_format = " << c.out_format << '\n';
    return out.str();
}

// FNV-1a 64-bit over the canonical echo; stamped into output headers so files
// are traceable to their exact configuration without any wall-clock content.
inline std::uint64_t config_hash(const RunConfig& c) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : echo_config(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

// Physical parameters in rad/s, applying the 2pi convention and the optional
// frequency-ratio override.
inline SystemParams to_params(const RunConfig& c) {
    SystemParams p;
    p.omega_bare = two_pi * c.omega;
    p.Omega_bare = two_pi * (c.ratio > 0.0 ? c.ratio * c.omega : c.Omega);
    p.kappa = two_pi * c.kappa;
    p.Gamma = two_pi * c.Gamma;
    p.epsilon = two_pi * c.epsilon;
    p.alpha_mag = c.alpha;
    p.alpha_phase = c.alpha_phase;
    p.temperature = c.temperature;
    p.include_nonstandard = c.include_nonstandard;
    return p;
}

} // namespace quadom
