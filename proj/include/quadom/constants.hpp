#pragma once

// Shared numeric and physical constants. Frequencies throughout the library are
// angular (rad/s); configuration ingestion is the only place ordinary Hz appear.

namespace quadom {

inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double two_pi = 2.0 * pi;

// 2019 SI exact values.
inline constexpr double planck_h = 6.62607015e-34;        // J s
inline constexpr double hbar = planck_h / two_pi;         // J s
inline constexpr double k_boltzmann = 1.380649e-23;       // J/K

// Geometric factor pi^2/3 + 1/4 relating the momentum-interaction strength to the
// position-interaction strength at unit frequency ratio. The momentum coupling is
// beta = (1/4) * coupling_geometry * (Omega/omega)^2 * epsilon.
inline constexpr double coupling_geometry = pi * pi / 3.0 + 0.25;

} // namespace quadom
