#pragma once

// Physical constants (SI) and 40Ca+ level data used throughout.
// Convention: all rates, linewidths, detunings and Rabi frequencies are
// angular (rad/s); wavelengths are vacuum-nominal in meters.

namespace quadcool::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double c_light = 299792458.0;          // m/s
inline constexpr double k_boltzmann = 1.380649e-23;     // J/K
inline constexpr double mu_bohr = 9.2740100783e-24;     // J/T
inline constexpr double eps0 = 8.8541878128e-12;        // F/m
inline constexpr double q_elem = 1.602176634e-19;       // C
inline constexpr double amu = 1.66053906660e-27;        // kg

inline constexpr double mass_ca40 = 39.9625909 * amu;   // kg
inline constexpr double mass_ca44 = 43.9554818 * amu;   // kg (dark isotope)

// 40Ca+ transition data. Branching fractions are per decay of the upper level.
inline constexpr double lambda_729 = 729e-9;  // S1/2 - D5/2 quadrupole
inline constexpr double lambda_733 = 733e-9;  // S1/2 - D3/2 quadrupole
inline constexpr double lambda_397 = 397e-9;  // S1/2 - P1/2
inline constexpr double lambda_393 = 393e-9;  // S1/2 - P3/2
inline constexpr double lambda_866 = 866e-9;  // D3/2 - P1/2
inline constexpr double lambda_854 = 854e-9;  // D5/2 - P3/2
inline constexpr double lambda_850 = 850e-9;  // D3/2 - P3/2

inline constexpr double gamma_d52 = two_pi * 0.14;      // natural width of D5/2
inline constexpr double gamma_d32 = two_pi * 0.132;     // natural width of D3/2
inline constexpr double gamma_p32 = two_pi * 23.0e6;    // total P3/2 decay rate
inline constexpr double gamma_p12 = two_pi * 21.6e6;    // total P1/2 decay rate

inline constexpr double branch_p32_d52 = 0.07;
inline constexpr double branch_p32_d32 = 0.008;
inline constexpr double branch_p32_s12 = 1.0 - branch_p32_d52 - branch_p32_d32;
inline constexpr double branch_p12_d32 = 0.064;
inline constexpr double branch_p12_s12 = 1.0 - branch_p12_d32;

// S1/2 ground-state g-factor: free-electron-like, not the pure LS value 2.
inline constexpr double g_s12 = 2.002;

}  // namespace quadcool::constants
