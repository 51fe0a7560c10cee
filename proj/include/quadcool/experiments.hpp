#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quadcool/trap_md.hpp"

namespace quadcool {

// One scripted measurement series: a 729 nm detuning scan at fixed beam,
// trap, and noise settings. Detunings are relative to the light-shifted
// resonance (the operational zero of the scans).
struct ScanConfig {
    GeometryTag geometry = GeometryTag::co_propagating_axial;
    std::vector<double> detunings;  // rad/s

    double power_729 = 0.25;  // W
    double waist_729 = 50e-6;
    double power_854 = 1e-3;
    double waist_854 = 280e-6;
    double detuning_854 = -constants::two_pi * 100e6;
    double power_866 = 3e-3;
    double waist_866 = 280e-6;

    double b_field = 0.0;  // T
    Vec3 b_dir = Vec3::UnitZ();

    TrapConfig trap{constants::two_pi * 0.56e6, constants::two_pi * 0.95e6};
    int n_ions = 3;  // largest zigzag-stable string at the default trap
    int dark_index = -1;  // -1: no dark ion
    int dark_species = 40;

    double t_precool = 2e-3;  // K, thermal preparation temperature
    // Simulate the dipole-allowed pre-cooling stage explicitly (saturated
    // two-level 397 nm stage, red-detuned half a linewidth) instead of
    // starting directly from the thermal draw.
    bool precool_explicit = false;
    double precool_window = 1e-3;  // s

    double window = 200e-3;  // s, fluorescence measurement window
    int trials = 20;
    double efficiency = 3.6e-4;  // detected fraction of violet photons
    std::uint64_t seed = 1;

    NoiseModel noise{0.05, 0.1 * constants::q_elem, 0.0, true};

    int threads = 1;
    double grid_halfwidth = 15.0;  // m/s, velocity table half-span per point
    int grid_points = 1201;

    void validate() const;  // throws ModelError
};

struct ScanResult {
    GeometryTag geometry = GeometryTag::co_propagating_axial;
    double b_field = 0.0;
    double efficiency = 1.0;
    int n_fluorescing = 1;

    std::vector<double> detunings;       // rad/s
    std::vector<double> mean_rate;       // detected counts/s
    std::vector<double> std_rate;        // sample std across trials
    std::vector<double> jump_fraction;   // R per point; 0 without a dark ion
    std::vector<double> inferred_force;  // N, per point from the mean rate

    // jump_fraction_scan only: lasers-off reference over the same trials
    double baseline_jump_fraction = -1.0;
    int baseline_trials = 0;

    double peak_rate = 0.0;
    double fwhm = 0.0;                  // rad/s, NaN when not bracketed
    std::vector<double> line_centers;   // rad/s, the four dm = +-1 lines

    std::string to_csv() const;
};

// Fluorescence vs detuning: thermal string, integrate each window, count
// detected violet photons. Mean/std taken across trials per grid point.
ScanResult detuning_scan(const ScanConfig& cfg);

// Same protocol with a dark ion: R = fraction of windows in which the dark
// ion's axial rank changed. Adds a lasers-off baseline over the same number
// of trials.
ScanResult jump_fraction_scan(const ScanConfig& cfg);

// One detuning scan per field value; annotates peak rate, FWHM and the
// four dm = +-1 line-center detunings.
std::vector<ScanResult> bfield_scan(const ScanConfig& cfg,
                                    const std::vector<double>& b_list);

// Peak scattering force inferred the way the measurement does it:
// (peak rate / efficiency / fluorescing ions) * hbar |k_eff|.
// Zero-count scans give 0; a peak on the grid edge throws.
double force_estimate(const ScanResult& result, GeometryTag geometry);

enum class RegimeStatus { pass, marginal, fail };

struct RegimeReport {
    double gamma_eff = 0;  // rad/s
    double omega_z = 0, omega_r = 0;
    RegimeStatus status = RegimeStatus::fail;
    std::string text;
};

// Doppler-regime validity: the effective linewidth must exceed both secular
// frequencies; within 5% of the boundary is flagged marginal.
RegimeReport doppler_regime_check(const ScanConfig& cfg);

const char* to_string(RegimeStatus s);

}  // namespace quadcool
