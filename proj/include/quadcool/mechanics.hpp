#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quadcool/internal_dynamics.hpp"

namespace quadcool {

enum class GeometryTag {
    co_propagating_axial,
    counter_propagating_axial,
    angled_45_with_axial_assist,
};

const char* to_string(GeometryTag tag);

// Beam layout relative to the trap axis. The repumper direction is optional;
// when unset its (small) photon momentum is not counted in the mean force.
struct BeamGeometry {
    GeometryTag tag = GeometryTag::co_propagating_axial;
    Vec3 k729_hat = Vec3::UnitZ();
    Vec3 k854_hat = Vec3::UnitZ();
    Vec3 axis = Vec3::UnitZ();
    std::optional<Vec3> k866_hat;

    static BeamGeometry co_axial();
    static BeamGeometry counter_axial();
    static BeamGeometry angled_45();

    void validate() const;  // tag/vector consistency, unit norms
};

struct KickRatio {
    double value = 0;
    bool unbounded = false;  // degenerate denominator (equal wavelengths)
};

// Ratio of axial two-photon recoil per excitation cycle between two beam
// layouts, |(k_pump + k_assist)路axis|_co / |...|_counter.
KickRatio momentum_kick_ratio(const BeamGeometry& co,
                              const BeamGeometry& counter,
                              double lambda_pump = constants::lambda_729,
                              double lambda_assist = constants::lambda_854);

// Mean radiative force at fixed velocity. Each beam contributes hbar k times
// its net absorption flux at steady state; for the assisting and repumping
// beams the flux is the net flow through the level pair (stimulated minus
// the spontaneous return), which in steady state matches the pump flux on
// the quadrupole line. Spontaneous emission averages to zero force.
Vec3 mean_force(const LevelScheme& scheme, const std::vector<LaserBeam>& beams,
                const BeamGeometry& geometry, const Vec3& velocity,
                const Vec3& b_field = Vec3::Zero());

// Steady-state observables at one velocity with the pump detuning
// overridden: mean force plus per-channel photon emission rates. Backs the
// velocity-resolved cooling tables of the dynamics layer.
struct SteadyPoint {
    Vec3 force = Vec3::Zero();
    ScatteringRates rates;
};

SteadyPoint steady_point(const LevelScheme& scheme,
                         const std::vector<LaserBeam>& beams,
                         const BeamGeometry& geometry, double detuning_729,
                         const Vec3& velocity, const Vec3& b_field);

struct ForceProfile {
    std::vector<double> v;          // m/s along the trap axis, strictly increasing
    std::vector<double> force;      // N, axial component
    std::vector<double> diffusion;  // kg^2 m^2 / s^3

    double detuning_729 = 0;  // rad/s, operating detuning of the pump beam
    Vec3 b_field = Vec3::Zero();
    GeometryTag geometry = GeometryTag::co_propagating_axial;
    double gamma_eff = 0;  // effective linewidth at this operating point
    double k_doppler = 0;  // pump wavenumber, sets the friction grid scale
    double xi = 1.0 / 3.0;

    std::string to_csv() const;  // columns v[m/s],F[N],D[kg^2 m^2/s^3]
};

// Tabulates axial force and momentum diffusion over a velocity grid. The
// pump detuning of the 729 nm beam is overridden by detuning_729; diffusion
// uses D = hbar^2 (1+xi) sum_channels k^2 rate with xi the emission-pattern
// projection factor.
ForceProfile force_profile(const LevelScheme& scheme,
                           const std::vector<LaserBeam>& beams,
                           const BeamGeometry& geometry, double detuning_729,
                           const Vec3& b_field,
                           const std::vector<double>& v_grid,
                           double xi = 1.0 / 3.0);

struct FrictionDiffusion {
    double alpha = 0;  // kg/s, -dF/dv at v=0
    double d0 = 0;     // kg^2 m^2/s^3 at v=0

    double limit_temperature() const;  // D/(2 alpha kB); throws if alpha <= 0
};

// Central-difference friction at v=0 plus interpolated diffusion. Throws if
// the grid does not bracket v=0 or is coarser than gamma_eff/(10 k_doppler).
FrictionDiffusion friction_and_diffusion(const ForceProfile& profile);

struct VelocityInterval {
    double v_lo = 0;
    double v_hi = 0;
    double width() const { return v_hi - v_lo; }
};

// Maximal contiguous velocity interval around the force-magnitude peak where
// |F| >= threshold_fraction * peak.
VelocityInterval capture_range(const ForceProfile& profile,
                               double threshold_fraction);

}  // namespace quadcool
