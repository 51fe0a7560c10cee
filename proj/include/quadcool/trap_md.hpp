#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "quadcool/mechanics.hpp"

namespace quadcool {

// Integration blow-ups (NaN positions, lost normalization) as opposed to
// invalid inputs; the CLI maps this to a distinct exit code.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear Paul trap in the static-pseudopotential approximation. omega_z and
// omega_r are the secular frequencies of the reference species; other masses
// scale as omega_z ~ m^-1/2 (electrostatic) and omega_r ~ 1/m.
struct TrapConfig {
    double omega_z = 0;  // rad/s
    double omega_r = 0;  // rad/s
    double mass = constants::mass_ca40;
    double charge = constants::q_elem;

    // ell = (q^2 / (4 pi eps0 m omega_z^2))^(1/3), the Coulomb length unit
    double length_scale() const;

    // Smallest transverse Hessian eigenvalue of the linear chain, in units
    // of omega_z^2. Positive means the string is stable against zigzag.
    double zigzag_margin(int n_ions) const;

    void validate(int n_ions) const;  // throws ModelError when unstable
};

// Axial equilibrium positions (m, ascending) of the harmonic-plus-Coulomb
// chain, solved by damped Newton iteration to |grad| <= 1e-12 of the
// characteristic force m omega_z^2 ell.
std::vector<double> equilibrium_positions(int n, const TrapConfig& trap);

double ion_mass(int species);  // mass-number tag -> kg

struct IonState {
    Vec3 position = Vec3::Zero();  // m
    Vec3 velocity = Vec3::Zero();  // m/s
    int species = 40;              // mass-number tag
    bool addressed = true;         // coupled to the cooling light
};

struct PhotonEvent {
    double t = 0;
    int ion = 0;
    double lambda = 0;  // emission channel, m
};

// Velocity-resolved cooling tables: mean force vector plus per-channel
// photon emission rates on a common projected-velocity grid. The directed
// absorption momentum of each completed pump cycle is delivered together
// with its violet emission event (kick = F / r_393 so the mean reproduces
// the tabulated force exactly and absorption shot noise is realized);
// all emission channels recoil isotropically.
struct CoolingModel {
    BeamGeometry geometry;
    Vec3 project_dir = Vec3::UnitZ();  // velocities enter the table along this
    std::vector<double> v;             // ascending grid, m/s
    std::vector<Vec3> force;           // N
    std::vector<double> lambda_ch;     // emission channels, m
    std::vector<double> rates;         // [grid * n_ch + ch], photons/s
    std::vector<double> total_rate;    // per grid point
    int violet393 = -1;                // channel carrying the directed kick
    double max_total_rate = 0;         // thinning bound for event sampling

    // Full construction from the internal-state model: per grid point the
    // steady state at that velocity supplies force and channel rates.
    static CoolingModel from_scheme(const LevelScheme& scheme,
                                    const std::vector<LaserBeam>& beams,
                                    const BeamGeometry& geometry,
                                    double detuning_729, const Vec3& b_field,
                                    const std::vector<double>& v_grid);

    // Reduced construction from a bare force profile: one violet channel at
    // the cycle rate F/(hbar k_eff). Shot statistics match the profile to
    // ~10%; prefer from_scheme when channel-resolved counts matter.
    static CoolingModel from_profile(const ForceProfile& profile);

    int n_channels() const { return static_cast<int>(lambda_ch.size()); }
    Vec3 force_at(double v_proj) const;  // linear interp, zero outside grid
    // interpolate channel rates into buf[n_channels()]; returns their sum
    double rates_at(double v_proj, double* buf) const;
};

struct NoiseModel {
    double collision_rate = 0;    // background events per ion, 1/s
    double collision_energy = 0;  // mean of the exponential kick energy, J
    double heating_rate = 0;      // quanta/s added to every secular mode
    // Realize photon shot noise and recoil. When false the cooling force is
    // applied as a smooth deterministic drag and no photons are logged.
    bool recoil = true;
};

struct Trajectory {
    TrapConfig trap;
    double t0 = 0, t_end = 0, dt = 0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<std::vector<IonState>> states;  // [sample][ion]
    std::vector<PhotonEvent> photons;
    std::vector<std::pair<double, int>> collisions;  // (t, ion)
    std::vector<Vec3> cooling_impulse;      // per ion, summed directed kicks
    std::vector<Vec3> mean_force_integral;  // per ion, integral of F(v(t)) dt

    int n_ions() const {
        return states.empty() ? 0 : static_cast<int>(states.front().size());
    }
    std::string states_csv() const;   // t + per-ion x,y,z,vx,vy,vz
    std::string photons_csv() const;  // t, ion, channel_nm
};

struct IntegrateOptions {
    double sample_interval = 0;     // <= 0: quarter axial period
    bool track_mean_force = false;  // accumulate F(v(t)) dt per addressed ion
};

// Leapfrog (kick-drift-kick) over the trap pseudopotential and pairwise
// Coulomb forces; cooling and noise enter as impulses at sampled event
// times. Throws ModelError when dt > 1/(50 max(omega_z, omega_r)) and
// NumericalError when the state stops being finite.
Trajectory integrate(std::vector<IonState> ions, const TrapConfig& trap,
                     const CoolingModel* cooling, const NoiseModel& noise,
                     double dt, double t_end, std::uint64_t seed,
                     const IntegrateOptions& opts = {});

// Kinetic + trap + Coulomb energy of a configuration (J).
double total_energy(const std::vector<IonState>& ions, const TrapConfig& trap);

struct JumpEvent {
    double t = 0;
    std::vector<int> order_before, order_after;  // ion indices by ascending z
    int dark_rank_before = -1, dark_rank_after = -1;
};

struct JumpReport {
    std::vector<JumpEvent> events;
    bool jumped = false;  // window indicator
    int rank_start = -1, rank_end = -1;  // dark ion's axial rank
};

// Scans the sampled axial order; a reordering must persist for 10 axial
// periods to count as an event. The window is flagged jumped when the dark
// ion's rank at the end differs from the start or any debounced event fired.
JumpReport detect_jumps(const Trajectory& traj, int dark_index);

enum class MotionMode { axial, radial };

// T = m <v_mode^2> / kB averaged over the window and all ions. The window
// must span at least 10 periods of the corresponding secular frequency.
double temperature_estimate(const Trajectory& traj, MotionMode mode,
                            double t_from, double t_to);

}  // namespace quadcool
