#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "quadcool/atomic_model.hpp"
#include "quadcool/constants.hpp"

namespace quadcool {

// Internal-state basis. Collapsed mode has one state per fine-structure
// level; resolved mode one state per Zeeman sublevel (18 for the Ca+ scheme).
struct StateSpace {
    struct State {
        LevelId level;
        int two_m;  // 2*m_j, unused (0) in collapsed mode
    };

    bool resolved = false;
    Vec3 quant_axis = Vec3::UnitZ();
    std::vector<State> states;

    static StateSpace collapsed(const LevelScheme& scheme);
    static StateSpace zeeman(const LevelScheme& scheme, const Vec3& quant_axis);

    int size() const { return static_cast<int>(states.size()); }
    int index_of(LevelId level, int two_m = 0) const;  // throws if absent
    std::vector<int> level_indices(LevelId level) const;
    std::string label(int i) const;
};

// One stimulated coupling (laser-driven, symmetric up/down). Kept alongside
// the matrix so force and diffusion bookkeeping can attribute photon flux
// to individual beams.
struct StimulatedLine {
    int beam = 0;  // index into the beams vector passed to build_rate_matrix
    int lower = 0;
    int upper = 0;
    double rate = 0;  // 1/s
};

struct RateMatrix {
    StateSpace space;
    Eigen::MatrixXd m;  // m(i,j): transfer rate from state j into state i
    std::vector<StimulatedLine> stimulated;

    void validate() const;  // column sums, sign structure; throws ModelError
    std::string to_csv() const;
};

struct RateModelOptions {
    // Repumper (866 nm) treated as saturating: flat pump rate independent of
    // detuning and power, strong enough to keep D3/2 lifetime ~< 1 us.
    bool repump_saturating = true;
    double repump_rate = 0.5 * constants::gamma_p12;
};

// Two-level reduction of the S1/2 -- D5/2 line with the assisting laser
// adiabatically eliminated through P3/2.
struct EffectiveTwoLevel {
    double gamma_eff = 0;     // Gamma' (rad/s)
    double light_shift = 0;   // AC Stark shift of D5/2 (rad/s)
    double detuning_eff = 0;  // probe detuning relative to shifted line (rad/s)
    double saturation = 0;    // s = (Omega^2/2)/(detuning_eff^2 + Gamma'^2/4)

    // Populate probe-dependent fields for a 729 nm drive of Rabi frequency
    // omega at bare detuning delta (Doppler already applied by caller).
    EffectiveTwoLevel at_probe(double delta, double omega) const;

    // Saturated-Lorentzian pump rate gamma_p = (Gamma'/2) s/(1+s).
    double pump_rate() const;
};

// Gamma' = Gamma_c + beta_out * Gamma * Omega^2 / (Gamma^2 + 4 Delta^2 + 2 Omega^2)
// for the assisting beam, plus the corresponding AC Stark shift
// delta = Delta * Omega^2 / (Gamma^2 + 4 Delta^2 + 2 Omega^2).
EffectiveTwoLevel effective_decay_rate(const LaserBeam& assist,
                                       const LevelScheme& scheme);

// Assemble the transfer-rate matrix for the given beams at fixed ion velocity
// and magnetic field. Detunings are Doppler shifted per beam; in resolved
// mode each Zeeman component gets its own shift and geometric line strength.
RateMatrix build_rate_matrix(const LevelScheme& scheme,
                             const std::vector<LaserBeam>& beams,
                             const Vec3& velocity, const Vec3& b_field,
                             bool zeeman_resolved,
                             const RateModelOptions& opts = {});

// Normalized null-space vector of M. Throws on a degenerate (dimension > 1)
// null space, which signals a disconnected pump/decay graph.
Eigen::VectorXd steady_state(const RateMatrix& m);

// p(t) = exp(M t) p0 via scaling-and-squaring matrix exponential.
Eigen::VectorXd evolve_populations(const RateMatrix& m,
                                   const Eigen::VectorXd& p0, double t);

// Photon emission rate per decay channel for the given populations.
struct ScatteringRates {
    struct Channel {
        double lambda = 0;
        LevelId upper = LevelId::S12;
        LevelId lower = LevelId::S12;
        double rate = 0;  // photons/s
    };
    std::vector<Channel> channels;

    double violet() const;       // dipole decays to the ground level
    double at_nm(int nm) const;  // throws if no such channel
    double total() const;
};

ScatteringRates scattering_rates(const StateSpace& space,
                                 const Eigen::VectorXd& p,
                                 const LevelScheme& scheme);

}  // namespace quadcool
