#pragma once

// 40Ca+ level scheme, laser beams and Zeeman structure.
//
// Units: wavelengths in m; all rates/detunings/Rabi frequencies angular
// (rad/s); magnetic field in T; powers in W; waists (1/e^2 intensity radius)
// in m; intensities in W/m^2.

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadcool {

using Vec3 = Eigen::Vector3d;

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LevelId { S12, P12, P32, D32, D52 };

struct Level {
    LevelId id;
    std::string name;  // "S1/2", ...
    double L, S, J;
    double g;  // Lande g-factor actually used (S1/2 deviates from LS value)
    int multiplicity() const { return static_cast<int>(2 * J + 1.5); }
    int two_j() const { return static_cast<int>(2 * J + 0.5); }
};

enum class TransKind { dipole, quadrupole };

struct Transition {
    LevelId lower, upper;
    double lambda;             // m
    TransKind kind;
    double gamma_upper_total;  // total decay rate of the upper level
    double branching;          // fraction of upper-level decays on this line
    double k() const;          // photon wavenumber 2*pi/lambda
    double gamma_partial() const { return gamma_upper_total * branching; }
};

struct LevelScheme {
    std::vector<Level> levels;
    std::vector<Transition> transitions;

    const Level& level(LevelId id) const;
    // transition whose wavelength matches within 2 nm; throws if none/ambiguous
    const Transition& transition_at(double lambda) const;
    const Transition* find_transition(double lambda) const;
    // sum of gamma_partial over all transitions decaying out of `upper`
    double total_decay_rate(LevelId upper) const;
};

// Default scheme: S1/2, P1/2, P3/2, D3/2, D5/2 with the standard 40Ca+
// wavelengths, linewidths and branching fractions.
LevelScheme build_ca40_scheme();

// Plain-text (key = value) serialization so other species can be loaded
// without code changes. Round-trips exactly.
std::string scheme_to_text(const LevelScheme& s);
LevelScheme scheme_from_text(const std::string& text);

// LS-coupling Lande formula, electron spin g set to 2:
//   g = 1 + [J(J+1) + S(S+1) - L(L+1)] / [2 J(J+1)]
double lande_g(double L, double S, double J);

struct Polarization {
    enum class Kind { linear, rotating } kind = Kind::linear;
    Vec3 axis = Vec3::UnitX();  // linear only; must be unit and orthogonal to k

    static Polarization linear(const Vec3& axis);
    static Polarization rotating();
};

struct LaserBeam {
    double lambda = 0;       // m; selects the driven transition
    double detuning = 0;     // rad/s from the unshifted line center
    Vec3 dir = Vec3::UnitZ();
    Polarization pol;
    double power = 0;        // W
    double waist = 0;        // m
    std::optional<double> rabi_override;  // rad/s; bypasses power/waist

    Vec3 k_vec() const;      // (2*pi/lambda) * dir
    // peak intensity of the Gaussian beam, I = 2P/(pi w^2)
    double intensity() const;
    // on-resonance Rabi frequency for the given partial linewidth
    double rabi(double gamma_partial) const;
};

// I_sat = 2 pi^2 hbar c Gamma_partial / (3 lambda^3)
double saturation_intensity(double lambda, double gamma_partial);

// Rabi frequency from beam power via the two-level saturation relation
// Omega^2 = (I / I_sat) * Gamma_partial^2 / 2.
double rabi_from_power(double power, double waist, double lambda,
                       double gamma_partial);

// One Zeeman component m_lower -> m_upper of a transition.
struct ZeemanLine {
    int two_ml, two_mu;
    double shift_coeff;  // g_u*m_u - g_l*m_l
    int delta_m() const { return (two_mu - two_ml) / 2; }
};

// All |delta_m| <= k components (k=1 dipole, k=2 quadrupole), ordered by
// (m_l, m_u). S1/2-D5/2 yields the 10 components seen in the experiment.
std::vector<ZeemanLine> enumerate_zeeman_lines(const LevelScheme& s,
                                               const Transition& t);

// Angular line shift c * mu_B * B / hbar (rad/s; sign = shift of the
// transition frequency).
double zeeman_shift(const ZeemanLine& line, double b_field);

// Geometric coupling factor g(delta_m) of an electric-quadrupole transition
// for beam direction k, linear polarization pol and field direction b
// (James 1998): with phi = angle(k,B) and gamma = angle of pol out of the
// (k,B) plane,
//   g(0)  = | cos(gamma) sin(2 phi) | / 2
//   g(+-1)= sqrt(cos^2 g cos^2 2phi + sin^2 g cos^2 phi) / sqrt(6)
//   g(+-2)= sqrt(cos^2 g sin^2 2phi / 4 + sin^2 g sin^2 phi) / sqrt(6)
// Sum over the five delta_m channels of g^2 is exactly 1/3.
// For B || k only delta_m = +-1 survive, each 1/sqrt(6).
double quadrupole_geometry_factor(const Vec3& b_dir, const Vec3& k_dir,
                                  const Vec3& pol_dir, int delta_m);

}  // namespace quadcool
