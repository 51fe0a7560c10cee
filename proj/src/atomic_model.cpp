#include "quadcool/atomic_model.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "quadcool/constants.hpp"

namespace quadcool {

namespace k = constants;

double Transition::k() const { return k::two_pi / lambda; }

const Level& LevelScheme::level(LevelId id) const {
    for (const auto& l : levels)
        if (l.id == id) return l;
    throw ModelError("level not in scheme");
}

const Transition* LevelScheme::find_transition(double lambda) const {
    const Transition* best = nullptr;
    for (const auto& t : transitions) {
        if (std::abs(t.lambda - lambda) < 2e-9) {
            if (best) throw ModelError("ambiguous transition wavelength");
            best = &t;
        }
    }
    return best;
}

const Transition& LevelScheme::transition_at(double lambda) const {
    const Transition* t = find_transition(lambda);
    if (!t) throw ModelError("no transition near requested wavelength");
    return *t;
}

double LevelScheme::total_decay_rate(LevelId upper) const {
    double g = 0;
    for (const auto& t : transitions)
        if (t.upper == upper) g += t.gamma_partial();
    return g;
}

double lande_g(double L, double S, double J) {
    return 1.0 + (J * (J + 1) + S * (S + 1) - L * (L + 1)) / (2 * J * (J + 1));
}

LevelScheme build_ca40_scheme() {
    LevelScheme s;
    s.levels = {
        {LevelId::S12, "S1/2", 0, 0.5, 0.5, k::g_s12},
        {LevelId::P12, "P1/2", 1, 0.5, 0.5, lande_g(1, 0.5, 0.5)},
        {LevelId::P32, "P3/2", 1, 0.5, 1.5, lande_g(1, 0.5, 1.5)},
        {LevelId::D32, "D3/2", 2, 0.5, 1.5, lande_g(2, 0.5, 1.5)},
        {LevelId::D52, "D5/2", 2, 0.5, 2.5, lande_g(2, 0.5, 2.5)},
    };
    s.transitions = {
        {LevelId::S12, LevelId::D52, k::lambda_729, TransKind::quadrupole,
         k::gamma_d52, 1.0},
        {LevelId::S12, LevelId::D32, k::lambda_733, TransKind::quadrupole,
         k::gamma_d32, 1.0},
        {LevelId::S12, LevelId::P12, k::lambda_397, TransKind::dipole,
         k::gamma_p12, k::branch_p12_s12},
        {LevelId::D32, LevelId::P12, k::lambda_866, TransKind::dipole,
         k::gamma_p12, k::branch_p12_d32},
        {LevelId::S12, LevelId::P32, k::lambda_393, TransKind::dipole,
         k::gamma_p32, k::branch_p32_s12},
        {LevelId::D52, LevelId::P32, k::lambda_854, TransKind::dipole,
         k::gamma_p32, k::branch_p32_d52},
        {LevelId::D32, LevelId::P32, k::lambda_850, TransKind::dipole,
         k::gamma_p32, k::branch_p32_d32},
    };
    return s;
}

namespace {

const char* level_name(LevelId id) {
    switch (id) {
        case LevelId::S12: return "S1/2";
        case LevelId::P12: return "P1/2";
        case LevelId::P32: return "P3/2";
        case LevelId::D32: return "D3/2";
        case LevelId::D52: return "D5/2";
    }
    return "?";
}

LevelId level_from_name(const std::string& n) {
    for (LevelId id : {LevelId::S12, LevelId::P12, LevelId::P32, LevelId::D32,
                       LevelId::D52})
        if (n == level_name(id)) return id;
    throw ModelError("unknown level name: " + n);
}

}  // namespace

std::string scheme_to_text(const LevelScheme& s) {
    std::ostringstream os;
    os.precision(17);
    os << "# level name L S J g\n";
    for (const auto& l : s.levels)
        os << "level " << l.name << " " << l.L << " " << l.S << " " << l.J
           << " " << l.g << "\n";
    os << "# transition lower upper lambda_nm kind gamma_total_MHz branching\n";
    for (const auto& t : s.transitions)
        os << "transition " << level_name(t.lower) << " " << level_name(t.upper)
           << " " << t.lambda * 1e9 << " "
           << (t.kind == TransKind::dipole ? "dipole" : "quadrupole") << " "
           << t.gamma_upper_total / (k::two_pi * 1e6) << " " << t.branching
           << "\n";
    return os.str();
}

LevelScheme scheme_from_text(const std::string& text) {
    LevelScheme s;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "level") {
            Level l{};
            std::string name;
            ls >> name >> l.L >> l.S >> l.J >> l.g;
            if (!ls) throw ModelError("malformed level line: " + line);
            l.name = name;
            l.id = level_from_name(name);
            s.levels.push_back(l);
        } else if (tag == "transition") {
            std::string lo, up, kind;
            double lambda_nm, gamma_mhz, branching;
            ls >> lo >> up >> lambda_nm >> kind >> gamma_mhz >> branching;
            if (!ls) throw ModelError("malformed transition line: " + line);
            TransKind tk;
            if (kind == "dipole") tk = TransKind::dipole;
            else if (kind == "quadrupole") tk = TransKind::quadrupole;
            else throw ModelError("unknown transition kind: " + kind);
            s.transitions.push_back({level_from_name(lo), level_from_name(up),
                                     lambda_nm * 1e-9, tk,
                                     gamma_mhz * k::two_pi * 1e6, branching});
        } else {
            throw ModelError("unknown scheme line tag: " + tag);
        }
    }
    if (s.levels.empty() || s.transitions.empty())
        throw ModelError("scheme text has no levels or no transitions");
    return s;
}

Polarization Polarization::linear(const Vec3& axis) {
    double n = axis.norm();
    if (n < 1e-12) throw ModelError("polarization axis must be nonzero");
    return {Kind::linear, axis / n};
}

Polarization Polarization::rotating() { return {Kind::rotating, Vec3::UnitX()}; }

Vec3 LaserBeam::k_vec() const {
    double n = dir.norm();
    if (n < 1e-12) throw ModelError("beam direction must be nonzero");
    return (k::two_pi / lambda) * (dir / n);
}

double LaserBeam::intensity() const {
    if (waist <= 0) throw ModelError("beam waist must be positive");
    return 2.0 * power / (k::pi * waist * waist);
}

double LaserBeam::rabi(double gamma_partial) const {
    if (rabi_override) return *rabi_override;
    return rabi_from_power(power, waist, lambda, gamma_partial);
}

double saturation_intensity(double lambda, double gamma_partial) {
    if (lambda <= 0 || gamma_partial <= 0)
        throw ModelError("saturation_intensity: bad arguments");
    return 2.0 * k::pi * k::pi * k::hbar * k::c_light * gamma_partial /
           (3.0 * lambda * lambda * lambda);
}

double rabi_from_power(double power, double waist, double lambda,
                       double gamma_partial) {
    if (power < 0) throw ModelError("beam power must be >= 0");
    LaserBeam b;
    b.power = power;
    b.waist = waist;
    double isat = saturation_intensity(lambda, gamma_partial);
    return gamma_partial * std::sqrt(b.intensity() / isat / 2.0);
}

std::vector<ZeemanLine> enumerate_zeeman_lines(const LevelScheme& s,
                                               const Transition& t) {
    const Level& lo = s.level(t.lower);
    const Level& up = s.level(t.upper);
    const int k_rank = t.kind == TransKind::dipole ? 1 : 2;
    std::vector<ZeemanLine> lines;
    for (int two_ml = -lo.two_j(); two_ml <= lo.two_j(); two_ml += 2)
        for (int two_mu = -up.two_j(); two_mu <= up.two_j(); two_mu += 2) {
            if (std::abs(two_mu - two_ml) > 2 * k_rank) continue;
            double c = up.g * (two_mu / 2.0) - lo.g * (two_ml / 2.0);
            lines.push_back({two_ml, two_mu, c});
        }
    return lines;
}

double zeeman_shift(const ZeemanLine& line, double b_field) {
    return line.shift_coeff * k::mu_bohr * b_field / k::hbar;
}

double quadrupole_geometry_factor(const Vec3& b_dir, const Vec3& k_dir,
                                  const Vec3& pol_dir, int delta_m) {
    if (std::abs(delta_m) > 2) return 0.0;
    Vec3 kh = k_dir.normalized();
    Vec3 bh = b_dir.normalized();
    Vec3 eh = pol_dir.normalized();
    if (std::abs(eh.dot(kh)) > 1e-6)
        throw ModelError("polarization must be transverse to k");

    const double cphi = kh.dot(bh);
    Vec3 out = kh.cross(bh);
    const double sphi = out.norm();

    // gamma: angle of polarization out of the (k,B) plane. Degenerate when
    // B || k; the factors below are then gamma-independent, pick gamma = 0.
    double cg = 1.0, sg = 0.0;
    if (sphi > 1e-9) {
        Vec3 in_plane = (bh - cphi * kh).normalized();  // transverse, in plane
        Vec3 out_plane = out / sphi;
        cg = eh.dot(in_plane);
        sg = eh.dot(out_plane);
        double n = std::hypot(cg, sg);
        cg /= n;
        sg /= n;
    }
    const double s2phi = 2 * sphi * cphi;
    const double c2phi = cphi * cphi - sphi * sphi;

    switch (std::abs(delta_m)) {
        case 0:
            return 0.5 * std::abs(cg * s2phi);
        case 1:
            return std::sqrt(cg * cg * c2phi * c2phi + sg * sg * cphi * cphi) /
                   std::sqrt(6.0);
        case 2:
            return std::sqrt(0.25 * cg * cg * s2phi * s2phi +
                             sg * sg * sphi * sphi) /
                   std::sqrt(6.0);
    }
    return 0.0;
}

}  // namespace quadcool
