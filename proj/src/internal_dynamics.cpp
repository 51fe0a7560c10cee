#include "quadcool/internal_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "quadcool/angular.hpp"

namespace quadcool {

namespace {

constexpr double kColumnSumTol = 1e-9;

std::string frac_label(int two_m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%+d/2", two_m);
    return buf;
}

// Squared polarization weight |eps_q|^2 of a dipole beam for the spherical
// component q, quantization axis b_hat. Linear polarization must be
// transverse to k; a rotating polarization is averaged over the transverse
// azimuth. Linear polarization has equal sigma+ and sigma- weights.
double dipole_weight(const Polarization& pol, const Vec3& b_hat,
                     const Vec3& k_hat, int q) {
    if (std::abs(q) > 1) return 0.0;
    double w0;
    if (pol.kind == Polarization::Kind::rotating) {
        double cphi = std::clamp(k_hat.dot(b_hat), -1.0, 1.0);
        w0 = 0.5 * (1.0 - cphi * cphi);
    } else {
        Vec3 e = pol.axis.normalized();
        if (std::abs(e.dot(k_hat)) > 1e-6)
            throw ModelError("polarization must be transverse to k");
        double c = std::clamp(e.dot(b_hat), -1.0, 1.0);
        w0 = c * c;
    }
    return q == 0 ? w0 : 0.5 * (1.0 - w0);
}

// Squared quadrupole geometry factor g_{delta_m}^2, either for a fixed
// linear polarization or averaged over the transverse polarization azimuth.
double quad_geometry_sq(const Polarization& pol, const Vec3& b_hat,
                        const Vec3& k_hat, int dm) {
    if (pol.kind != Polarization::Kind::rotating) {
        double g = quadrupole_geometry_factor(b_hat, k_hat, pol.axis, dm);
        return g * g;
    }
    double c = std::clamp(k_hat.dot(b_hat), -1.0, 1.0);
    double c2 = c * c;
    switch (std::abs(dm)) {
        case 0:
            return 0.5 * c2 * (1.0 - c2);
        case 1: {
            double c2phi = 2.0 * c2 - 1.0;
            return (c2phi * c2phi + c2) / 12.0;
        }
        case 2:
            return (1.0 - c2) * (1.0 + c2) / 12.0;
        default:
            return 0.0;
    }
}

double lorentzian_pump(double omega_sq, double delta, double width) {
    return 0.25 * omega_sq * width /
           (delta * delta + 0.25 * width * width + 0.5 * omega_sq);
}

void add_symmetric(Eigen::MatrixXd& m, int a, int b, double rate) {
    m(b, a) += rate;
    m(a, a) -= rate;
    m(a, b) += rate;
    m(b, b) -= rate;
}

void add_decay(Eigen::MatrixXd& m, int upper, int lower, double rate) {
    m(lower, upper) += rate;
    m(upper, upper) -= rate;
}

const LaserBeam* find_assist(const LevelScheme& scheme,
                             const std::vector<LaserBeam>& beams,
                             LevelId quad_upper) {
    for (const auto& b : beams) {
        const Transition* t = scheme.find_transition(b.lambda);
        if (t && t->kind == TransKind::dipole && t->lower == quad_upper)
            return &b;
    }
    return nullptr;
}

}  // namespace

StateSpace StateSpace::collapsed(const LevelScheme& scheme) {
    StateSpace s;
    s.resolved = false;
    for (const auto& l : scheme.levels) s.states.push_back({l.id, 0});
    return s;
}

StateSpace StateSpace::zeeman(const LevelScheme& scheme, const Vec3& axis) {
    if (axis.norm() < 1e-300) throw ModelError("zero quantization axis");
    StateSpace s;
    s.resolved = true;
    s.quant_axis = axis.normalized();
    for (const auto& l : scheme.levels)
        for (int two_m = -l.two_j(); two_m <= l.two_j(); two_m += 2)
            s.states.push_back({l.id, two_m});
    return s;
}

int StateSpace::index_of(LevelId level, int two_m) const {
    for (size_t i = 0; i < states.size(); ++i)
        if (states[i].level == level && (!resolved || states[i].two_m == two_m))
            return static_cast<int>(i);
    throw ModelError("state not present in state space");
}

std::vector<int> StateSpace::level_indices(LevelId level) const {
    std::vector<int> out;
    for (size_t i = 0; i < states.size(); ++i)
        if (states[i].level == level) out.push_back(static_cast<int>(i));
    return out;
}

std::string StateSpace::label(int i) const {
    const auto& st = states.at(static_cast<size_t>(i));
    std::string name;
    switch (st.level) {
        case LevelId::S12: name = "S1/2"; break;
        case LevelId::P12: name = "P1/2"; break;
        case LevelId::P32: name = "P3/2"; break;
        case LevelId::D32: name = "D3/2"; break;
        case LevelId::D52: name = "D5/2"; break;
    }
    if (resolved) name += "(m=" + frac_label(st.two_m) + ")";
    return name;
}

void RateMatrix::validate() const {
    const int n = space.size();
    if (m.rows() != n || m.cols() != n)
        throw ModelError("rate matrix dimension mismatch");
    double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
    for (int j = 0; j < n; ++j) {
        if (m(j, j) > 0)
            throw ModelError("rate matrix has positive diagonal entry");
        double col = 0;
        for (int i = 0; i < n; ++i) {
            if (i != j && m(i, j) < 0)
                throw ModelError("rate matrix has negative off-diagonal entry");
            col += m(i, j);
        }
        if (std::abs(col) > kColumnSumTol * scale)
            throw ModelError("rate matrix column sum nonzero");
    }
}

std::string RateMatrix::to_csv() const {
    std::ostringstream os;
    os << "state";
    for (int i = 0; i < space.size(); ++i) os << "," << space.label(i);
    os << "\n";
    char buf[32];
    for (int i = 0; i < space.size(); ++i) {
        os << space.label(i);
        for (int j = 0; j < space.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            os << "," << buf;
        }
        os << "\n";
    }
    return os.str();
}

EffectiveTwoLevel EffectiveTwoLevel::at_probe(double delta, double omega) const {
    EffectiveTwoLevel out = *this;
    out.detuning_eff = delta - light_shift;
    out.saturation = 0.5 * omega * omega /
                     (out.detuning_eff * out.detuning_eff +
                      0.25 * gamma_eff * gamma_eff);
    return out;
}

double EffectiveTwoLevel::pump_rate() const {
    return 0.5 * gamma_eff * saturation / (1.0 + saturation);
}

EffectiveTwoLevel effective_decay_rate(const LaserBeam& assist,
                                       const LevelScheme& scheme) {
    const Transition& t = scheme.transition_at(assist.lambda);
    if (t.kind != TransKind::dipole)
        throw ModelError("assisting beam must drive a dipole transition");

    double gamma = scheme.total_decay_rate(t.upper);
    double gamma_c = scheme.total_decay_rate(t.lower);
    double beta_out = 1.0 - t.branching;  // decays leaving the metastable level
    double omega = assist.rabi(t.gamma_partial());
    double delta = assist.detuning;
    double denom = gamma * gamma + 4.0 * delta * delta + 2.0 * omega * omega;

    EffectiveTwoLevel etl;
    etl.gamma_eff = gamma_c + beta_out * gamma * omega * omega / denom;
    etl.light_shift = delta * omega * omega / denom;
    etl.detuning_eff = -etl.light_shift;
    etl.saturation = 0.0;
    return etl;
}

namespace {

void add_spontaneous(const LevelScheme& scheme, const StateSpace& space,
                     Eigen::MatrixXd& m) {
    for (const auto& t : scheme.transitions) {
        double rate = t.gamma_partial();
        if (rate <= 0) continue;
        if (!space.resolved) {
            add_decay(m, space.index_of(t.upper), space.index_of(t.lower), rate);
            continue;
        }
        const Level& up = scheme.level(t.upper);
        const Level& lo = scheme.level(t.lower);
        int two_k = t.kind == TransKind::dipole ? 2 : 4;
        for (int two_mu = -up.two_j(); two_mu <= up.two_j(); two_mu += 2) {
            for (int two_ml = -lo.two_j(); two_ml <= lo.two_j(); two_ml += 2) {
                int two_q = two_mu - two_ml;
                if (std::abs(two_q) > two_k) continue;
                double w = clebsch_gordan_sq(lo.two_j(), two_ml, two_k, two_q,
                                             up.two_j(), two_mu);
                if (w <= 0) continue;
                add_decay(m, space.index_of(t.upper, two_mu),
                          space.index_of(t.lower, two_ml), rate * w);
            }
        }
    }
}

struct LineEntry {
    ZeemanLine line;
    double weight = 0;  // kappa-normalized relative strength
};

// Relative strengths of the Zeeman components of one beam, normalized so
// that the average over lower sublevels of the summed weights is 1; the
// fully-degenerate limit then reproduces the collapsed single-line model.
std::vector<LineEntry> line_strengths(const LevelScheme& scheme,
                                      const Transition& t,
                                      const LaserBeam& beam,
                                      const Vec3& quant_axis) {
    const Level& up = scheme.level(t.upper);
    const Level& lo = scheme.level(t.lower);
    Vec3 k_hat = beam.dir.normalized();
    std::vector<LineEntry> out;
    double sum = 0;
    for (const auto& line : enumerate_zeeman_lines(scheme, t)) {
        int dm = line.delta_m();
        double geo;
        if (t.kind == TransKind::dipole)
            geo = dipole_weight(beam.pol, quant_axis, k_hat, dm);
        else
            geo = 6.0 * quad_geometry_sq(beam.pol, quant_axis, k_hat, dm);
        double raw = geo * clebsch_gordan_sq(lo.two_j(), line.two_ml,
                                             t.kind == TransKind::dipole ? 2 : 4,
                                             line.two_mu - line.two_ml,
                                             up.two_j(), line.two_mu);
        if (raw <= 0) continue;
        out.push_back({line, raw});
        sum += raw;
    }
    if (sum <= 0) return {};
    double kappa = static_cast<double>(lo.multiplicity()) / sum;
    for (auto& e : out) e.weight *= kappa;
    return out;
}

}  // namespace

RateMatrix build_rate_matrix(const LevelScheme& scheme,
                             const std::vector<LaserBeam>& beams,
                             const Vec3& velocity, const Vec3& b_field,
                             bool zeeman_resolved,
                             const RateModelOptions& opts) {
    double b_mag = b_field.norm();
    Vec3 axis = b_mag > 0 ? Vec3(b_field / b_mag) : Vec3::UnitZ();

    RateMatrix rm;
    rm.space = zeeman_resolved ? StateSpace::zeeman(scheme, axis)
                               : StateSpace::collapsed(scheme);
    const int n = rm.space.size();
    rm.m = Eigen::MatrixXd::Zero(n, n);

    add_spontaneous(scheme, rm.space, rm.m);

    for (size_t bi = 0; bi < beams.size(); ++bi) {
        const LaserBeam& beam = beams[bi];
        const Transition& t = scheme.transition_at(beam.lambda);
        double doppler = beam.k_vec().dot(velocity);
        double delta = beam.detuning - doppler;

        bool saturating_repump =
            opts.repump_saturating && t.kind == TransKind::dipole &&
            t.upper == LevelId::P12 && t.lower == LevelId::D32;

        double width, light_shift = 0;
        if (t.kind == TransKind::quadrupole) {
            const LaserBeam* assist = find_assist(scheme, beams, t.upper);
            if (assist) {
                EffectiveTwoLevel etl = effective_decay_rate(*assist, scheme);
                width = etl.gamma_eff;
                light_shift = etl.light_shift;
            } else {
                width = scheme.total_decay_rate(t.upper) +
                        scheme.total_decay_rate(t.lower);
            }
        } else {
            width = scheme.total_decay_rate(t.upper);
        }

        double omega_sq = 0;
        if (!saturating_repump) {
            double om = beam.rabi(t.gamma_partial());
            omega_sq = om * om;
        }

        if (!rm.space.resolved) {
            int lo = rm.space.index_of(t.lower);
            int up = rm.space.index_of(t.upper);
            double rate = saturating_repump
                              ? opts.repump_rate
                              : lorentzian_pump(omega_sq, delta - light_shift,
                                                width);
            if (rate > 0) {
                add_symmetric(rm.m, lo, up, rate);
                rm.stimulated.push_back({static_cast<int>(bi), lo, up, rate});
            }
            continue;
        }

        for (const auto& e : line_strengths(scheme, t, beam, axis)) {
            double shift = zeeman_shift(e.line, b_mag);
            double rate;
            if (saturating_repump) {
                rate = opts.repump_rate * e.weight;
            } else {
                // weight scales the pump strength only; the power-broadening
                // term keeps the full Omega^2 so that the degenerate (B -> 0)
                // limit reproduces the collapsed single-line model exactly
                rate = e.weight * lorentzian_pump(omega_sq,
                                                  delta - light_shift - shift,
                                                  width);
            }
            if (rate <= 0) continue;
            int lo = rm.space.index_of(t.lower, e.line.two_ml);
            int up = rm.space.index_of(t.upper, e.line.two_mu);
            add_symmetric(rm.m, lo, up, rate);
            rm.stimulated.push_back({static_cast<int>(bi), lo, up, rate});
        }
    }

    rm.validate();
    return rm;
}

Eigen::VectorXd steady_state(const RateMatrix& rm) {
    rm.validate();
    const int n = rm.space.size();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rm.m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv(0) > 0 ? sv(0) : 1.0;
    int null_dim = 0;
    for (int i = 0; i < n; ++i)
        if (sv(i) <= 1e-13 * smax) ++null_dim;
    if (null_dim > 1)
        throw ModelError(
            "steady_state: degenerate null space (disconnected state graph)");

    Eigen::VectorXd p = svd.matrixV().col(n - 1);
    double s = p.sum();
    if (std::abs(s) < 1e-12)
        throw ModelError("steady_state: null vector has zero total population");
    p /= s;
    for (int i = 0; i < n; ++i) {
        if (p(i) < -1e-8)
            throw ModelError("steady_state: negative population component");
        if (p(i) < 0) p(i) = 0;
    }
    p /= p.sum();

    double residual = (rm.m * p).cwiseAbs().maxCoeff();
    double scale = std::max(rm.m.cwiseAbs().maxCoeff(), 1.0);
    if (residual > 1e-9 * scale)
        throw ModelError("steady_state: residual exceeds tolerance");
    return p;
}

Eigen::VectorXd evolve_populations(const RateMatrix& rm,
                                   const Eigen::VectorXd& p0, double t) {
    if (t < 0) throw ModelError("evolve_populations: negative time");
    if (p0.size() != rm.space.size())
        throw ModelError("evolve_populations: population size mismatch");
    if (std::abs(p0.sum() - 1.0) > 1e-6)
        throw ModelError("evolve_populations: populations not normalized");
    if (t == 0) return p0;
    Eigen::MatrixXd prop = (rm.m * t).exp();
    Eigen::VectorXd p = prop * p0;
    // scaling-and-squaring roundoff breaks normalization at large |M|t;
    // the exact propagator is stochastic, so rescale to unit total
    double s = p.sum();
    if (!(s > 0.5 && s < 2.0))
        throw ModelError("evolve_populations: propagator lost normalization");
    return p / s;
}

ScatteringRates scattering_rates(const StateSpace& space,
                                 const Eigen::VectorXd& p,
                                 const LevelScheme& scheme) {
    if (p.size() != space.size())
        throw ModelError("scattering_rates: population size mismatch");
    ScatteringRates out;
    for (const auto& t : scheme.transitions) {
        double pop = 0;
        for (int i : space.level_indices(t.upper)) pop += p(i);
        out.channels.push_back({t.lambda, t.upper, t.lower,
                                pop * t.gamma_partial()});
    }
    return out;
}

double ScatteringRates::violet() const {
    double s = 0;
    for (const auto& c : channels)
        if (c.lower == LevelId::S12 && c.lambda < 450e-9) s += c.rate;
    return s;
}

double ScatteringRates::at_nm(int nm) const {
    for (const auto& c : channels)
        if (static_cast<int>(std::lround(c.lambda * 1e9)) == nm) return c.rate;
    throw ModelError("no scattering channel at requested wavelength");
}

double ScatteringRates::total() const {
    double s = 0;
    for (const auto& c : channels) s += c.rate;
    return s;
}

}  // namespace quadcool
