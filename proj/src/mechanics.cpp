#include "quadcool/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace quadcool {

namespace {

constexpr double unit_tol = 1e-9;

bool is_unit(const Vec3& v) { return std::abs(v.norm() - 1.0) < unit_tol; }

struct BeamSlots {
    int pump = -1;    // quadrupole beam (729 nm)
    int assist = -1;  // dipole beam out of the quadrupole's upper level
    int repump = -1;  // dipole beam out of D3/2
};

BeamSlots classify(const LevelScheme& scheme,
                   const std::vector<LaserBeam>& beams) {
    BeamSlots s;
    for (size_t i = 0; i < beams.size(); ++i) {
        const Transition& t = scheme.transition_at(beams[i].lambda);
        int idx = static_cast<int>(i);
        if (t.kind == TransKind::quadrupole && t.upper == LevelId::D52) {
            if (s.pump < 0) s.pump = idx;
        } else if (t.kind == TransKind::dipole && t.lower == LevelId::D52) {
            if (s.assist < 0) s.assist = idx;
        } else if (t.kind == TransKind::dipole && t.lower == LevelId::D32 &&
                   t.upper == LevelId::P12) {
            if (s.repump < 0) s.repump = idx;
        }
    }
    if (s.pump < 0) throw ModelError("mean_force: missing pump (729 nm) beam");
    if (s.assist < 0)
        throw ModelError("mean_force: missing assisting (854 nm) beam");
    if (s.repump < 0)
        throw ModelError("mean_force: missing repumper (866 nm) beam");
    return s;
}

std::vector<LaserBeam> oriented_beams(const std::vector<LaserBeam>& beams,
                                      const BeamSlots& slots,
                                      const BeamGeometry& geo) {
    std::vector<LaserBeam> out = beams;
    out[static_cast<size_t>(slots.pump)].dir = geo.k729_hat;
    out[static_cast<size_t>(slots.assist)].dir = geo.k854_hat;
    if (geo.k866_hat)
        out[static_cast<size_t>(slots.repump)].dir = *geo.k866_hat;
    return out;
}

struct ForcePoint {
    Vec3 force = Vec3::Zero();
    double diffusion = 0;
    ScatteringRates rates;
};

ForcePoint evaluate(const LevelScheme& scheme,
                    const std::vector<LaserBeam>& oriented,
                    const BeamSlots& slots, const BeamGeometry& geo,
                    const Vec3& velocity, const Vec3& b_field, double xi) {
    bool resolved = b_field.norm() > 0;
    RateMatrix rm =
        build_rate_matrix(scheme, oriented, velocity, b_field, resolved);
    Eigen::VectorXd p = steady_state(rm);

    auto stim_net = [&](int bi) {
        double s = 0;
        for (const auto& line : rm.stimulated)
            if (line.beam == bi) s += line.rate * (p(line.lower) - p(line.upper));
        return s;
    };
    auto level_pop = [&](LevelId level) {
        double s = 0;
        for (int i : rm.space.level_indices(level)) s += p(i);
        return s;
    };
    // net flow through the driven level pair; in steady state equal for the
    // pump and assist pairs, so layout force ratios stay purely kinematic
    auto net_flux = [&](int bi) {
        const Transition& t =
            scheme.transition_at(oriented[static_cast<size_t>(bi)].lambda);
        return stim_net(bi) - t.gamma_partial() * level_pop(t.upper);
    };

    ForcePoint out;
    auto add = [&](int bi) {
        const LaserBeam& b = oriented[static_cast<size_t>(bi)];
        out.force += constants::hbar * (constants::two_pi / b.lambda) *
                     net_flux(bi) * b.dir;
    };
    add(slots.pump);
    add(slots.assist);
    if (geo.k866_hat) add(slots.repump);

    out.rates = scattering_rates(rm.space, p, scheme);
    double dsum = 0;
    for (const auto& ch : out.rates.channels) {
        double k = constants::two_pi / ch.lambda;
        dsum += k * k * ch.rate;
    }
    out.diffusion = constants::hbar * constants::hbar * (1.0 + xi) * dsum;
    return out;
}

double axial_kick(const BeamGeometry& g, double lambda_pump,
                  double lambda_assist) {
    double kp = constants::two_pi / lambda_pump;
    double ka = constants::two_pi / lambda_assist;
    return std::abs(kp * g.k729_hat.dot(g.axis) + ka * g.k854_hat.dot(g.axis));
}

}  // namespace

const char* to_string(GeometryTag tag) {
    switch (tag) {
        case GeometryTag::co_propagating_axial: return "co_propagating_axial";
        case GeometryTag::counter_propagating_axial:
            return "counter_propagating_axial";
        case GeometryTag::angled_45_with_axial_assist:
            return "angled_45_with_axial_assist";
    }
    return "unknown";
}

BeamGeometry BeamGeometry::co_axial() {
    BeamGeometry g;
    g.tag = GeometryTag::co_propagating_axial;
    g.k729_hat = g.k854_hat = g.axis = Vec3::UnitZ();
    return g;
}

BeamGeometry BeamGeometry::counter_axial() {
    BeamGeometry g;
    g.tag = GeometryTag::counter_propagating_axial;
    g.k729_hat = g.axis = Vec3::UnitZ();
    g.k854_hat = -Vec3::UnitZ();
    return g;
}

BeamGeometry BeamGeometry::angled_45() {
    BeamGeometry g;
    g.tag = GeometryTag::angled_45_with_axial_assist;
    g.k729_hat = Vec3(1, 0, 1).normalized();
    g.k854_hat = g.axis = Vec3::UnitZ();
    return g;
}

void BeamGeometry::validate() const {
    if (!is_unit(k729_hat) || !is_unit(k854_hat) || !is_unit(axis))
        throw ModelError("BeamGeometry: direction vectors must be unit length");
    if (k866_hat && !is_unit(*k866_hat))
        throw ModelError("BeamGeometry: repumper direction must be unit length");
    double dot = k729_hat.dot(k854_hat);
    switch (tag) {
        case GeometryTag::co_propagating_axial:
            if (std::abs(dot - 1.0) > unit_tol ||
                std::abs(std::abs(k729_hat.dot(axis)) - 1.0) > unit_tol)
                throw ModelError("BeamGeometry: co tag requires parallel axial beams");
            break;
        case GeometryTag::counter_propagating_axial:
            if (std::abs(dot + 1.0) > unit_tol ||
                std::abs(std::abs(k729_hat.dot(axis)) - 1.0) > unit_tol)
                throw ModelError(
                    "BeamGeometry: counter tag requires antiparallel axial beams");
            break;
        case GeometryTag::angled_45_with_axial_assist:
            if (std::abs(k729_hat.dot(axis) - std::sqrt(0.5)) > unit_tol)
                throw ModelError("BeamGeometry: angled tag requires 45 degree pump");
            if (std::abs(std::abs(k854_hat.dot(axis)) - 1.0) > unit_tol)
                throw ModelError("BeamGeometry: angled tag requires axial assist");
            break;
    }
}

KickRatio momentum_kick_ratio(const BeamGeometry& co,
                              const BeamGeometry& counter, double lambda_pump,
                              double lambda_assist) {
    co.validate();
    counter.validate();
    if (co.tag == GeometryTag::angled_45_with_axial_assist ||
        counter.tag == GeometryTag::angled_45_with_axial_assist)
        throw ModelError("momentum_kick_ratio: both geometries must be axial");
    double num = axial_kick(co, lambda_pump, lambda_assist);
    double den = axial_kick(counter, lambda_pump, lambda_assist);
    KickRatio r;
    if (den <= 1e-9 * num) {
        r.value = std::numeric_limits<double>::infinity();
        r.unbounded = true;
    } else {
        r.value = num / den;
    }
    return r;
}

Vec3 mean_force(const LevelScheme& scheme, const std::vector<LaserBeam>& beams,
                const BeamGeometry& geometry, const Vec3& velocity,
                const Vec3& b_field) {
    geometry.validate();
    BeamSlots slots = classify(scheme, beams);
    auto oriented = oriented_beams(beams, slots, geometry);
    return evaluate(scheme, oriented, slots, geometry, velocity, b_field,
                    1.0 / 3.0)
        .force;
}

SteadyPoint steady_point(const LevelScheme& scheme,
                         const std::vector<LaserBeam>& beams,
                         const BeamGeometry& geometry, double detuning_729,
                         const Vec3& velocity, const Vec3& b_field) {
    geometry.validate();
    BeamSlots slots = classify(scheme, beams);
    auto oriented = oriented_beams(beams, slots, geometry);
    oriented[static_cast<size_t>(slots.pump)].detuning = detuning_729;
    ForcePoint pt = evaluate(scheme, oriented, slots, geometry, velocity,
                             b_field, 1.0 / 3.0);
    return SteadyPoint{pt.force, std::move(pt.rates)};
}

std::string ForceProfile::to_csv() const {
    std::string out = "v[m/s],F[N],D[kg^2 m^2/s^3]\n";
    char buf[128];
    for (size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", v[i], force[i],
                      diffusion[i]);
        out += buf;
    }
    return out;
}

ForceProfile force_profile(const LevelScheme& scheme,
                           const std::vector<LaserBeam>& beams,
                           const BeamGeometry& geometry, double detuning_729,
                           const Vec3& b_field,
                           const std::vector<double>& v_grid, double xi) {
    geometry.validate();
    if (v_grid.empty()) throw ModelError("force_profile: empty velocity grid");
    for (size_t i = 1; i < v_grid.size(); ++i)
        if (!(v_grid[i] > v_grid[i - 1]))
            throw ModelError("force_profile: grid must be strictly increasing");

    BeamSlots slots = classify(scheme, beams);
    auto oriented = oriented_beams(beams, slots, geometry);
    oriented[static_cast<size_t>(slots.pump)].detuning = detuning_729;

    ForceProfile prof;
    prof.v = v_grid;
    prof.detuning_729 = detuning_729;
    prof.b_field = b_field;
    prof.geometry = geometry.tag;
    prof.gamma_eff =
        effective_decay_rate(oriented[static_cast<size_t>(slots.assist)], scheme)
            .gamma_eff;
    prof.k_doppler =
        constants::two_pi / oriented[static_cast<size_t>(slots.pump)].lambda;
    prof.xi = xi;
    prof.force.reserve(v_grid.size());
    prof.diffusion.reserve(v_grid.size());

    for (double v : v_grid) {
        ForcePoint pt = evaluate(scheme, oriented, slots, geometry,
                                 v * geometry.axis, b_field, xi);
        double f = pt.force.dot(geometry.axis);
        if (!std::isfinite(f))
            throw ModelError("force_profile: non-finite force");
        prof.force.push_back(f);
        prof.diffusion.push_back(pt.diffusion);
    }
    return prof;
}

double FrictionDiffusion::limit_temperature() const {
    if (alpha <= 0)
        throw ModelError("limit_temperature: no cooling (alpha <= 0)");
    return d0 / (2.0 * alpha * constants::k_boltzmann);
}

FrictionDiffusion friction_and_diffusion(const ForceProfile& prof) {
    const auto& v = prof.v;
    const size_t n = v.size();
    if (n < 2 || v.front() > 0 || v.back() < 0)
        throw ModelError("friction_and_diffusion: grid must bracket v=0");

    size_t lo = 0, hi = 0;
    auto it = std::lower_bound(v.begin(), v.end(), 0.0);
    size_t i = static_cast<size_t>(it - v.begin());
    if (i < n && v[i] == 0.0) {
        if (i == 0 || i + 1 == n)
            throw ModelError("friction_and_diffusion: grid must bracket v=0");
        lo = i - 1;
        hi = i + 1;
    } else {
        lo = i - 1;
        hi = i;
    }

    double spacing = v[hi] - v[lo];
    if (prof.gamma_eff > 0 && prof.k_doppler > 0 &&
        spacing > prof.gamma_eff / (10.0 * prof.k_doppler))
        throw ModelError("friction_and_diffusion: velocity grid too coarse");

    FrictionDiffusion fd;
    fd.alpha = -(prof.force[hi] - prof.force[lo]) / spacing;
    double w = (0.0 - v[lo]) / spacing;
    fd.d0 = (1.0 - w) * prof.diffusion[lo] + w * prof.diffusion[hi];
    return fd;
}

VelocityInterval capture_range(const ForceProfile& prof,
                               double threshold_fraction) {
    if (!(threshold_fraction > 0 && threshold_fraction < 1))
        throw ModelError("capture_range: threshold must be in (0,1)");
    const size_t n = prof.v.size();
    if (n == 0) throw ModelError("capture_range: empty profile");

    size_t ip = 0;
    double peak = 0;
    for (size_t i = 0; i < n; ++i) {
        double m = std::abs(prof.force[i]);
        if (!std::isfinite(m)) throw ModelError("capture_range: non-finite force");
        if (m > peak) {
            peak = m;
            ip = i;
        }
    }
    if (peak <= 0) throw ModelError("capture_range: profile has no force peak");

    double cut = threshold_fraction * peak;
    size_t lo = ip, hi = ip;
    while (lo > 0 && std::abs(prof.force[lo - 1]) >= cut) --lo;
    while (hi + 1 < n && std::abs(prof.force[hi + 1]) >= cut) ++hi;

    VelocityInterval out{prof.v[lo], prof.v[hi]};
    // refine the crossing points linearly where a neighbor exists
    if (lo > 0) {
        double f0 = std::abs(prof.force[lo - 1]), f1 = std::abs(prof.force[lo]);
        if (f1 > f0)
            out.v_lo = prof.v[lo - 1] +
                       (cut - f0) / (f1 - f0) * (prof.v[lo] - prof.v[lo - 1]);
    }
    if (hi + 1 < n) {
        double f0 = std::abs(prof.force[hi]), f1 = std::abs(prof.force[hi + 1]);
        if (f0 > f1)
            out.v_hi = prof.v[hi] +
                       (f0 - cut) / (f0 - f1) * (prof.v[hi + 1] - prof.v[hi]);
    }
    return out;
}

}  // namespace quadcool
