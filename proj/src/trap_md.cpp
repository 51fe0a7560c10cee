#include "quadcool/trap_md.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "quadcool/rng.hpp"

namespace quadcool {

namespace {

namespace kc = constants;

// Axial chain equilibrium in Coulomb-length units: minimize
// sum u_i^2/2 + sum_{i<j} 1/|u_i - u_j| by damped Newton iteration.
Eigen::VectorXd solve_chain(int n) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = 1.0 * i - 0.5 * (n - 1);

    auto grad = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = x;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double d = x(i) - x(j);
                g(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
            }
        return g;
    };

    for (int iter = 0; iter < 200; ++iter) {
        Eigen::VectorXd g = grad(u);
        if (g.lpNorm<Eigen::Infinity>() < 1e-13 * n) return u;

        Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
        double min_gap = 1e30;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                double d = std::abs(u(i) - u(j));
                min_gap = std::min(min_gap, d);
                double w = 2.0 / (d * d * d);
                h(i, i) += w;
                h(i, j) -= w;
            }
        Eigen::VectorXd du = h.ldlt().solve(g);
        double cap = 0.4 * min_gap;
        double m = du.lpNorm<Eigen::Infinity>();
        if (m > cap) du *= cap / m;  // keep the ordering intact
        u -= du;
    }
    throw NumericalError("equilibrium_positions: Newton did not converge");
}

// Transverse Hessian of the chain in omega_z^2 units; its largest
// eigenvalue is the squared critical anisotropy (omega_r/omega_z)^2.
double zigzag_lambda_max(const Eigen::VectorXd& u) {
    int n = static_cast<int>(u.size());
    if (n < 2) return 0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double d = std::abs(u(i) - u(j));
            double w = 1.0 / (d * d * d);
            a(i, i) += w;
            a(i, j) -= w;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    return es.eigenvalues().maxCoeff();
}

size_t grid_cell(const std::vector<double>& v, double x, double* w) {
    // caller guarantees x within [v.front(), v.back()] and v.size() >= 2
    size_t hi = static_cast<size_t>(
        std::upper_bound(v.begin(), v.end(), x) - v.begin());
    if (hi == 0) hi = 1;
    if (hi == v.size()) hi = v.size() - 1;
    *w = (x - v[hi - 1]) / (v[hi] - v[hi - 1]);
    return hi - 1;
}

Vec3 iso_direction(std::mt19937_64& rng,
                   std::uniform_real_distribution<double>& uni) {
    double z = 2.0 * uni(rng) - 1.0;
    double phi = kc::two_pi * uni(rng);
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

}  // namespace

double TrapConfig::length_scale() const {
    double k = charge * charge / (4.0 * kc::pi * kc::eps0);
    return std::cbrt(k / (mass * omega_z * omega_z));
}

double TrapConfig::zigzag_margin(int n_ions) const {
    double beta2 = (omega_r / omega_z) * (omega_r / omega_z);
    if (n_ions < 2) return beta2;
    return beta2 - zigzag_lambda_max(solve_chain(n_ions));
}

void TrapConfig::validate(int n_ions) const {
    if (!(omega_z > 0) || !(omega_r > 0))
        throw ModelError("TrapConfig: secular frequencies must be positive");
    if (!(mass > 0)) throw ModelError("TrapConfig: mass must be positive");
    if (!(charge > 0)) throw ModelError("TrapConfig: charge must be positive");
    if (n_ions < 1 || n_ions > 32)
        throw ModelError("TrapConfig: ion count must be in [1, 32]");
    if (n_ions >= 2 && zigzag_margin(n_ions) <= 0) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "TrapConfig: linear string of %d ions is zigzag-unstable "
                      "(need omega_r/omega_z > %.4f)",
                      n_ions, std::sqrt(zigzag_lambda_max(solve_chain(n_ions))));
        throw ModelError(buf);
    }
}

std::vector<double> equilibrium_positions(int n, const TrapConfig& trap) {
    trap.validate(n);
    Eigen::VectorXd u = solve_chain(n);
    std::vector<double> out(static_cast<size_t>(n));
    double ell = trap.length_scale();
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = u(i) * ell;
    std::sort(out.begin(), out.end());
    return out;
}

double ion_mass(int species) {
    if (species == 40) return kc::mass_ca40;
    if (species == 44) return kc::mass_ca44;
    if (species <= 0) throw ModelError("ion_mass: invalid species tag");
    return species * kc::amu;
}

CoolingModel CoolingModel::from_scheme(const LevelScheme& scheme,
                                       const std::vector<LaserBeam>& beams,
                                       const BeamGeometry& geometry,
                                       double detuning_729, const Vec3& b_field,
                                       const std::vector<double>& v_grid) {
    geometry.validate();
    if (v_grid.size() < 2)
        throw ModelError("CoolingModel: need at least two grid points");
    for (size_t i = 1; i < v_grid.size(); ++i)
        if (!(v_grid[i] > v_grid[i - 1]))
            throw ModelError("CoolingModel: grid must be strictly increasing");

    CoolingModel m;
    m.geometry = geometry;
    m.project_dir = geometry.tag == GeometryTag::angled_45_with_axial_assist
                        ? geometry.k729_hat
                        : geometry.axis;
    m.v = v_grid;
    m.force.reserve(v_grid.size());

    for (size_t i = 0; i < v_grid.size(); ++i) {
        SteadyPoint pt = steady_point(scheme, beams, geometry, detuning_729,
                                      v_grid[i] * m.project_dir, b_field);
        if (!pt.force.allFinite())
            throw NumericalError("CoolingModel: non-finite force");
        if (i == 0) {
            for (const auto& ch : pt.rates.channels) {
                m.lambda_ch.push_back(ch.lambda);
                if (ch.upper == LevelId::P32 && ch.lower == LevelId::S12)
                    m.violet393 = static_cast<int>(m.lambda_ch.size()) - 1;
            }
            if (m.violet393 < 0)
                throw ModelError("CoolingModel: scheme lacks a 393 nm channel");
        }
        if (pt.rates.channels.size() != m.lambda_ch.size())
            throw NumericalError("CoolingModel: channel set changed on grid");
        m.force.push_back(pt.force);
        double tot = 0;
        for (const auto& ch : pt.rates.channels) {
            m.rates.push_back(ch.rate);
            tot += ch.rate;
        }
        m.total_rate.push_back(tot);
        m.max_total_rate = std::max(m.max_total_rate, tot);
    }
    return m;
}

CoolingModel CoolingModel::from_profile(const ForceProfile& profile) {
    if (profile.v.size() < 2)
        throw ModelError("CoolingModel: need at least two grid points");
    CoolingModel m;
    switch (profile.geometry) {
        case GeometryTag::co_propagating_axial:
            m.geometry = BeamGeometry::co_axial();
            break;
        case GeometryTag::counter_propagating_axial:
            m.geometry = BeamGeometry::counter_axial();
            break;
        case GeometryTag::angled_45_with_axial_assist:
            m.geometry = BeamGeometry::angled_45();
            break;
    }
    m.project_dir = m.geometry.axis;
    m.v = profile.v;
    m.lambda_ch = {kc::lambda_393};
    m.violet393 = 0;

    double k_signed =
        kc::two_pi / kc::lambda_729 * m.geometry.k729_hat.dot(m.geometry.axis) +
        kc::two_pi / kc::lambda_854 * m.geometry.k854_hat.dot(m.geometry.axis);
    for (size_t i = 0; i < profile.v.size(); ++i) {
        m.force.push_back(profile.force[i] * m.geometry.axis);
        double cyc = std::max(0.0, profile.force[i] / (kc::hbar * k_signed));
        m.rates.push_back(cyc);
        m.total_rate.push_back(cyc);
        m.max_total_rate = std::max(m.max_total_rate, cyc);
    }
    return m;
}

Vec3 CoolingModel::force_at(double v_proj) const {
    if (v.empty() || v_proj < v.front() || v_proj > v.back())
        return Vec3::Zero();
    double w = 0;
    size_t i = grid_cell(v, v_proj, &w);
    return (1.0 - w) * force[i] + w * force[i + 1];
}

double CoolingModel::rates_at(double v_proj, double* buf) const {
    int nc = n_channels();
    if (v.empty() || v_proj < v.front() || v_proj > v.back()) {
        std::fill(buf, buf + nc, 0.0);
        return 0;
    }
    double w = 0;
    size_t i = grid_cell(v, v_proj, &w);
    double tot = 0;
    for (int c = 0; c < nc; ++c) {
        double r = (1.0 - w) * rates[i * nc + c] + w * rates[(i + 1) * nc + c];
        buf[c] = r;
        tot += r;
    }
    return tot;
}

double total_energy(const std::vector<IonState>& ions,
                    const TrapConfig& trap) {
    double kz = trap.mass * trap.omega_z * trap.omega_z;
    double coul = trap.charge * trap.charge / (4.0 * kc::pi * kc::eps0);
    double e = 0;
    for (size_t i = 0; i < ions.size(); ++i) {
        double mi = ion_mass(ions[i].species);
        double kr = trap.mass * trap.mass * trap.omega_r * trap.omega_r / mi;
        const Vec3& x = ions[i].position;
        e += 0.5 * mi * ions[i].velocity.squaredNorm();
        e += 0.5 * (kz * x.z() * x.z() + kr * (x.x() * x.x() + x.y() * x.y()));
        for (size_t j = i + 1; j < ions.size(); ++j)
            e += coul / (x - ions[j].position).norm();
    }
    return e;
}

Trajectory integrate(std::vector<IonState> ions, const TrapConfig& trap,
                     const CoolingModel* cooling, const NoiseModel& noise,
                     double dt, double t_end, std::uint64_t seed,
                     const IntegrateOptions& opts) {
    int n = static_cast<int>(ions.size());
    trap.validate(std::max(n, 1));
    if (n == 0) throw ModelError("integrate: no ions");
    double omega_max = std::max(trap.omega_z, trap.omega_r);
    if (dt > 1.0 / (50.0 * omega_max) * (1.0 + 1e-12))
        throw ModelError("integrate: dt too large for the secular frequencies");
    if (!(t_end > 0)) throw ModelError("integrate: t_end must be positive");
    for (const auto& s : ions)
        if (!s.position.allFinite() || !s.velocity.allFinite())
            throw ModelError("integrate: non-finite initial state");

    const long long steps = std::llround(t_end / dt);
    const double kz = trap.mass * trap.omega_z * trap.omega_z;
    const double coul = trap.charge * trap.charge / (4.0 * kc::pi * kc::eps0);

    std::vector<double> mass(static_cast<size_t>(n)), kr(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        mass[static_cast<size_t>(i)] = ion_mass(ions[static_cast<size_t>(i)].species);
        kr[static_cast<size_t>(i)] = trap.mass * trap.mass * trap.omega_r *
                                     trap.omega_r / mass[static_cast<size_t>(i)];
    }

    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    const double inf = std::numeric_limits<double>::infinity();
    const bool shot = cooling && noise.recoil && cooling->max_total_rate > 0;
    const bool smooth_drag = cooling && !noise.recoil;
    std::vector<double> t_scat(static_cast<size_t>(n), inf);
    std::vector<double> t_col(static_cast<size_t>(n), inf);
    for (int i = 0; i < n; ++i) {
        if (shot && ions[static_cast<size_t>(i)].addressed)
            t_scat[static_cast<size_t>(i)] =
                expo(rng) / cooling->max_total_rate;
        if (noise.collision_rate > 0)
            t_col[static_cast<size_t>(i)] = expo(rng) / noise.collision_rate;
    }
    std::vector<double> chan(
        cooling ? static_cast<size_t>(cooling->n_channels()) : 1, 0.0);

    Trajectory traj;
    traj.trap = trap;
    traj.dt = dt;
    traj.seed = seed;
    traj.t_end = steps * dt;
    traj.cooling_impulse.assign(static_cast<size_t>(n), Vec3::Zero());
    traj.mean_force_integral.assign(static_cast<size_t>(n), Vec3::Zero());

    double sample_dt = opts.sample_interval > 0
                           ? opts.sample_interval
                           : 0.25 * kc::two_pi / trap.omega_z;
    long long sample_stride =
        std::max<long long>(1, std::llround(sample_dt / dt));

    std::vector<Vec3> acc(static_cast<size_t>(n));
    double d2_min = std::numeric_limits<double>::infinity();
    auto accelerations = [&]() {
        for (int i = 0; i < n; ++i) {
            const Vec3& x = ions[static_cast<size_t>(i)].position;
            acc[static_cast<size_t>(i)] =
                Vec3(-kr[static_cast<size_t>(i)] * x.x(),
                     -kr[static_cast<size_t>(i)] * x.y(), -kz * x.z()) /
                mass[static_cast<size_t>(i)];
        }
        d2_min = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Vec3 r = ions[static_cast<size_t>(i)].position -
                         ions[static_cast<size_t>(j)].position;
                double d2 = r.squaredNorm();
                d2_min = std::min(d2_min, d2);
                Vec3 f = coul / (d2 * std::sqrt(d2)) * r;
                acc[static_cast<size_t>(i)] += f / mass[static_cast<size_t>(i)];
                acc[static_cast<size_t>(j)] -= f / mass[static_cast<size_t>(j)];
            }
    };
    auto drag_kick = [&](double h) {
        for (int i = 0; i < n; ++i) {
            auto& s = ions[static_cast<size_t>(i)];
            if (!s.addressed) continue;
            double vp = s.velocity.dot(cooling->project_dir);
            s.velocity += h / mass[static_cast<size_t>(i)] * cooling->force_at(vp);
        }
    };
    double mass_min = *std::min_element(mass.begin(), mass.end());
    // Close Coulomb encounters (collision-heated strings) are far stiffer
    // than the secular motion; cap each mechanical substep so the pair
    // frequency stays resolved and nothing tunnels across a neighbor.
    auto stable_h = [&]() {
        if (n < 2) return dt;
        double vmax2 = 0;
        for (const auto& s : ions)
            vmax2 = std::max(vmax2, s.velocity.squaredNorm());
        double d = std::sqrt(d2_min);
        double h = dt;
        double omega_c = std::sqrt(2.0 * coul / (mass_min * d * d2_min));
        if (omega_c > 0) h = std::min(h, 0.05 / omega_c);
        double vmax = std::sqrt(vmax2);
        if (vmax > 0) h = std::min(h, d / (8.0 * vmax));
        if (!(h > 0) || !std::isfinite(h)) h = dt;
        return h;
    };

    auto sample = [&](double t) {
        traj.times.push_back(t);
        traj.states.push_back(ions);
    };
    sample(0.0);

    accelerations();
    for (long long step = 0; step < steps; ++step) {
        double t1 = (step + 1) * dt;
        for (double left = dt; left > 0;) {
            double h = stable_h();
            if (h >= left || left - h < 1e-6 * dt) h = left;
            for (int i = 0; i < n; ++i)
                ions[static_cast<size_t>(i)].velocity +=
                    0.5 * h * acc[static_cast<size_t>(i)];
            if (smooth_drag) drag_kick(0.5 * h);
            for (int i = 0; i < n; ++i)
                ions[static_cast<size_t>(i)].position +=
                    h * ions[static_cast<size_t>(i)].velocity;
            accelerations();
            for (int i = 0; i < n; ++i)
                ions[static_cast<size_t>(i)].velocity +=
                    0.5 * h * acc[static_cast<size_t>(i)];
            if (smooth_drag) drag_kick(0.5 * h);
            left -= h;
        }

        // photon events: thinned Poisson stream per addressed ion
        if (shot) {
            for (int i = 0; i < n; ++i) {
                auto& s = ions[static_cast<size_t>(i)];
                while (t_scat[static_cast<size_t>(i)] <= t1) {
                    double te = t_scat[static_cast<size_t>(i)];
                    t_scat[static_cast<size_t>(i)] +=
                        expo(rng) / cooling->max_total_rate;
                    double vp = s.velocity.dot(cooling->project_dir);
                    double tot = cooling->rates_at(vp, chan.data());
                    if (uni(rng) * cooling->max_total_rate >= tot) continue;
                    double pick = uni(rng) * tot;
                    int c = 0;
                    for (; c + 1 < cooling->n_channels(); ++c) {
                        pick -= chan[static_cast<size_t>(c)];
                        if (pick < 0) break;
                    }
                    double mi = mass[static_cast<size_t>(i)];
                    s.velocity += kc::hbar * kc::two_pi /
                                  cooling->lambda_ch[static_cast<size_t>(c)] /
                                  mi * iso_direction(rng, uni);
                    if (c == cooling->violet393 &&
                        chan[static_cast<size_t>(c)] > 0) {
                        // directed absorption momentum of the full cycle
                        Vec3 q = cooling->force_at(vp) / chan[static_cast<size_t>(c)];
                        s.velocity += q / mi;
                        traj.cooling_impulse[static_cast<size_t>(i)] += q;
                    }
                    traj.photons.push_back(
                        {te, i, cooling->lambda_ch[static_cast<size_t>(c)]});
                }
            }
        }
        if (noise.collision_rate > 0) {
            for (int i = 0; i < n; ++i) {
                while (t_col[static_cast<size_t>(i)] <= t1) {
                    double te = t_col[static_cast<size_t>(i)];
                    t_col[static_cast<size_t>(i)] +=
                        expo(rng) / noise.collision_rate;
                    double e = expo(rng) * noise.collision_energy;
                    ions[static_cast<size_t>(i)].velocity +=
                        std::sqrt(2.0 * e / mass[static_cast<size_t>(i)]) *
                        iso_direction(rng, uni);
                    traj.collisions.emplace_back(te, i);
                }
            }
        }
        if (noise.heating_rate > 0) {
            for (int i = 0; i < n; ++i) {
                double mi = mass[static_cast<size_t>(i)];
                double wz = trap.omega_z * std::sqrt(trap.mass / mi);
                double wr = trap.omega_r * trap.mass / mi;
                // velocity kicks of variance 2 hbar w Ndot dt / m feed energy
                // at hbar w Ndot per second once virialized
                double sz =
                    std::sqrt(2.0 * kc::hbar * wz * noise.heating_rate * dt / mi);
                double sr =
                    std::sqrt(2.0 * kc::hbar * wr * noise.heating_rate * dt / mi);
                ions[static_cast<size_t>(i)].velocity +=
                    Vec3(sr * gauss(rng), sr * gauss(rng), sz * gauss(rng));
            }
        }

        if (opts.track_mean_force && cooling) {
            for (int i = 0; i < n; ++i) {
                const auto& s = ions[static_cast<size_t>(i)];
                if (!s.addressed) continue;
                traj.mean_force_integral[static_cast<size_t>(i)] +=
                    dt * cooling->force_at(s.velocity.dot(cooling->project_dir));
            }
        }

        if ((step & 255) == 0) {
            for (const auto& s : ions)
                if (!s.position.allFinite() || !s.velocity.allFinite()) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf,
                                  "integrate: non-finite state at t = %.6g s",
                                  t1);
                    throw NumericalError(buf);
                }
        }
        if ((step + 1) % sample_stride == 0 || step + 1 == steps) sample(t1);
    }

    for (const auto& s : ions)
        if (!s.position.allFinite() || !s.velocity.allFinite())
            throw NumericalError("integrate: non-finite final state");
    return traj;
}

std::string Trajectory::states_csv() const {
    std::string out = "t";
    char buf[96];
    for (int i = 0; i < n_ions(); ++i) {
        std::snprintf(buf, sizeof buf, ",x%d,y%d,z%d,vx%d,vy%d,vz%d", i, i, i,
                      i, i, i);
        out += buf;
    }
    out += '\n';
    for (size_t s = 0; s < times.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", times[s]);
        out += buf;
        for (const auto& ion : states[s]) {
            for (int a = 0; a < 3; ++a) {
                std::snprintf(buf, sizeof buf, ",%.17g", ion.position(a));
                out += buf;
            }
            for (int a = 0; a < 3; ++a) {
                std::snprintf(buf, sizeof buf, ",%.17g", ion.velocity(a));
                out += buf;
            }
        }
        out += '\n';
    }
    return out;
}

std::string Trajectory::photons_csv() const {
    std::string out = "t,ion,channel_nm\n";
    char buf[80];
    for (const auto& p : photons) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%.6g\n", p.t, p.ion,
                      p.lambda * 1e9);
        out += buf;
    }
    return out;
}

namespace {

std::vector<int> axial_order(const std::vector<IonState>& ions) {
    std::vector<int> idx(ions.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return ions[static_cast<size_t>(a)].position.z() <
               ions[static_cast<size_t>(b)].position.z();
    });
    return idx;
}

int rank_of(const std::vector<int>& order, int ion) {
    for (size_t r = 0; r < order.size(); ++r)
        if (order[r] == ion) return static_cast<int>(r);
    return -1;
}

}  // namespace

JumpReport detect_jumps(const Trajectory& traj, int dark_index) {
    if (traj.states.empty()) throw ModelError("detect_jumps: empty trajectory");
    int n = traj.n_ions();
    if (dark_index < 0 || dark_index >= n)
        throw ModelError("detect_jumps: dark ion index out of range");

    const double debounce = 10.0 * kc::two_pi / traj.trap.omega_z;
    JumpReport rep;

    std::vector<int> stable = axial_order(traj.states.front());
    rep.rank_start = rank_of(stable, dark_index);

    std::vector<int> pending;
    double t_pending = 0;
    for (size_t s = 1; s < traj.states.size(); ++s) {
        std::vector<int> order = axial_order(traj.states[s]);
        if (order == stable) {
            pending.clear();
            continue;
        }
        if (order != pending) {
            pending = order;
            t_pending = traj.times[s];
            continue;
        }
        if (traj.times[s] - t_pending >= debounce) {
            JumpEvent ev;
            ev.t = t_pending;
            ev.order_before = stable;
            ev.order_after = pending;
            ev.dark_rank_before = rank_of(stable, dark_index);
            ev.dark_rank_after = rank_of(pending, dark_index);
            rep.events.push_back(std::move(ev));
            stable = pending;
            pending.clear();
        }
    }

    rep.rank_end = rank_of(axial_order(traj.states.back()), dark_index);
    rep.jumped = !rep.events.empty() || rep.rank_end != rep.rank_start;
    return rep;
}

double temperature_estimate(const Trajectory& traj, MotionMode mode,
                            double t_from, double t_to) {
    if (traj.times.empty())
        throw ModelError("temperature_estimate: empty trajectory");
    double omega =
        mode == MotionMode::axial ? traj.trap.omega_z : traj.trap.omega_r;
    if (t_to - t_from < 10.0 * kc::two_pi / omega)
        throw ModelError(
            "temperature_estimate: window shorter than 10 secular periods");
    double eps = 0.5 * traj.dt;
    if (t_from < traj.times.front() - eps || t_to > traj.times.back() + eps)
        throw ModelError("temperature_estimate: window outside trajectory");

    double acc = 0;
    long count = 0;
    for (size_t s = 0; s < traj.times.size(); ++s) {
        if (traj.times[s] < t_from - eps || traj.times[s] > t_to + eps)
            continue;
        for (const auto& ion : traj.states[s]) {
            double mi = ion_mass(ion.species);
            const Vec3& v = ion.velocity;
            if (mode == MotionMode::axial)
                acc += mi * v.z() * v.z();
            else
                acc += 0.5 * mi * (v.x() * v.x() + v.y() * v.y());
            ++count;
        }
    }
    if (count == 0)
        throw ModelError("temperature_estimate: no samples in window");
    return acc / (static_cast<double>(count) * kc::k_boltzmann);
}

}  // namespace quadcool
