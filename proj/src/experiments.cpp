#include "quadcool/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "quadcool/rng.hpp"

namespace quadcool {

namespace {

namespace kc = constants;

LaserBeam make_beam(double lambda, double detuning, double power,
                    double waist) {
    LaserBeam b;
    b.lambda = lambda;
    b.detuning = detuning;
    b.dir = Vec3::UnitZ();
    b.pol = Polarization::rotating();
    b.power = power;
    b.waist = waist;
    return b;
}

BeamGeometry geometry_for(GeometryTag tag) {
    switch (tag) {
        case GeometryTag::co_propagating_axial:
            return BeamGeometry::co_axial();
        case GeometryTag::counter_propagating_axial:
            return BeamGeometry::counter_axial();
        case GeometryTag::angled_45_with_axial_assist:
            return BeamGeometry::angled_45();
    }
    throw ModelError("unknown geometry tag");
}

double effective_k(GeometryTag tag) {
    BeamGeometry g = geometry_for(tag);
    Vec3 k = kc::two_pi / kc::lambda_729 * g.k729_hat +
             kc::two_pi / kc::lambda_854 * g.k854_hat;
    return k.norm();
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1);
    return g;
}

// Saturated two-level radiation pressure of the dipole-allowed pre-cooling
// stage (s = 1, red-detuned half a linewidth, along the trap axis). Each
// event carries the directed hbar k of its absorption plus isotropic recoil.
CoolingModel precool_model(const BeamGeometry& geometry) {
    CoolingModel m;
    m.geometry = geometry;
    m.project_dir = geometry.axis;
    m.v = linspace(-30.0, 30.0, 1201);
    m.lambda_ch = {kc::lambda_397};
    m.violet393 = 0;
    double gamma = kc::gamma_p12;
    double k = kc::two_pi / kc::lambda_397;
    double delta = -0.5 * gamma;
    for (double v : m.v) {
        double d = delta - k * v;
        double r = 0.5 * gamma / (2.0 + 4.0 * d * d / (gamma * gamma));
        m.force.push_back(kc::hbar * k * r * geometry.axis);
        m.rates.push_back(r);
        m.total_rate.push_back(r);
        m.max_total_rate = std::max(m.max_total_rate, r);
    }
    return m;
}

struct Shared {
    const ScanConfig* cfg = nullptr;
    LevelScheme scheme;
    BeamGeometry geometry;
    double light_shift = 0;
    double dt = 0;
    std::vector<double> z_eq;
    std::vector<CoolingModel> models;  // one per detuning point
    CoolingModel pre;                  // explicit pre-cool stage
};

std::vector<LaserBeam> beams_at(const ScanConfig& cfg, double detuning_729) {
    return {make_beam(kc::lambda_729, detuning_729, cfg.power_729,
                      cfg.waist_729),
            make_beam(kc::lambda_854, cfg.detuning_854, cfg.power_854,
                      cfg.waist_854),
            make_beam(kc::lambda_866, 0.0, cfg.power_866, cfg.waist_866)};
}

Shared prepare(const ScanConfig& cfg, bool build_models) {
    cfg.validate();
    Shared sh;
    sh.cfg = &cfg;
    sh.scheme = build_ca40_scheme();
    sh.geometry = geometry_for(cfg.geometry);
    sh.dt = 1.0 / (50.0 * std::max(cfg.trap.omega_z, cfg.trap.omega_r));
    sh.z_eq = equilibrium_positions(cfg.n_ions, cfg.trap);

    LaserBeam assist = make_beam(kc::lambda_854, cfg.detuning_854,
                                 cfg.power_854, cfg.waist_854);
    sh.light_shift = effective_decay_rate(assist, sh.scheme).light_shift;

    if (build_models) {
        Vec3 b_vec = cfg.b_field * cfg.b_dir.normalized();
        double k_pump = kc::two_pi / kc::lambda_729;
        sh.models.reserve(cfg.detunings.size());
        for (double d : cfg.detunings) {
            double det = sh.light_shift + d;
            double v_c = d / k_pump;  // pump-resonant velocity
            auto grid = linspace(v_c - cfg.grid_halfwidth,
                                 v_c + cfg.grid_halfwidth, cfg.grid_points);
            sh.models.push_back(CoolingModel::from_scheme(
                sh.scheme, beams_at(cfg, det), sh.geometry, det, b_vec, grid));
        }
    }
    if (cfg.precool_explicit) sh.pre = precool_model(sh.geometry);
    return sh;
}

std::vector<IonState> thermal_string(const Shared& sh, std::mt19937_64& rng) {
    const ScanConfig& cfg = *sh.cfg;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<IonState> ions(static_cast<size_t>(cfg.n_ions));
    for (int i = 0; i < cfg.n_ions; ++i) {
        auto& s = ions[static_cast<size_t>(i)];
        if (i == cfg.dark_index) {
            s.species = cfg.dark_species;
            s.addressed = false;
        }
        s.position = Vec3(0, 0, sh.z_eq[static_cast<size_t>(i)]);
        // all energy starts kinetic; each mode virializes to t_precool
        double sigma =
            std::sqrt(2.0 * kc::k_boltzmann * cfg.t_precool / ion_mass(s.species));
        s.velocity = sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    return ions;
}

struct TrialOut {
    double rate = 0;
    bool jumped = false;
};

TrialOut run_trial(const Shared& sh, size_t point, int trial, bool lasers_on) {
    const ScanConfig& cfg = *sh.cfg;
    std::uint64_t s_init = derive_seed(cfg.seed, 2 * point,
                                       static_cast<std::uint64_t>(trial));
    std::uint64_t s_md = derive_seed(cfg.seed, 2 * point + 1,
                                     static_cast<std::uint64_t>(trial));
    std::mt19937_64 rng(splitmix64(s_init));
    auto ions = thermal_string(sh, rng);

    if (cfg.precool_explicit && lasers_on) {
        auto pre = integrate(std::move(ions), cfg.trap, &sh.pre, cfg.noise,
                             sh.dt, cfg.precool_window, derive_seed(s_md, 1));
        ions = pre.states.back();
    }

    const CoolingModel* cm = lasers_on ? &sh.models[point] : nullptr;
    auto traj =
        integrate(std::move(ions), cfg.trap, cm, cfg.noise, sh.dt, cfg.window,
                  s_md);

    long violet = 0;
    for (const auto& p : traj.photons)
        if (p.lambda < 500e-9) ++violet;

    TrialOut out;
    out.rate = static_cast<double>(violet) * cfg.efficiency / traj.t_end;
    if (cfg.dark_index >= 0)
        out.jumped = detect_jumps(traj, cfg.dark_index).jumped;
    return out;
}

void for_jobs(int n_jobs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n_jobs <= 1) {
        for (int j = 0; j < n_jobs; ++j) fn(j);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    int workers = std::min(threads, n_jobs);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int j; (j = next.fetch_add(1)) < n_jobs;) {
                try {
                    fn(j);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next.store(n_jobs);
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0));
}

double half_width(const std::vector<double>& x, const std::vector<double>& y);

ScanResult run_scan(const ScanConfig& cfg, bool with_baseline) {
    Shared sh = prepare(cfg, true);
    size_t np = cfg.detunings.size();
    size_t nt = static_cast<size_t>(cfg.trials);

    std::vector<std::vector<double>> rates(np, std::vector<double>(nt, 0.0));
    std::vector<std::vector<char>> jumped(np, std::vector<char>(nt, 0));

    for_jobs(static_cast<int>(np * nt), cfg.threads, [&](int j) {
        size_t point = static_cast<size_t>(j) / nt;
        int trial = static_cast<int>(static_cast<size_t>(j) % nt);
        TrialOut out = run_trial(sh, point, trial, true);
        rates[point][static_cast<size_t>(trial)] = out.rate;
        jumped[point][static_cast<size_t>(trial)] = out.jumped ? 1 : 0;
    });

    ScanResult res;
    res.geometry = cfg.geometry;
    res.b_field = cfg.b_field;
    res.efficiency = cfg.efficiency;
    res.n_fluorescing = cfg.n_ions - (cfg.dark_index >= 0 ? 1 : 0);
    res.detunings = cfg.detunings;
    double hk = kc::hbar * effective_k(cfg.geometry);
    for (size_t p = 0; p < np; ++p) {
        double mean = 0;
        for (double r : rates[p]) mean += r;
        mean /= static_cast<double>(nt);
        res.mean_rate.push_back(mean);
        res.std_rate.push_back(sample_std(rates[p], mean));
        int nj = 0;
        for (char c : jumped[p]) nj += c;
        res.jump_fraction.push_back(cfg.dark_index >= 0
                                        ? static_cast<double>(nj) /
                                              static_cast<double>(nt)
                                        : 0.0);
        res.inferred_force.push_back(
            mean / (cfg.efficiency * res.n_fluorescing) * hk);
    }
    size_t best = 0;
    for (size_t p = 0; p < np; ++p)
        if (res.mean_rate[p] > res.mean_rate[best]) best = p;
    res.peak_rate = res.mean_rate[best];
    res.fwhm = half_width(res.detunings, res.mean_rate);

    if (with_baseline) {
        std::vector<char> base(nt, 0);
        for_jobs(static_cast<int>(nt), cfg.threads, [&](int j) {
            base[static_cast<size_t>(j)] = run_trial(sh, np, j, false).jumped;
        });
        int nj = 0;
        for (char c : base) nj += c;
        res.baseline_jump_fraction =
            static_cast<double>(nj) / static_cast<double>(nt);
        res.baseline_trials = cfg.trials;
    }
    return res;
}

// linear-interpolated full width at half the peak of mean_rate(detuning)
double half_width(const std::vector<double>& x, const std::vector<double>& y) {
    size_t best = 0;
    for (size_t i = 0; i < y.size(); ++i)
        if (y[i] > y[best]) best = i;
    double half = 0.5 * y[best];
    double nan = std::numeric_limits<double>::quiet_NaN();
    if (y[best] <= 0) return nan;

    double lo = nan, hi = nan;
    for (size_t i = best; i-- > 0;)
        if (y[i] <= half) {
            lo = x[i] + (x[i + 1] - x[i]) * (half - y[i]) / (y[i + 1] - y[i]);
            break;
        }
    for (size_t i = best + 1; i < y.size(); ++i)
        if (y[i] <= half) {
            hi = x[i - 1] +
                 (x[i] - x[i - 1]) * (half - y[i - 1]) / (y[i] - y[i - 1]);
            break;
        }
    return hi - lo;  // NaN when either side is not bracketed
}

}  // namespace

void ScanConfig::validate() const {
    if (detunings.empty()) throw ModelError("scan: empty detuning grid");
    if (trials < 1) throw ModelError("scan: trials must be >= 1");
    if (!(window > 0)) throw ModelError("scan: window must be positive");
    if (!(efficiency > 0) || efficiency > 1)
        throw ModelError("scan: efficiency must be in (0, 1]");
    if (n_ions < 1) throw ModelError("scan: need at least one ion");
    if (dark_index < -1 || dark_index >= n_ions)
        throw ModelError("scan: dark ion index out of range");
    if (power_729 < 0 || power_854 < 0 || power_866 < 0)
        throw ModelError("scan: negative laser power");
    if (!(waist_729 > 0) || !(waist_854 > 0) || !(waist_866 > 0))
        throw ModelError("scan: beam waists must be positive");
    if (b_field < 0) throw ModelError("scan: negative field magnitude");
    if (!(b_dir.norm() > 0)) throw ModelError("scan: zero field direction");
    if (t_precool < 0) throw ModelError("scan: negative temperature");
    if (precool_explicit && !(precool_window > 0))
        throw ModelError("scan: pre-cool window must be positive");
    if (grid_points < 2 || !(grid_halfwidth > 0))
        throw ModelError("scan: invalid velocity grid");
    trap.validate(n_ions);
}

ScanResult detuning_scan(const ScanConfig& cfg) { return run_scan(cfg, false); }

ScanResult jump_fraction_scan(const ScanConfig& cfg) {
    if (cfg.dark_index < 0)
        throw ModelError("jump scan: dark ion index not set");
    if (cfg.trials < 20) throw ModelError("jump scan: need at least 20 trials");
    return run_scan(cfg, true);
}

std::vector<ScanResult> bfield_scan(const ScanConfig& cfg,
                                    const std::vector<double>& b_list) {
    if (b_list.empty()) throw ModelError("field scan: empty field list");
    LevelScheme scheme = build_ca40_scheme();
    const Transition& t729 = scheme.transition_at(kc::lambda_729);

    std::vector<ScanResult> out;
    out.reserve(b_list.size());
    for (double b : b_list) {
        ScanConfig c = cfg;
        c.b_field = b;
        ScanResult r = detuning_scan(c);
        if (b > 0)
            for (const auto& line : enumerate_zeeman_lines(scheme, t729))
                if (std::abs(line.delta_m()) == 1)
                    r.line_centers.push_back(zeeman_shift(line, b));
        std::sort(r.line_centers.begin(), r.line_centers.end());
        out.push_back(std::move(r));
    }
    return out;
}

double force_estimate(const ScanResult& result, GeometryTag geometry) {
    if (result.mean_rate.empty())
        throw ModelError("force estimate: empty scan");
    size_t best = 0;
    bool any = false;
    for (size_t i = 0; i < result.mean_rate.size(); ++i) {
        if (result.mean_rate[i] > 0) any = true;
        if (result.mean_rate[i] > result.mean_rate[best]) best = i;
    }
    if (!any) return 0.0;
    if (best == 0 || best + 1 == result.mean_rate.size())
        throw ModelError("force estimate: peak not bracketed by the grid");
    return result.mean_rate[best] /
           (result.efficiency * result.n_fluorescing) * kc::hbar *
           effective_k(geometry);
}

RegimeReport doppler_regime_check(const ScanConfig& cfg) {
    LevelScheme scheme = build_ca40_scheme();
    LaserBeam assist = make_beam(kc::lambda_854, cfg.detuning_854,
                                 cfg.power_854, cfg.waist_854);
    RegimeReport rep;
    rep.gamma_eff = effective_decay_rate(assist, scheme).gamma_eff;
    rep.omega_z = cfg.trap.omega_z;
    rep.omega_r = cfg.trap.omega_r;
    double omega_max = std::max(rep.omega_z, rep.omega_r);
    double ratio = rep.gamma_eff / omega_max;
    rep.status = ratio > 1.05   ? RegimeStatus::pass
                 : ratio < 0.95 ? RegimeStatus::fail
                                : RegimeStatus::marginal;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "effective linewidth 2pi x %.4g MHz vs secular 2pi x %.4g / "
                  "%.4g MHz (ratio %.3g to the faster mode): %s",
                  rep.gamma_eff / kc::two_pi / 1e6,
                  rep.omega_z / kc::two_pi / 1e6,
                  rep.omega_r / kc::two_pi / 1e6, ratio,
                  to_string(rep.status));
    rep.text = buf;
    return rep;
}

const char* to_string(RegimeStatus s) {
    switch (s) {
        case RegimeStatus::pass: return "pass";
        case RegimeStatus::marginal: return "marginal";
        case RegimeStatus::fail: return "fail";
    }
    return "?";
}

std::string ScanResult::to_csv() const {
    std::string out =
        "detuning_MHz,mean_counts_per_s,std_counts_per_s,jump_fraction,"
        "inferred_force_N\n";
    char buf[160];
    for (size_t i = 0; i < detunings.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      detunings[i] / kc::two_pi / 1e6, mean_rate[i],
                      std_rate[i], jump_fraction[i], inferred_force[i]);
        out += buf;
    }
    return out;
}

}  // namespace quadcool
