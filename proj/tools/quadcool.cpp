// Command-line front end: scans, jump statistics, field scans, force
// profiles, raw MD trajectories, and a setup sanity check. All physics
// lives in the library; this file only parses flags, resolves the config,
// runs the requested entry point, and writes CSV output plus a run manifest.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quadcool/config.hpp"
#include "quadcool/rng.hpp"

namespace fs = std::filesystem;
using namespace quadcool;
namespace kc = quadcool::constants;

namespace {

struct Context {
    Config cfg;
    std::uint64_t seed = 1;
    int threads = 1;
    fs::path out_dir = ".";
    bool gnuplot = false;
    RunManifest manifest;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(Context& ctx, const std::string& name,
                const std::string& content) {
    fs::path p = ctx.out_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
    ctx.manifest.outputs.push_back(name);
}

void finish_manifest(Context& ctx, const std::string& name) {
    ctx.manifest.finished = utc_timestamp();
    ctx.manifest.outputs.push_back(name);
    fs::path p = ctx.out_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << ctx.manifest.to_json();
}

LaserBeam beam(double lambda, double detuning, double power_w,
               double waist_m) {
    LaserBeam b;
    b.lambda = lambda;
    b.detuning = detuning;
    b.pol = Polarization::rotating();
    b.power = power_w;
    b.waist = waist_m;
    return b;
}

BeamGeometry beam_geometry(const std::string& name) {
    switch (geometry_tag(name)) {
        case GeometryTag::co_propagating_axial:
            return BeamGeometry::co_axial();
        case GeometryTag::counter_propagating_axial:
            return BeamGeometry::counter_axial();
        case GeometryTag::angled_45_with_axial_assist:
            return BeamGeometry::angled_45();
    }
    throw ConfigError("unknown geometry");
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    return out;
}

// beams at the operating detuning; the config detuning is relative to the
// light-shifted resonance, so the bare 729 nm detuning adds the shift
std::vector<LaserBeam> resolve_beams(const Config& c, const LevelScheme& s,
                                     double* light_shift_out = nullptr) {
    LaserBeam assist = beam(kc::lambda_854, c.detuning_854 * kc::two_pi * 1e6,
                            c.power_854 * 1e-3, c.waist_854 * 1e-6);
    double shift = effective_decay_rate(assist, s).light_shift;
    if (light_shift_out) *light_shift_out = shift;
    double det = shift + c.detuning * kc::two_pi * 1e6;
    return {beam(kc::lambda_729, det, c.power_729 * 1e-3, c.waist_729 * 1e-6),
            assist,
            beam(kc::lambda_866, 0.0, c.power_866 * 1e-3, c.waist_866 * 1e-6)};
}

std::string scan_gnuplot(const std::string& csv, const char* xlabel,
                         const char* ylabel, int ycol) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel '" << ylabel << "'\n"
       << "plot '" << csv << "' using 1:" << ycol << " with linespoints\n";
    return gp.str();
}

ScanConfig scan_config(const Context& ctx) {
    ScanConfig s = to_scan_config(ctx.cfg);
    s.seed = ctx.seed;
    s.threads = ctx.threads;
    s.validate();
    return s;
}

int run_scan_cmd(Context& ctx) {
    ScanConfig s = scan_config(ctx);
    ScanResult r = detuning_scan(s);
    write_file(ctx, "scan.csv", r.to_csv());
    if (ctx.gnuplot)
        write_file(ctx, "scan.gp",
                   scan_gnuplot("scan.csv", "detuning [MHz]", "counts / s", 2));
    finish_manifest(ctx, "scan_manifest.json");

    std::printf("scan: %zu detunings x %d trials, %s geometry\n",
                r.detunings.size(), s.trials, ctx.cfg.geometry.c_str());
    std::printf("peak rate %.4g counts/s", r.peak_rate);
    if (std::isfinite(r.fwhm))
        std::printf(", fwhm %.4g MHz", r.fwhm / kc::two_pi / 1e6);
    std::printf("\n");
    double peak = 0, mean = 0;
    for (double m : r.mean_rate) {
        peak = std::max(peak, m);
        mean += m;
    }
    mean /= static_cast<double>(r.mean_rate.size());
    if (mean > 0) std::printf("peak/mean %.3f\n", peak / mean);
    return 0;
}

int run_jumps_cmd(Context& ctx) {
    ScanConfig s = scan_config(ctx);
    ScanResult r = jump_fraction_scan(s);
    write_file(ctx, "jumps.csv", r.to_csv());
    if (ctx.gnuplot)
        write_file(ctx, "jumps.gp",
                   scan_gnuplot("jumps.csv", "detuning [MHz]",
                                "jump fraction", 4));
    finish_manifest(ctx, "jumps_manifest.json");

    std::printf("jump scan: %zu detunings x %d trials\n", r.detunings.size(),
                s.trials);
    std::printf("lasers-off baseline: R = %.3f over %d trials\n",
                r.baseline_jump_fraction, r.baseline_trials);
    return 0;
}

int run_bfield_cmd(Context& ctx) {
    ScanConfig s = scan_config(ctx);
    std::vector<double> fields_t;
    for (double g : ctx.cfg.fields) fields_t.push_back(g * 1e-4);
    auto results = bfield_scan(s, fields_t);

    std::string summary = "b_G,peak_counts_per_s,fwhm_MHz\n";
    char buf[128];
    for (size_t i = 0; i < results.size(); ++i) {
        const ScanResult& r = results[i];
        std::snprintf(buf, sizeof buf, "bfield_%zu.csv", i);
        write_file(ctx, buf, r.to_csv());
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n",
                      ctx.cfg.fields[i], r.peak_rate,
                      r.fwhm / kc::two_pi / 1e6);
        summary += buf;

        std::printf("B = %.3g G: peak %.4g counts/s", ctx.cfg.fields[i],
                    r.peak_rate);
        if (std::isfinite(r.fwhm))
            std::printf(", fwhm %.4g MHz", r.fwhm / kc::two_pi / 1e6);
        if (!r.line_centers.empty()) {
            std::printf(", lines at");
            for (double c : r.line_centers)
                std::printf(" %+.3g", c / kc::two_pi / 1e6);
            std::printf(" MHz");
        }
        std::printf("\n");
    }
    write_file(ctx, "bfield_summary.csv", summary);
    if (ctx.gnuplot)
        write_file(ctx, "bfield.gp",
                   scan_gnuplot("bfield_summary.csv", "B [G]",
                                "peak counts / s", 2));
    finish_manifest(ctx, "bfield_manifest.json");
    return 0;
}

int run_force_profile_cmd(Context& ctx) {
    const Config& c = ctx.cfg;
    LevelScheme scheme = build_ca40_scheme();
    BeamGeometry geom = beam_geometry(c.geometry);
    double shift = 0;
    auto beams = resolve_beams(c, scheme, &shift);
    double det = shift + c.detuning * kc::two_pi * 1e6;
    double k_pump = kc::two_pi / kc::lambda_729;
    double v_c = c.detuning * kc::two_pi * 1e6 / k_pump;
    auto grid = linspace(v_c - c.grid_halfwidth, v_c + c.grid_halfwidth,
                         c.grid_points);
    Vec3 b_vec = c.bfield * 1e-4 *
                 (c.bfield_axis == "x"   ? Vec3::UnitX()
                  : c.bfield_axis == "y" ? Vec3::UnitY()
                                         : Vec3::UnitZ());
    ForceProfile p = force_profile(scheme, beams, geom, det, b_vec, grid);
    write_file(ctx, "force_profile.csv", p.to_csv());
    if (ctx.gnuplot)
        write_file(ctx, "force_profile.gp",
                   scan_gnuplot("force_profile.csv", "v [m/s]", "F [N]", 2));
    finish_manifest(ctx, "force_profile_manifest.json");

    std::printf("force profile: %d points, detuning %.4g MHz (light shift "
                "%.4g MHz)\n",
                c.grid_points, c.detuning, shift / kc::two_pi / 1e6);
    try {
        FrictionDiffusion fd = friction_and_diffusion(p);
        std::printf("friction %.4g kg/s, diffusion %.4g, limit %.4g mK\n",
                    fd.alpha, fd.d0, fd.limit_temperature() * 1e3);
    } catch (const std::exception& e) {
        std::printf("friction summary unavailable: %s\n", e.what());
    }
    return 0;
}

int run_md_cmd(Context& ctx) {
    const Config& c = ctx.cfg;
    ScanConfig s = scan_config(ctx);  // range checks + unit conversion
    LevelScheme scheme = build_ca40_scheme();
    BeamGeometry geom = beam_geometry(c.geometry);
    auto beams = resolve_beams(c, scheme);
    double det = beams[0].detuning;
    double k_pump = kc::two_pi / kc::lambda_729;
    double d_rel = c.detuning * kc::two_pi * 1e6;
    auto grid = linspace(d_rel / k_pump - s.grid_halfwidth,
                         d_rel / k_pump + s.grid_halfwidth, s.grid_points);
    CoolingModel model = CoolingModel::from_scheme(
        scheme, beams, geom, det, s.b_field * s.b_dir.normalized(), grid);

    auto z_eq = equilibrium_positions(s.n_ions, s.trap);
    std::mt19937_64 rng(splitmix64(ctx.seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<IonState> ions(static_cast<size_t>(s.n_ions));
    for (int i = 0; i < s.n_ions; ++i) {
        auto& ion = ions[static_cast<size_t>(i)];
        if (i == s.dark_index) {
            ion.species = s.dark_species;
            ion.addressed = false;
        }
        ion.position = Vec3(0, 0, z_eq[static_cast<size_t>(i)]);
        double sigma = std::sqrt(2.0 * kc::k_boltzmann * s.t_precool /
                                 ion_mass(ion.species));
        ion.velocity = sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }

    double dt = 1.0 / (50.0 * std::max(s.trap.omega_z, s.trap.omega_r));
    IntegrateOptions opts;
    opts.sample_interval = c.sample_interval * 1e-3;
    Trajectory traj =
        integrate(std::move(ions), s.trap, &model, s.noise, dt,
                  c.duration * 1e-3, derive_seed(ctx.seed, 1), opts);

    write_file(ctx, "trajectory.csv", traj.states_csv());
    write_file(ctx, "photons.csv", traj.photons_csv());
    if (ctx.gnuplot)
        write_file(ctx, "md.gp",
                   scan_gnuplot("trajectory.csv", "t [s]", "z [m]", 4));
    finish_manifest(ctx, "md_manifest.json");

    std::printf("md: %d ions for %.4g ms, %zu photons, %zu collisions\n",
                s.n_ions, c.duration, traj.photons.size(),
                traj.collisions.size());
    return 0;
}

int run_check_cmd(Context& ctx) {
    ScanConfig s = scan_config(ctx);
    RegimeReport rep = doppler_regime_check(s);
    KickRatio ratio =
        momentum_kick_ratio(BeamGeometry::co_axial(),
                            BeamGeometry::counter_axial());

    std::printf("effective linewidth: 2pi x %.4g MHz\n",
                rep.gamma_eff / kc::two_pi / 1e6);
    std::printf("secular frequencies: 2pi x %.4g / %.4g MHz (axial/radial)\n",
                rep.omega_z / kc::two_pi / 1e6, rep.omega_r / kc::two_pi / 1e6);
    std::printf("doppler regime: %s\n", rep.text.c_str());
    std::printf("momentum kick ratio co/counter: %.2f\n", ratio.value);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadrupole-transition cooling simulator for trapped ions"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string geometry;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 0;
    bool gnuplot = false;

    app.add_option("--config", config_path, "config file (strict INI)");
    app.add_option("--set", overrides, "override, e.g. --set 'trap.bfield=1.2 G'")
        ->type_size(1)
        ->allow_extra_args(false);
    app.add_option("--geometry", geometry, "co | counter | angled");
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads,
                   "worker threads (default: QUADCOOL_THREADS or 1)");
    app.add_flag("--gnuplot", gnuplot, "also write companion plot scripts");

    const char* names[] = {"scan", "jumps", "bfield", "force-profile", "md",
                           "check"};
    const char* descs[] = {
        "fluorescence vs detuning",
        "dark-ion reordering fraction vs detuning",
        "one detuning scan per field value",
        "tabulated force and diffusion vs velocity",
        "single MD trajectory with photon log",
        "print linewidth, trap comparison, and kick ratio"};
    for (int i = 0; i < 6; ++i)
        app.add_subcommand(names[i], descs[i])->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Context ctx;
        if (!config_path.empty())
            ctx.cfg = parse_config(read_file(config_path));
        if (!geometry.empty())
            apply_override(ctx.cfg, "lasers.geometry=" + geometry);
        for (const auto& ov : overrides) apply_override(ctx.cfg, ov);
        validate_config(ctx.cfg);

        ctx.seed = seed;
        if (threads <= 0) {
            const char* env = std::getenv("QUADCOOL_THREADS");
            threads = env ? std::atoi(env) : 1;
        }
        ctx.threads = std::max(1, threads);
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        ctx.gnuplot = gnuplot;

        std::string name = app.get_subcommands().front()->get_name();
        ctx.manifest.subcommand = name;
        ctx.manifest.seed = ctx.seed;
        ctx.manifest.config = ctx.cfg;
        ctx.manifest.started = utc_timestamp();

        if (name == "scan") return run_scan_cmd(ctx);
        if (name == "jumps") return run_jumps_cmd(ctx);
        if (name == "bfield") return run_bfield_cmd(ctx);
        if (name == "force-profile") return run_force_profile_cmd(ctx);
        if (name == "md") return run_md_cmd(ctx);
        return run_check_cmd(ctx);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
