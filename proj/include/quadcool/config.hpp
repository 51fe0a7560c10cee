#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadcool/experiments.hpp"

namespace quadcool {

inline constexpr const char* tool_version = "1.0.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// User-facing configuration. Values are kept in the units the file syntax
// uses (MHz, mW, um, G, ms, mK, eV, /s, m/s); conversion to base units
// happens in to_scan_config. Keeping the file units makes
// parse(serialize(c)) == c exact, with no round-off through conversion
// factors.
struct Config {
    // [lasers]
    std::string geometry = "co";  // co | counter | angled
    double power_729 = 250.0;     // mW
    double waist_729 = 50.0;      // um
    double detuning = -1.5;       // MHz, md / force-profile operating point
    double power_854 = 1.0;       // mW
    double waist_854 = 280.0;     // um
    double detuning_854 = -100.0;  // MHz
    double power_866 = 3.0;        // mW
    double waist_866 = 280.0;      // um

    // [trap]
    double omega_z = 0.56;  // MHz
    double omega_r = 0.95;  // MHz
    double bfield = 0.0;    // G
    std::string bfield_axis = "z";  // x | y | z

    // [ions]
    int count = 3;  // largest string that is zigzag-stable at the preset trap
    int dark_index = -1;
    int dark_species = 40;
    double precool = 2.0;  // mK
    bool precool_explicit = false;
    double precool_window = 1.0;  // ms

    // [scan]
    double from = -4.0;  // MHz
    double to = 1.0;     // MHz
    int points = 26;
    double window = 200.0;  // ms
    int trials = 20;
    double efficiency = 3.6e-4;
    double grid_halfwidth = 15.0;  // m/s
    int grid_points = 1201;
    std::vector<double> fields = {0.0, 0.4, 0.8, 1.2, 3.0};  // G
    double duration = 5.0;         // ms, md integration length
    double sample_interval = 0.0;  // ms, 0 picks a quarter axial period

    // [noise]
    double collision_rate = 0.05;   // /s per ion
    double collision_energy = 0.1;  // eV
    double heating_rate = 0.0;      // /s
    bool recoil = true;

    bool operator==(const Config&) const = default;
};

// Strict parse: sections [lasers] [trap] [ions] [scan] [noise], '#' comments,
// one "key = value [unit]" per line. Unknown sections/keys, wrong or missing
// unit suffixes, duplicate keys, and out-of-range values all throw
// ConfigError with the line number. Empty text gives the preset defaults.
Config parse_config(const std::string& text);

// Canonical text form; parse_config(serialize(c)) == c for any valid c.
std::string serialize(const Config& c);

// One "section.key = value [unit]" assignment, same syntax and strictness
// as a config-file line. Range checks are deferred so that overrides that
// are only jointly valid can be applied in sequence; run validate_config
// after the last one.
void apply_override(Config& c, const std::string& assignment);

void validate_config(const Config& c);  // throws ConfigError

GeometryTag geometry_tag(const std::string& name);  // throws ConfigError

// Base-unit conversion; the scan detuning grid is linspace(from, to, points).
ScanConfig to_scan_config(const Config& c);

struct RunManifest {
    std::string tool = "quadcool";
    std::string version = tool_version;
    std::string subcommand;
    std::uint64_t seed = 0;
    std::string started;   // ISO 8601 UTC
    std::string finished;
    Config config;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace quadcool
