#include "quadcool/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <sstream>

#include "quadcool/constants.hpp"

namespace quadcool {

namespace kc = constants;

namespace {

enum class Kind { number, integer, boolean, word, number_list };

struct KeySpec {
    const char* section;
    const char* key;
    Kind kind;
    const char* unit = nullptr;   // nullptr: bare number
    const char* words = nullptr;  // allowed values for Kind::word, '|'-joined
    double Config::* num = nullptr;
    int Config::* inum = nullptr;
    bool Config::* flag = nullptr;
    std::string Config::* text = nullptr;
    std::vector<double> Config::* list = nullptr;
};

KeySpec num(const char* s, const char* k, double Config::* m, const char* u) {
    KeySpec ks{s, k, Kind::number, u};
    ks.num = m;
    return ks;
}
KeySpec integer(const char* s, const char* k, int Config::* m) {
    KeySpec ks{s, k, Kind::integer};
    ks.inum = m;
    return ks;
}
KeySpec boolean(const char* s, const char* k, bool Config::* m) {
    KeySpec ks{s, k, Kind::boolean};
    ks.flag = m;
    return ks;
}
KeySpec word(const char* s, const char* k, std::string Config::* m,
             const char* allowed) {
    KeySpec ks{s, k, Kind::word};
    ks.words = allowed;
    ks.text = m;
    return ks;
}
KeySpec numlist(const char* s, const char* k, std::vector<double> Config::* m,
                const char* u) {
    KeySpec ks{s, k, Kind::number_list, u};
    ks.list = m;
    return ks;
}

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        word("lasers", "geometry", &Config::geometry, "co|counter|angled"),
        num("lasers", "power_729", &Config::power_729, "mW"),
        num("lasers", "waist_729", &Config::waist_729, "um"),
        num("lasers", "detuning", &Config::detuning, "MHz"),
        num("lasers", "power_854", &Config::power_854, "mW"),
        num("lasers", "waist_854", &Config::waist_854, "um"),
        num("lasers", "detuning_854", &Config::detuning_854, "MHz"),
        num("lasers", "power_866", &Config::power_866, "mW"),
        num("lasers", "waist_866", &Config::waist_866, "um"),

        num("trap", "omega_z", &Config::omega_z, "MHz"),
        num("trap", "omega_r", &Config::omega_r, "MHz"),
        num("trap", "bfield", &Config::bfield, "G"),
        word("trap", "bfield_axis", &Config::bfield_axis, "x|y|z"),

        integer("ions", "count", &Config::count),
        integer("ions", "dark_index", &Config::dark_index),
        integer("ions", "dark_species", &Config::dark_species),
        num("ions", "precool", &Config::precool, "mK"),
        boolean("ions", "precool_explicit", &Config::precool_explicit),
        num("ions", "precool_window", &Config::precool_window, "ms"),

        num("scan", "from", &Config::from, "MHz"),
        num("scan", "to", &Config::to, "MHz"),
        integer("scan", "points", &Config::points),
        num("scan", "window", &Config::window, "ms"),
        integer("scan", "trials", &Config::trials),
        num("scan", "efficiency", &Config::efficiency, nullptr),
        num("scan", "grid_halfwidth", &Config::grid_halfwidth, "m/s"),
        integer("scan", "grid_points", &Config::grid_points),
        numlist("scan", "fields", &Config::fields, "G"),
        num("scan", "duration", &Config::duration, "ms"),
        num("scan", "sample_interval", &Config::sample_interval, "ms"),

        num("noise", "collision_rate", &Config::collision_rate, "/s"),
        num("noise", "collision_energy", &Config::collision_energy, "eV"),
        num("noise", "heating_rate", &Config::heating_rate, "/s"),
        boolean("noise", "recoil", &Config::recoil),
    };
    return table;
}

const char* const section_names[] = {"lasers", "trap", "ions", "scan",
                                     "noise"};

bool known_section(const std::string& s) {
    for (const char* n : section_names)
        if (s == n) return true;
    return false;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

double parse_number(const std::string& tok, const std::string& where) {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail(where, "not a number: '" + tok + "'");
    if (!std::isfinite(v)) fail(where, "non-finite value");
    return v;
}

int parse_int(const std::string& tok, const std::string& where) {
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail(where, "not an integer: '" + tok + "'");
    return v;
}

bool word_allowed(const char* allowed, const std::string& w) {
    std::string list(allowed);
    size_t pos = 0;
    while (pos <= list.size()) {
        size_t bar = list.find('|', pos);
        if (bar == std::string::npos) bar = list.size();
        if (list.substr(pos, bar - pos) == w) return true;
        pos = bar + 1;
    }
    return false;
}

void assign(Config& c, const KeySpec& ks, const std::string& value,
            const std::string& where) {
    auto toks = split_ws(value);
    if (toks.empty()) fail(where, "missing value");
    switch (ks.kind) {
        case Kind::number:
            if (ks.unit) {
                if (toks.size() != 2)
                    fail(where, std::string("expected '<number> ") + ks.unit +
                                    "'");
                if (toks[1] != ks.unit)
                    fail(where, std::string("expected unit ") + ks.unit +
                                    ", got '" + toks[1] + "'");
            } else if (toks.size() != 1) {
                fail(where, "takes a bare number, no unit");
            }
            c.*(ks.num) = parse_number(toks[0], where);
            break;
        case Kind::integer:
            if (toks.size() != 1) fail(where, "takes a bare integer");
            c.*(ks.inum) = parse_int(toks[0], where);
            break;
        case Kind::boolean:
            if (toks.size() != 1 || (toks[0] != "true" && toks[0] != "false"))
                fail(where, "expected true or false");
            c.*(ks.flag) = toks[0] == "true";
            break;
        case Kind::word:
            if (toks.size() != 1 || !word_allowed(ks.words, toks[0]))
                fail(where, std::string("expected one of ") + ks.words);
            c.*(ks.text) = toks[0];
            break;
        case Kind::number_list: {
            if (toks.size() < 2)
                fail(where, std::string("expected '<numbers...> ") + ks.unit +
                                "'");
            if (toks.back() != ks.unit)
                fail(where, std::string("expected trailing unit ") + ks.unit);
            std::vector<double> vals;
            for (size_t i = 0; i + 1 < toks.size(); ++i)
                vals.push_back(parse_number(toks[i], where));
            c.*(ks.list) = std::move(vals);
            break;
        }
    }
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
    for (const auto& ks : key_table())
        if (section == ks.section && key == ks.key) return &ks;
    return nullptr;
}

void check_ranges(const Config& c) {
    auto bad = [](const std::string& what) {
        throw ConfigError("config: " + what);
    };
    if (c.power_729 < 0 || c.power_854 < 0 || c.power_866 < 0)
        bad("negative laser power");
    if (c.waist_729 <= 0 || c.waist_854 <= 0 || c.waist_866 <= 0)
        bad("beam waists must be positive");
    if (c.omega_z <= 0 || c.omega_r <= 0)
        bad("secular frequencies must be positive");
    if (c.bfield < 0) bad("negative field magnitude");
    if (c.count < 1) bad("need at least one ion");
    if (c.dark_index < -1 || c.dark_index >= c.count)
        bad("dark_index out of range");
    if (c.dark_species <= 0) bad("dark_species must be positive");
    if (c.precool < 0) bad("negative precool temperature");
    if (c.precool_window <= 0) bad("precool_window must be positive");
    if (c.points < 1) bad("scan needs at least one point");
    if (c.points > 1 && !(c.to > c.from)) bad("scan range must have to > from");
    if (c.window <= 0) bad("window must be positive");
    if (c.trials < 1) bad("trials must be >= 1");
    if (!(c.efficiency > 0) || c.efficiency > 1)
        bad("efficiency must be in (0, 1]");
    if (c.grid_halfwidth <= 0) bad("grid_halfwidth must be positive");
    if (c.grid_points < 2) bad("grid_points must be >= 2");
    if (c.fields.empty()) bad("fields list is empty");
    for (double f : c.fields)
        if (f < 0) bad("negative field in fields list");
    if (c.duration <= 0) bad("duration must be positive");
    if (c.sample_interval < 0) bad("negative sample_interval");
    if (c.collision_rate < 0) bad("negative collision_rate");
    if (c.collision_energy < 0) bad("negative collision_energy");
    if (c.heating_rate < 0) bad("negative heating_rate");
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string value_text(const Config& c, const KeySpec& ks) {
    switch (ks.kind) {
        case Kind::number: {
            std::string s = format_number(c.*(ks.num));
            if (ks.unit) s += std::string(" ") + ks.unit;
            return s;
        }
        case Kind::integer:
            return std::to_string(c.*(ks.inum));
        case Kind::boolean:
            return c.*(ks.flag) ? "true" : "false";
        case Kind::word:
            return c.*(ks.text);
        case Kind::number_list: {
            std::string s;
            for (double v : c.*(ks.list)) s += format_number(v) + " ";
            return s + ks.unit;
        }
    }
    return "";
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

}  // namespace

Config parse_config(const std::string& text) {
    Config c;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;

    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        std::string where = "line " + std::to_string(line_no);

        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(where, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section))
                fail(where, "unknown section [" + section + "]");
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos) fail(where, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(where, "key before any [section]");
        const KeySpec* ks = find_key(section, key);
        if (!ks) fail(where, "unknown key " + section + "." + key);
        if (!seen.insert({section, key}).second)
            fail(where, "duplicate key " + section + "." + key);
        assign(c, *ks, value, where);
    }
    check_ranges(c);
    return c;
}

std::string serialize(const Config& c) {
    std::string out;
    std::string current;
    for (const auto& ks : key_table()) {
        if (current != ks.section) {
            if (!out.empty()) out += "\n";
            current = ks.section;
            out += "[" + current + "]\n";
        }
        out += std::string(ks.key) + " = " + value_text(c, ks) + "\n";
    }
    return out;
}

void apply_override(Config& c, const std::string& assignment) {
    std::string where = "override '" + assignment + "'";
    size_t eq = assignment.find('=');
    if (eq == std::string::npos) fail(where, "expected section.key=value");
    std::string path = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    size_t dot = path.find('.');
    if (dot == std::string::npos) fail(where, "expected section.key=value");
    std::string section = path.substr(0, dot);
    std::string key = path.substr(dot + 1);
    if (!known_section(section)) fail(where, "unknown section " + section);
    const KeySpec* ks = find_key(section, key);
    if (!ks) fail(where, "unknown key " + section + "." + key);
    assign(c, *ks, value, where);
}

void validate_config(const Config& c) { check_ranges(c); }

GeometryTag geometry_tag(const std::string& name) {
    if (name == "co") return GeometryTag::co_propagating_axial;
    if (name == "counter") return GeometryTag::counter_propagating_axial;
    if (name == "angled") return GeometryTag::angled_45_with_axial_assist;
    throw ConfigError("unknown geometry '" + name + "'");
}

ScanConfig to_scan_config(const Config& c) {
    ScanConfig s;
    s.geometry = geometry_tag(c.geometry);

    s.detunings.clear();
    for (int i = 0; i < c.points; ++i) {
        double t = c.points > 1
                       ? static_cast<double>(i) / (c.points - 1)
                       : 0.0;
        double mhz = c.from + (c.to - c.from) * t;
        s.detunings.push_back(mhz * kc::two_pi * 1e6);
    }

    s.power_729 = c.power_729 * 1e-3;
    s.waist_729 = c.waist_729 * 1e-6;
    s.power_854 = c.power_854 * 1e-3;
    s.waist_854 = c.waist_854 * 1e-6;
    s.detuning_854 = c.detuning_854 * kc::two_pi * 1e6;
    s.power_866 = c.power_866 * 1e-3;
    s.waist_866 = c.waist_866 * 1e-6;

    s.b_field = c.bfield * 1e-4;
    s.b_dir = c.bfield_axis == "x"   ? Vec3::UnitX()
              : c.bfield_axis == "y" ? Vec3::UnitY()
                                     : Vec3::UnitZ();

    s.trap.omega_z = c.omega_z * kc::two_pi * 1e6;
    s.trap.omega_r = c.omega_r * kc::two_pi * 1e6;

    s.n_ions = c.count;
    s.dark_index = c.dark_index;
    s.dark_species = c.dark_species;
    s.t_precool = c.precool * 1e-3;
    s.precool_explicit = c.precool_explicit;
    s.precool_window = c.precool_window * 1e-3;

    s.window = c.window * 1e-3;
    s.trials = c.trials;
    s.efficiency = c.efficiency;
    s.grid_halfwidth = c.grid_halfwidth;
    s.grid_points = c.grid_points;

    s.noise.collision_rate = c.collision_rate;
    s.noise.collision_energy = c.collision_energy * kc::q_elem;
    s.noise.heating_rate = c.heating_rate;
    s.noise.recoil = c.recoil;
    return s;
}

std::string RunManifest::to_json() const {
    std::string out = "{\n";
    out += "  \"tool\": \"" + json_escape(tool) + "\",\n";
    out += "  \"version\": \"" + json_escape(version) + "\",\n";
    out += "  \"subcommand\": \"" + json_escape(subcommand) + "\",\n";
    out += "  \"seed\": " + std::to_string(seed) + ",\n";
    out += "  \"started\": \"" + json_escape(started) + "\",\n";
    out += "  \"finished\": \"" + json_escape(finished) + "\",\n";
    out += "  \"config\": {\n";
    std::string current;
    bool first_section = true;
    for (const auto& ks : key_table()) {
        if (current != ks.section) {
            if (!first_section) out += "\n    },\n";
            current = ks.section;
            out += "    \"" + current + "\": {\n";
            first_section = false;
        } else {
            out += ",\n";
        }
        out += "      \"" + std::string(ks.key) + "\": \"" +
               json_escape(value_text(config, ks)) + "\"";
    }
    out += "\n    }\n  },\n";
    out += "  \"outputs\": [";
    for (size_t i = 0; i < outputs.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + json_escape(outputs[i]) + "\"";
    }
    out += "]\n}\n";
    return out;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace quadcool
