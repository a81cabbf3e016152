#include "hbt/apparatus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hbt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + text + "'");
    }
    if (used != text.size())
        throw std::invalid_argument("config key '" + key + "': trailing junk in '" + text + "'");
    return value;
}

int parse_int(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    long value = 0;
    try {
        value = std::stol(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + text + "'");
    }
    if (used != text.size())
        throw std::invalid_argument("config key '" + key + "': trailing junk in '" + text + "'");
    return static_cast<int>(value);
}

struct FieldRef {
    const char* name;
    double ApparatusConfig::* value;
};

// Field order here is the canonical serialization order.
constexpr FieldRef kDoubleFields[] = {
    {"wavelength", &ApparatusConfig::wavelength},
    {"groove_width", &ApparatusConfig::groove_width},
    {"groove_spacing", &ApparatusConfig::groove_spacing},
    {"illum_diameter", &ApparatusConfig::illum_diameter},
    {"propagation_distance", &ApparatusConfig::propagation_distance},
    {"detector_aperture", &ApparatusConfig::detector_aperture},
    {"coherence_time", &ApparatusConfig::coherence_time},
    {"timing_resolution", &ApparatusConfig::timing_resolution},
    {"coincidence_window_near", &ApparatusConfig::coincidence_window_near},
    {"coincidence_window_far", &ApparatusConfig::coincidence_window_far},
    {"incidence_angle", &ApparatusConfig::incidence_angle},
    {"mean_rate_d1", &ApparatusConfig::mean_rate_d1},
    {"mean_rate_d2", &ApparatusConfig::mean_rate_d2},
};

}  // namespace

double SlitMask::total_width() const {
    double w = 0.0;
    for (const auto& [l, r] : intervals) w += r - l;
    return w;
}

const ApparatusConfig& validate(const ApparatusConfig& cfg) {
    const bool lengths_ok = cfg.wavelength > 0 && cfg.groove_width > 0 && cfg.groove_spacing > 0 &&
                            cfg.illum_diameter > 0 && cfg.propagation_distance > 0 &&
                            cfg.detector_aperture > 0;
    if (!lengths_ok) throw std::invalid_argument("invalid config: positive lengths");
    const bool times_ok = cfg.coherence_time > 0 && cfg.timing_resolution > 0 &&
                          cfg.coincidence_window_near > 0 && cfg.coincidence_window_far > 0;
    if (!times_ok) throw std::invalid_argument("invalid config: positive times");
    if (!(cfg.mean_rate_d1 > 0 && cfg.mean_rate_d2 > 0))
        throw std::invalid_argument("invalid config: positive rates");
    if (cfg.num_slits < 1) throw std::invalid_argument("invalid config: num_slits >= 1");
    if (!(cfg.coincidence_window_near < cfg.coincidence_window_far))
        throw std::invalid_argument(
            "invalid config: coincidence_window_near < coincidence_window_far");
    if (!(cfg.groove_width < cfg.groove_spacing))
        throw std::invalid_argument("invalid config: groove_width < groove_spacing");
    return cfg;
}

SlitMask slit_mask(const ApparatusConfig& cfg) {
    if (cfg.illum_profile != IllumProfile::TopHat)
        throw std::invalid_argument("slit_mask: only the top-hat illumination profile is implemented");

    SlitMask mask;
    mask.groove_width = cfg.groove_width;
    const double half_illum = cfg.illum_diameter / 2.0;
    const double half_groove = cfg.groove_width / 2.0;
    const int n = cfg.num_slits;
    for (int i = 0; i < n; ++i) {
        // Symmetric comb: odd counts put a slit center at x = 0.
        const double center = (i - (n - 1) / 2.0) * cfg.groove_spacing;
        const double left = std::max(center - half_groove, -half_illum);
        const double right = std::min(center + half_groove, half_illum);
        if (right > left) mask.intervals.emplace_back(left, right);
    }
    return mask;
}

ApparatusConfig parse_config(std::istream& in) {
    ApparatusConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key == "num_slits") {
            cfg.num_slits = parse_int(key, value);
            continue;
        }
        bool found = false;
        for (const auto& field : kDoubleFields) {
            if (key == field.name) {
                cfg.*(field.value) = parse_double(key, value);
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("unknown config key: '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

ApparatusConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

std::string serialize_config(const ApparatusConfig& cfg) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "num_slits = %d\n", cfg.num_slits);
    out += buf;
    for (const auto& field : kDoubleFields) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", field.name, cfg.*(field.value));
        out += buf;
    }
    out += cfg.illum_profile == IllumProfile::TopHat ? "# illum_profile tophat\n"
                                                     : "# illum_profile gaussian\n";
    out += cfg.lineshape == Lineshape::Exponential ? "# lineshape exponential\n"
                                                   : "# lineshape gaussian\n";
    return out;
}

std::uint64_t config_hash(const ApparatusConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace hbt
