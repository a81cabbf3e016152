#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hbt {

enum class IllumProfile { TopHat, Gaussian };
enum class Lineshape { Exponential, Gaussian };

/// Physical parameters of the bench: source, grating, propagation geometry,
/// detectors and the coincidence electronics. SI units throughout.
struct ApparatusConfig {
    double wavelength = 780e-9;
    double groove_width = 0.08e-3;
    double groove_spacing = 0.2e-3;
    int num_slits = 5;
    double illum_diameter = 1.0e-3;
    double propagation_distance = 1.62;
    double detector_aperture = 2.0e-3;
    double coherence_time = 0.2e-9;
    double timing_resolution = 1.0e-9;
    double coincidence_window_near = 0.25e-9;
    double coincidence_window_far = 1.3e-9;
    double incidence_angle = 0.0;
    double mean_rate_d1 = 4.0e6;
    double mean_rate_d2 = 4.0e6;

    // Model selectors; not config-file keys.
    IllumProfile illum_profile = IllumProfile::TopHat;
    Lineshape lineshape = Lineshape::Exponential;

    /// lambda * z, the scale that converts detector separation to the
    /// spatial frequency seen by the source.
    double lambda_z() const { return wavelength * propagation_distance; }
};

/// Transmitting intervals of the grating, clipped to the illuminated region.
struct SlitMask {
    std::vector<std::pair<double, double>> intervals;  // ascending, disjoint
    double groove_width = 0.0;                         // nominal full width

    double total_width() const;
};

/// Throws std::invalid_argument naming the first violated invariant.
/// Returns its argument so call sites can validate inline.
const ApparatusConfig& validate(const ApparatusConfig& cfg);

/// Grating openings centered on multiples of groove_spacing, symmetric about
/// x = 0, clipped to the illuminated diameter. Fully dark openings drop out.
SlitMask slit_mask(const ApparatusConfig& cfg);

/// Flat "key = value" file, one per line, '#' comments. Keys are exactly the
/// field names above; unknown keys are an error. Missing keys keep defaults.
ApparatusConfig load_config_file(const std::string& path);
ApparatusConfig parse_config(std::istream& in);

/// Canonical text form; feeds config_hash and round-trips through parse.
std::string serialize_config(const ApparatusConfig& cfg);

/// FNV-1a over the canonical serialization, for manifests and run metadata.
std::uint64_t config_hash(const ApparatusConfig& cfg);

}  // namespace hbt
