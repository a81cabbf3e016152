#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hbt/apparatus.hpp"
#include "hbt/field_mc.hpp"

namespace hbt {

/// How the two detectors move with the scan coordinate s:
///   FixedD1     x1 = fixed_position, x2 = s
///   CounterScan x1 = -s,             x2 = +s
///   CoScan      x1 = s,              x2 = s
enum class ScanMode { FixedD1, CounterScan, CoScan };

struct ScanSpec {
    ScanMode mode = ScanMode::FixedD1;
    std::vector<double> positions;  // strictly increasing scan coordinates
    std::size_t ensemble_size = 20000;
    double fixed_position = 0.0;
};

std::pair<double, double> detector_coords(const ScanSpec& spec, std::size_t i);

struct EstimatorOptions {
    FieldOptions field;
    bool point_detectors = false;  // sample the field at the bare positions
    int batches = 20;              // batch-means groups for the stderr
    int workers = 0;               // 0 = hardware concurrency
};

/// Everything needed to reproduce a result bit for bit.
struct ScanMeta {
    ScanSpec spec;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    bool point_detectors = false;
    int aperture_points = 8;
    int emitter_density = 32;
};

struct CorrelationResult {
    std::vector<double> positions;
    std::vector<double> g2;
    std::vector<double> stderr_g2;  // batch-means standard error
    std::vector<double> singles_d1;
    std::vector<double> singles_d2;
    ScanMeta meta;
};

/// Normalized intensity correlation over a paired ensemble: every scan point
/// sees the same field realizations, so point-to-point scatter is shared.
/// g2 is the ratio of ensemble means <I1 I2> / (<I1><I2>), its stderr comes
/// from batch means over `batches` equal groups. Deterministic in (cfg, spec,
/// seed, options) regardless of worker count.
CorrelationResult estimate_g2(const ApparatusConfig& cfg, const ScanSpec& spec,
                              std::uint64_t seed, const EstimatorOptions& options = {});

struct Peak {
    double position = 0.0;  // sub-grid, from a parabolic fit through the apex
    double height = 0.0;
    double prominence = 0.0;
};

/// Local maxima of the 3-point-smoothed curve with topographic prominence
/// above max(2 * median stderr, 5% of the smoothed range).
std::vector<Peak> extract_peaks(const CorrelationResult& result);

/// Mean adjacent spacing of the dominant peaks: peaks whose excess over the
/// smoothed minimum is at least a quarter of the largest excess. Zero when
/// fewer than two qualify.
double peak_spacing(const CorrelationResult& result, const std::vector<Peak>& peaks);

struct OracleReport {
    double chi2_per_dof = 0.0;
    double max_sigma_deviation = 0.0;
    double peak_spacing_ratio = 0.0;  // fixed-detector / counter-scan period
};

/// Pointwise comparison against the closed-form correlation the estimator
/// converges to (aperture-averaged unless the run used point detectors).
/// When `paired` carries the other default scan of a fixed/counter pair the
/// report includes the spacing ratio; grids of mismatched lengths throw.
OracleReport compare_to_oracle(const CorrelationResult& result, const ApparatusConfig& cfg,
                               const CorrelationResult* paired = nullptr);

/// CSV with header position_m,g2,stderr,singles_d1,singles_d2 and 9
/// significant digits; byte-stable for identical results.
void write_result_csv(const CorrelationResult& result, const std::string& path);

/// Reads the columns back (meta is not stored in the CSV).
CorrelationResult read_result_csv(const std::string& path);

}  // namespace hbt
