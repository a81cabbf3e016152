#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hbt/apparatus.hpp"

namespace hbt {

enum class DetectorId { D1, D2 };

struct PhotonEventStream {
    DetectorId detector = DetectorId::D1;
    double duration = 0.0;           // seconds
    std::vector<double> timestamps;  // strictly increasing, inside [0, duration]
};

struct CoincidenceHistogram {
    double tau_min = 0.0;
    double tau_max = 0.0;
    double bin_width = 0.0;
    std::vector<std::uint64_t> counts;

    double bin_center(std::size_t k) const { return tau_min + (k + 0.5) * bin_width; }
};

/// Complex thermal field on a uniform time grid: an order-1 autoregressive
/// (Ornstein-Uhlenbeck) process with gamma(tau) = exp(-|tau| / tau0) and unit
/// mean intensity. The field samples stay available for calibration checks.
struct IntensityTrace {
    double dt = 0.0;
    std::vector<double> intensity;
    std::vector<std::complex<double>> field;  // filled only when keep_field

    double duration() const { return dt * static_cast<double>(intensity.size()); }
};

/// Steps of at most coherence_time / 10; coarser requests throw.
IntensityTrace generate_intensity_trace(const ApparatusConfig& cfg, double duration, double dt,
                                        std::mt19937_64& gen, bool keep_field = false);

/// Rescale the bunching excess: I -> 1 + factor * (I - 1). Applying this to
/// one detector's copy of a shared trace realizes a cross-correlation excess
/// of `factor` between the two detectors.
IntensityTrace scale_excess(const IntensityTrace& trace, double factor);

/// Inhomogeneous Poisson thinning of the trace at the given mean rate, with
/// Gaussian timestamp jitter of the given sigma. Events falling outside the
/// trace duration after jitter are dropped.
PhotonEventStream thin_to_events(const IntensityTrace& trace, double mean_rate,
                                 DetectorId detector, double jitter_sigma, std::mt19937_64& gen);

struct TacOptions {
    double tau_min = -5e-9;
    double tau_max = 5e-9;
    double bin_width = 0.1e-9;
    double stop_delay = 5e-9;  // electronic delay in the stop channel
    double dead_time = 0.0;    // converter dead time after each conversion
};

/// Single-armed time-to-amplitude converter and multichannel analyzer.
/// A start arms the converter; the first delayed stop within the span
/// converts; later starts while armed are ignored; the span is
/// tau_max - tau_min and the histogram bin stores tau = (stop + delay
/// offset) - start mapped back to the requested range. The range must be an
/// integer number of bins and both streams must share one duration.
CoincidenceHistogram tac_mca(const PhotonEventStream& start, const PhotonEventStream& stop,
                             const TacOptions& options = {});

/// Windowed correlation estimate from the histogram: mean counts per bin in
/// |tau| <= coincidence_window_near over mean counts per bin in
/// |tau| >= coincidence_window_far. The far window must hold at least 10 bins.
double g2_windowed(const CoincidenceHistogram& hist, const ApparatusConfig& cfg);

/// Long-run photon pair sampler: an exact thermal Cox process driven by the
/// same autoregressive field, advanced candidate to candidate instead of on a
/// uniform grid, so seconds of stream need no materialized trace. Detector 2
/// sees the excess scaled by spatial_factor, the equal-time cross excess of
/// the aperture pair. Deterministic in (cfg, options, seed) for any worker
/// count; candidates are thinned against a fixed intensity majorant.
struct EventRunOptions {
    double duration = 2.5;        // seconds of stream
    double spatial_factor = 1.0;  // cross-correlation excess scale
    double jitter_sigma = -1.0;   // < 0: timing_resolution as a Gaussian FWHM
    int segments = 64;            // fixed work decomposition
    int workers = 0;              // 0 = hardware concurrency
    double intensity_cap = 16.0;  // thinning majorant, units of mean intensity
};

std::pair<PhotonEventStream, PhotonEventStream> simulate_event_pair(const ApparatusConfig& cfg,
                                                                    const EventRunOptions& options,
                                                                    std::uint64_t seed);

/// One timestamp per line, 12 significant digits.
void write_stream(const PhotonEventStream& stream, const std::string& path);
PhotonEventStream read_stream(const std::string& path, DetectorId detector, double duration);

/// CSV with header tau_s,count; bin centers at 9 significant digits.
void write_histogram_csv(const CoincidenceHistogram& hist, const std::string& path);
CoincidenceHistogram read_histogram_csv(const std::string& path);

}  // namespace hbt
