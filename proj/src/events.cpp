#include "hbt/events.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "hbt/rng.hpp"

namespace hbt {

namespace {

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

/// Knuth's product method; exact for any mean, fast for the small per-cell
/// means this simulation produces.
int poisson_count(double mean, std::mt19937_64& gen) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform01(gen);
    } while (p > limit);
    return k - 1;
}

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void sort_clip_dedupe(std::vector<double>& ts, double duration) {
    std::sort(ts.begin(), ts.end());
    std::vector<double> kept;
    kept.reserve(ts.size());
    for (const double t : ts) {
        if (t < 0.0 || t > duration) continue;
        if (!kept.empty() && t <= kept.back()) continue;
        kept.push_back(t);
    }
    ts = std::move(kept);
}

}  // namespace

IntensityTrace generate_intensity_trace(const ApparatusConfig& cfg, double duration, double dt,
                                        std::mt19937_64& gen, bool keep_field) {
    const double tau0 = cfg.coherence_time;
    if (!(dt > 0.0)) throw std::invalid_argument("generate_intensity_trace: dt > 0");
    if (dt > tau0 / 10.0 * (1.0 + 1e-12))
        throw std::invalid_argument(
            "generate_intensity_trace: dt must be at most coherence_time / 10");
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));
    if (n < 1) throw std::invalid_argument("generate_intensity_trace: duration shorter than dt");

    IntensityTrace trace;
    trace.dt = dt;
    trace.intensity.resize(n);
    if (keep_field) trace.field.resize(n);

    // Stationary order-1 autoregression of a circular Gaussian amplitude:
    // a_{k+1} = rho a_k + sqrt(1 - rho^2) w_k keeps unit mean intensity and
    // gives gamma(tau) = exp(-|tau| / tau0) on the grid.
    const double rho = std::exp(-dt / tau0);
    const double q = std::sqrt(1.0 - rho * rho);
    NormalGen ng(gen);
    std::complex<double> a = circular_gaussian(ng);
    for (std::size_t k = 0; k < n; ++k) {
        trace.intensity[k] = std::norm(a);
        if (keep_field) trace.field[k] = a;
        a = rho * a + q * circular_gaussian(ng);
    }
    return trace;
}

IntensityTrace scale_excess(const IntensityTrace& trace, double factor) {
    if (!(factor >= 0.0 && factor <= 1.0))
        throw std::invalid_argument("scale_excess: factor outside [0, 1]");
    IntensityTrace out;
    out.dt = trace.dt;
    out.intensity.resize(trace.intensity.size());
    for (std::size_t k = 0; k < trace.intensity.size(); ++k)
        out.intensity[k] = 1.0 + factor * (trace.intensity[k] - 1.0);
    return out;
}

PhotonEventStream thin_to_events(const IntensityTrace& trace, double mean_rate,
                                 DetectorId detector, double jitter_sigma, std::mt19937_64& gen) {
    if (!(mean_rate > 0.0)) throw std::invalid_argument("thin_to_events: mean_rate > 0");
    if (jitter_sigma < 0.0) throw std::invalid_argument("thin_to_events: jitter_sigma >= 0");
    PhotonEventStream stream;
    stream.detector = detector;
    stream.duration = trace.duration();
    NormalGen ng(gen);
    for (std::size_t k = 0; k < trace.intensity.size(); ++k) {
        const double mean = mean_rate * trace.intensity[k] * trace.dt;
        const int count = poisson_count(mean, gen);
        for (int c = 0; c < count; ++c) {
            double t = (static_cast<double>(k) + uniform01(gen)) * trace.dt;
            if (jitter_sigma > 0.0) t += jitter_sigma * ng();
            stream.timestamps.push_back(t);
        }
    }
    sort_clip_dedupe(stream.timestamps, stream.duration);
    return stream;
}

CoincidenceHistogram tac_mca(const PhotonEventStream& start, const PhotonEventStream& stop,
                             const TacOptions& options) {
    const double span = options.tau_max - options.tau_min;
    if (!(span > 0.0) || !(options.bin_width > 0.0))
        throw std::invalid_argument("tac_mca: need tau_min < tau_max and bin_width > 0");
    const double nb_exact = span / options.bin_width;
    const auto nb = static_cast<std::size_t>(std::llround(nb_exact));
    if (nb < 1 || std::abs(nb_exact - static_cast<double>(nb)) > 1e-9 * nb_exact)
        throw std::invalid_argument("tac_mca: histogram range is not a whole number of bins");
    const double dmax = std::max(start.duration, stop.duration);
    if (std::abs(start.duration - stop.duration) > 1e-12 * std::max(dmax, 1.0))
        throw std::invalid_argument("tac_mca: streams must share one duration");
    if (options.dead_time < 0.0) throw std::invalid_argument("tac_mca: dead_time >= 0");

    CoincidenceHistogram hist;
    hist.tau_min = options.tau_min;
    hist.tau_max = options.tau_max;
    hist.bin_width = options.bin_width;
    hist.counts.assign(nb, 0);

    // Single-armed converter: a start arms it, the first delayed stop inside
    // the sweep converts, a sweep with no stop overflows at full scale, and
    // starts arriving while armed or dead are ignored.
    const double delay = options.stop_delay;
    std::size_t j = 0;
    double busy_until = -std::numeric_limits<double>::infinity();
    for (const double s : start.timestamps) {
        if (s < busy_until) continue;
        while (j < stop.timestamps.size() && stop.timestamps[j] + delay <= s) ++j;
        if (j == stop.timestamps.size()) break;
        const double d = stop.timestamps[j] + delay - s;
        if (d <= span) {
            const double tau = d - delay;
            // Tiny forward bias keeps exactly representable boundary values
            // in their closed-from-below bin.
            const auto k = static_cast<long long>(
                std::floor((tau - options.tau_min) / options.bin_width + 1e-9));
            if (k >= 0 && k < static_cast<long long>(nb)) ++hist.counts[static_cast<std::size_t>(k)];
            busy_until = stop.timestamps[j] + delay + options.dead_time;
            ++j;
        } else {
            busy_until = s + span;  // overflow: sweep runs to full scale
        }
    }
    return hist;
}

double g2_windowed(const CoincidenceHistogram& hist, const ApparatusConfig& cfg) {
    const double near = cfg.coincidence_window_near;
    const double far = cfg.coincidence_window_far;
    const double tol = 1e-6 * hist.bin_width;
    double near_sum = 0.0;
    double far_sum = 0.0;
    std::size_t near_bins = 0;
    std::size_t far_bins = 0;
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        const double c = std::abs(hist.bin_center(k));
        if (c <= near + tol) {
            near_sum += static_cast<double>(hist.counts[k]);
            ++near_bins;
        } else if (c >= far - tol) {
            far_sum += static_cast<double>(hist.counts[k]);
            ++far_bins;
        }
    }
    if (near_bins == 0) throw std::invalid_argument("g2_windowed: no bins inside the near window");
    if (far_bins < 10)
        throw std::invalid_argument("g2_windowed: far window must hold at least 10 bins");
    if (far_sum == 0.0) throw std::runtime_error("g2_windowed: far window holds no counts");
    return (near_sum / static_cast<double>(near_bins)) / (far_sum / static_cast<double>(far_bins));
}

std::pair<PhotonEventStream, PhotonEventStream> simulate_event_pair(const ApparatusConfig& cfg,
                                                                    const EventRunOptions& options,
                                                                    std::uint64_t seed) {
    if (!(options.duration > 0.0)) throw std::invalid_argument("simulate_event_pair: duration > 0");
    if (!(options.spatial_factor >= 0.0 && options.spatial_factor <= 1.0))
        throw std::invalid_argument("simulate_event_pair: spatial_factor outside [0, 1]");
    if (options.segments < 1) throw std::invalid_argument("simulate_event_pair: segments >= 1");
    if (!(options.intensity_cap > 1.0))
        throw std::invalid_argument("simulate_event_pair: intensity_cap > 1");

    const double tau0 = cfg.coherence_time;
    const double r1 = cfg.mean_rate_d1;
    const double r2 = cfg.mean_rate_d2;
    const double rsum = r1 + r2;
    const double p1 = r1 / rsum;
    const double cap = options.intensity_cap;
    const double sigma_j = options.jitter_sigma >= 0.0 ? options.jitter_sigma
                                                       : cfg.timing_resolution / kFwhmPerSigma;
    const auto segments = static_cast<std::size_t>(options.segments);
    const double seg_len = options.duration / static_cast<double>(segments);
    constexpr std::uint64_t kEventStreamBase = 1ull << 48;

    std::vector<std::vector<double>> seg_d1(segments), seg_d2(segments);
    std::atomic<std::size_t> next_segment{0};

    // Candidate-driven Cox process: candidates arrive as a homogeneous
    // Poisson stream at cap * rsum, the thermal amplitude is advanced exactly
    // over each gap, and each candidate is kept with probability I / cap.
    // Intensities above the majorant are kept with probability one; with
    // cap = 16 that clips e^-16 of the exponential intensity mass, far below
    // any statistic this simulation resolves. Segments restart the amplitude
    // independently, which decorrelates pairs spanning a boundary: a ~10 ns
    // window against ~40 ms segments, again beyond resolution.
    auto run_segments = [&]() {
        for (;;) {
            const std::size_t s = next_segment.fetch_add(1);
            if (s >= segments) return;
            std::mt19937_64 gen = make_stream(seed, kEventStreamBase + s);
            NormalGen ng(gen);
            const double offset = static_cast<double>(s) * seg_len;
            const double lambda = cap * rsum;
            std::complex<double> a = circular_gaussian(ng);
            double t = 0.0;
            for (;;) {
                const double u = uniform01(gen);
                const double gap = -std::log1p(-u) / lambda;
                t += gap;
                if (t >= seg_len) break;
                if (gap > 45.0 * tau0) {
                    a = circular_gaussian(ng);
                } else {
                    const double rho = std::exp(-gap / tau0);
                    a = rho * a + std::sqrt(1.0 - rho * rho) * circular_gaussian(ng);
                }
                const double intensity = std::norm(a);
                const bool to_d1 = uniform01(gen) < p1;
                const double eff = to_d1
                                       ? intensity
                                       : 1.0 + options.spatial_factor * (intensity - 1.0);
                if (!(uniform01(gen) < eff / cap)) continue;
                // One draw per accepted event even when sigma_j is zero, so
                // runs that differ only in jitter share their event set.
                const double ts = offset + t + sigma_j * ng();
                (to_d1 ? seg_d1[s] : seg_d2[s]).push_back(ts);
            }
        }
    };

    const int n_workers = std::min<int>(resolve_workers(options.workers),
                                        static_cast<int>(segments));
    if (n_workers <= 1) {
        run_segments();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(run_segments);
        for (auto& t : pool) t.join();
    }

    PhotonEventStream d1, d2;
    d1.detector = DetectorId::D1;
    d2.detector = DetectorId::D2;
    d1.duration = d2.duration = options.duration;
    for (std::size_t s = 0; s < segments; ++s) {
        d1.timestamps.insert(d1.timestamps.end(), seg_d1[s].begin(), seg_d1[s].end());
        d2.timestamps.insert(d2.timestamps.end(), seg_d2[s].begin(), seg_d2[s].end());
    }
    sort_clip_dedupe(d1.timestamps, d1.duration);
    sort_clip_dedupe(d2.timestamps, d2.duration);
    return {std::move(d1), std::move(d2)};
}

void write_stream(const PhotonEventStream& stream, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
    for (const double t : stream.timestamps) std::fprintf(f, "%.12g\n", t);
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

PhotonEventStream read_stream(const std::string& path, DetectorId detector, double duration) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    PhotonEventStream stream;
    stream.detector = detector;
    stream.duration = duration;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        stream.timestamps.push_back(std::stod(line));
        if (stream.timestamps.size() > 1 &&
            stream.timestamps.back() <= stream.timestamps[stream.timestamps.size() - 2])
            throw std::invalid_argument("event stream not strictly increasing: " + path);
    }
    return stream;
}

void write_histogram_csv(const CoincidenceHistogram& hist, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("tau_s,count\n", f);
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        std::fprintf(f, "%.9g,%llu\n", hist.bin_center(k),
                     static_cast<unsigned long long>(hist.counts[k]));
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

CoincidenceHistogram read_histogram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tau_s,count")
        throw std::invalid_argument("not a histogram CSV: " + path);
    std::vector<double> centers;
    std::vector<std::uint64_t> counts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double c;
        unsigned long long n;
        if (std::sscanf(line.c_str(), "%lf,%llu", &c, &n) != 2)
            throw std::invalid_argument("malformed histogram CSV row: " + line);
        centers.push_back(c);
        counts.push_back(n);
    }
    if (centers.size() < 2) throw std::invalid_argument("histogram CSV too short: " + path);
    CoincidenceHistogram hist;
    hist.bin_width = centers[1] - centers[0];
    hist.tau_min = centers.front() - hist.bin_width / 2.0;
    hist.tau_max = centers.back() + hist.bin_width / 2.0;
    hist.counts = std::move(counts);
    return hist;
}

}  // namespace hbt
