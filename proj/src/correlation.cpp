#include "hbt/correlation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "hbt/analytic.hpp"
#include "hbt/rng.hpp"

namespace hbt {

namespace {

/// Compensated accumulator; batch sums must not depend on summation order
/// noise, and ensembles reach 1e5 terms.
struct Kahan {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct PointAcc {
    Kahan i1, i2, i12;
};

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<double> smooth3(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> out(y);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (y[i - 1] + y[i] + y[i + 1]) / 3.0;
    return out;
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when they are collinear. Returns {x, y} of the apex.
std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2,
                                          double y2) {
    const double d01 = x1 - x0;
    const double d12 = x2 - x1;
    const double s01 = (y1 - y0) / d01;
    const double s12 = (y2 - y1) / d12;
    const double curv = (s12 - s01) / (x2 - x0);  // half the second derivative
    if (!(std::abs(curv) > 0.0)) return {x1, y1};
    const double xv = 0.5 * (x0 + x1 - s01 / curv);
    const double yv = y0 + s01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    return {xv, yv};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

}  // namespace

std::pair<double, double> detector_coords(const ScanSpec& spec, std::size_t i) {
    const double s = spec.positions.at(i);
    switch (spec.mode) {
        case ScanMode::FixedD1:
            return {spec.fixed_position, s};
        case ScanMode::CounterScan:
            return {-s, s};
        case ScanMode::CoScan:
            return {s, s};
    }
    throw std::logic_error("detector_coords: unhandled scan mode");
}

CorrelationResult estimate_g2(const ApparatusConfig& cfg, const ScanSpec& spec, std::uint64_t seed,
                              const EstimatorOptions& options) {
    const std::size_t n_pos = spec.positions.size();
    if (n_pos == 0) throw std::invalid_argument("estimate_g2: empty scan");
    for (std::size_t i = 1; i < n_pos; ++i)
        if (!(spec.positions[i] > spec.positions[i - 1]))
            throw std::invalid_argument("estimate_g2: positions must be strictly increasing");
    const std::size_t batches = options.batches > 1 ? static_cast<std::size_t>(options.batches) : 0;
    if (batches == 0) throw std::invalid_argument("estimate_g2: need at least 2 batches");
    const std::size_t ensemble = spec.ensemble_size;
    if (ensemble < batches)
        throw std::invalid_argument("estimate_g2: ensemble_size smaller than batch count");

    // One sub-point block per detector per scan point; the propagation kernel
    // is built once since emitters and scan points are fixed across the
    // ensemble, leaving only amplitude draws and one kernel apply per
    // realization.
    const int m = options.point_detectors ? 1 : std::max(1, options.field.aperture_points);
    const double aperture = options.point_detectors ? 0.0 : cfg.detector_aperture;
    std::vector<double> plane_points;
    plane_points.reserve(n_pos * 2 * m);
    for (std::size_t i = 0; i < n_pos; ++i) {
        const auto [x1, x2] = detector_coords(spec, i);
        for (int k = 0; k < m; ++k)
            plane_points.push_back(x1 - aperture / 2.0 + (k + 0.5) * aperture / m);
        for (int k = 0; k < m; ++k)
            plane_points.push_back(x2 - aperture / 2.0 + (k + 0.5) * aperture / m);
    }

    const SlitMask mask = slit_mask(cfg);
    const std::vector<double> emitters = emitter_grid(mask, options.field.emitter_density);
    const std::size_t n_em = emitters.size();
    const PropagationMatrix kernel(emitters, plane_points, cfg, options.field.fresnel_phase);

    std::vector<std::vector<PointAcc>> batch_acc(batches, std::vector<PointAcc>(n_pos));
    std::atomic<std::size_t> next_batch{0};

    auto run_batches = [&]() {
        std::vector<double> a_re(n_em), a_im(n_em);
        std::vector<double> e_re(plane_points.size()), e_im(plane_points.size());
        for (;;) {
            const std::size_t b = next_batch.fetch_add(1);
            if (b >= batches) return;
            const std::size_t r0 = ensemble * b / batches;
            const std::size_t r1 = ensemble * (b + 1) / batches;
            std::vector<PointAcc>& acc = batch_acc[b];
            for (std::size_t r = r0; r < r1; ++r) {
                std::mt19937_64 gen = make_stream(seed, r);
                draw_amplitudes(gen, n_em, a_re.data(), a_im.data());
                kernel.apply(a_re.data(), a_im.data(), e_re.data(), e_im.data());
                for (std::size_t i = 0; i < n_pos; ++i) {
                    const double* re1 = e_re.data() + i * 2 * m;
                    const double* im1 = e_im.data() + i * 2 * m;
                    double i1 = 0.0;
                    double i2 = 0.0;
                    for (int k = 0; k < m; ++k) i1 += re1[k] * re1[k] + im1[k] * im1[k];
                    for (int k = m; k < 2 * m; ++k) i2 += re1[k] * re1[k] + im1[k] * im1[k];
                    i1 /= m;
                    i2 /= m;
                    acc[i].i1.add(i1);
                    acc[i].i2.add(i2);
                    acc[i].i12.add(i1 * i2);
                }
            }
        }
    };

    const int n_workers = std::min<int>(resolve_workers(options.workers),
                                        static_cast<int>(batches));
    if (n_workers <= 1) {
        run_batches();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(run_batches);
        for (auto& t : pool) t.join();
    }

    CorrelationResult result;
    result.positions = spec.positions;
    result.g2.resize(n_pos);
    result.stderr_g2.resize(n_pos);
    result.singles_d1.resize(n_pos);
    result.singles_d2.resize(n_pos);
    result.meta.spec = spec;
    result.meta.config_hash = config_hash(cfg);
    result.meta.seed = seed;
    result.meta.point_detectors = options.point_detectors;
    result.meta.aperture_points = m;
    result.meta.emitter_density = options.field.emitter_density;

    for (std::size_t i = 0; i < n_pos; ++i) {
        Kahan s1, s2, s12;
        std::vector<double> batch_g2(batches);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t nb = ensemble * (b + 1) / batches - ensemble * b / batches;
            const PointAcc& acc = batch_acc[b][i];
            s1.add(acc.i1.sum);
            s2.add(acc.i2.sum);
            s12.add(acc.i12.sum);
            batch_g2[b] = acc.i12.sum * static_cast<double>(nb) / (acc.i1.sum * acc.i2.sum);
        }
        const double r = static_cast<double>(ensemble);
        result.g2[i] = s12.sum * r / (s1.sum * s2.sum);
        result.singles_d1[i] = s1.sum / r;
        result.singles_d2[i] = s2.sum / r;
        double mean = 0.0;
        for (const double g : batch_g2) mean += g;
        mean /= static_cast<double>(batches);
        double var = 0.0;
        for (const double g : batch_g2) var += (g - mean) * (g - mean);
        var /= static_cast<double>(batches - 1);
        result.stderr_g2[i] = std::sqrt(var / static_cast<double>(batches));
    }
    return result;
}

std::vector<Peak> extract_peaks(const CorrelationResult& result) {
    const std::size_t n = result.g2.size();
    if (n < 3) return {};
    const std::vector<double> sm = smooth3(result.g2);
    const double smax = *std::max_element(sm.begin(), sm.end());
    const double smin = *std::min_element(sm.begin(), sm.end());
    const double threshold =
        std::max(2.0 * median(result.stderr_g2), 0.05 * (smax - smin));

    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(sm[i] > sm[i - 1] && sm[i] > sm[i + 1])) continue;
        // Topographic prominence: drop to the highest of the two valley
        // minima reached before a taller sample on either side.
        double left = sm[i];
        for (std::size_t k = i; k-- > 0;) {
            if (sm[k] > sm[i]) break;
            left = std::min(left, sm[k]);
        }
        double right = sm[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            if (sm[k] > sm[i]) break;
            right = std::min(right, sm[k]);
        }
        const double prominence = sm[i] - std::max(left, right);
        if (prominence < threshold) continue;
        const auto [xv, yv] =
            parabola_vertex(result.positions[i - 1], sm[i - 1], result.positions[i], sm[i],
                            result.positions[i + 1], sm[i + 1]);
        peaks.push_back({xv, yv, prominence});
    }
    return peaks;
}

double peak_spacing(const CorrelationResult& result, const std::vector<Peak>& peaks) {
    if (peaks.size() < 2 || result.g2.size() < 3) return 0.0;
    const std::vector<double> sm = smooth3(result.g2);
    const double baseline = *std::min_element(sm.begin(), sm.end());
    double top = 0.0;
    for (const Peak& p : peaks) top = std::max(top, p.height - baseline);
    std::vector<double> xs;
    for (const Peak& p : peaks)
        if (p.height - baseline >= 0.25 * top) xs.push_back(p.position);
    if (xs.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) acc += xs[i] - xs[i - 1];
    return acc / static_cast<double>(xs.size() - 1);
}

OracleReport compare_to_oracle(const CorrelationResult& result, const ApparatusConfig& cfg,
                               const CorrelationResult* paired) {
    const std::size_t n = result.positions.size();
    if (n == 0 || result.g2.size() != n || result.stderr_g2.size() != n)
        throw std::invalid_argument("compare_to_oracle: mismatched grids");

    OracleReport report;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x1, x2] = detector_coords(result.meta.spec, i);
        const int m = result.meta.point_detectors ? 1 : result.meta.aperture_points;
        const double expected = 1.0 + aperture_pair_factor(cfg, x1, x2, m);
        const double resid = result.g2[i] - expected;
        const double z = resid == 0.0 ? 0.0 : resid / result.stderr_g2[i];
        report.chi2_per_dof += z * z;
        report.max_sigma_deviation = std::max(report.max_sigma_deviation, std::abs(z));
    }
    report.chi2_per_dof /= static_cast<double>(n);

    if (paired != nullptr) {
        const CorrelationResult* fixed = nullptr;
        const CorrelationResult* counter = nullptr;
        for (const CorrelationResult* r : {&result, paired}) {
            if (r->meta.spec.mode == ScanMode::FixedD1) fixed = r;
            if (r->meta.spec.mode == ScanMode::CounterScan) counter = r;
        }
        if (fixed == nullptr || counter == nullptr)
            throw std::invalid_argument(
                "compare_to_oracle: spacing ratio needs one fixed-detector and one counter-scan "
                "result");
        const double sf = peak_spacing(*fixed, extract_peaks(*fixed));
        const double sc = peak_spacing(*counter, extract_peaks(*counter));
        if (sf <= 0.0 || sc <= 0.0)
            throw std::invalid_argument("compare_to_oracle: too few peaks for a spacing ratio");
        report.peak_spacing_ratio = sf / sc;
    }
    return report;
}

void write_result_csv(const CorrelationResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
    std::fputs("position_m,g2,stderr,singles_d1,singles_d2\n", f);
    for (std::size_t i = 0; i < result.positions.size(); ++i)
        std::fprintf(f, "%.9g,%.9g,%.9g,%.9g,%.9g\n", result.positions[i], result.g2[i],
                     result.stderr_g2[i], result.singles_d1[i], result.singles_d2[i]);
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

CorrelationResult read_result_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "position_m,g2,stderr,singles_d1,singles_d2")
        throw std::invalid_argument("not a scan CSV: " + path);
    CorrelationResult result;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x, g, e, s1, s2;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &x, &g, &e, &s1, &s2) != 5)
            throw std::invalid_argument("malformed scan CSV row: " + line);
        result.positions.push_back(x);
        result.g2.push_back(g);
        result.stderr_g2.push_back(e);
        result.singles_d1.push_back(s1);
        result.singles_d2.push_back(s2);
    }
    if (result.positions.empty()) throw std::invalid_argument("empty scan CSV: " + path);
    result.meta.spec.positions = result.positions;
    return result;
}

}  // namespace hbt
