#include "hbt/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "hbt/analytic.hpp"
#include "hbt/events.hpp"
#include "hbt/rng.hpp"

namespace hbt {

namespace {

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Decorrelates the streams drawn by different experiments under one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0xE7037ED1A0B428DBull * (tag + 1));
    splitmix64(s);
    return splitmix64(s);
}

std::vector<double> uniform_grid(double halfwidth, double step) {
    const auto n = static_cast<long>(std::llround(halfwidth / step));
    std::vector<double> grid;
    grid.reserve(2 * n + 1);
    for (long i = -n; i <= n; ++i) grid.push_back(static_cast<double>(i) * step);
    return grid;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

struct ScanSummary {
    CorrelationResult result;
    std::vector<Peak> peaks;
    double spacing = 0.0;
    OracleReport report;
};

ScanSummary run_scan(const ApparatusConfig& cfg, ScanMode mode, const RunOptions& options,
                     std::uint64_t tag) {
    ScanSpec spec;
    spec.mode = mode;
    spec.ensemble_size = options.ensemble;
    const double step =
        mode == ScanMode::CounterScan ? options.scan_halfwidth / 40.0 : options.scan_halfwidth / 20.0;
    spec.positions = uniform_grid(options.scan_halfwidth, step);
    EstimatorOptions est;
    est.workers = options.workers;
    ScanSummary summary;
    summary.result = estimate_g2(cfg, spec, derive_seed(options.seed, tag), est);
    summary.peaks = extract_peaks(summary.result);
    summary.spacing = peak_spacing(summary.result, summary.peaks);
    summary.report = compare_to_oracle(summary.result, cfg);
    return summary;
}

void add_scan_metrics(RunManifest& manifest, const ScanSummary& s) {
    manifest.add_metric("ensemble", static_cast<double>(s.result.meta.spec.ensemble_size));
    const double g2_max = *std::max_element(s.result.g2.begin(), s.result.g2.end());
    const double g2_min = *std::min_element(s.result.g2.begin(), s.result.g2.end());
    manifest.add_metric("g2_max", g2_max);
    manifest.add_metric("visibility_excess", g2_max - 1.0);
    manifest.add_metric("visibility_contrast", (g2_max - g2_min) / (g2_max + g2_min));
    manifest.add_metric("peak_count", static_cast<double>(s.peaks.size()));
    std::string positions;
    for (const Peak& p : s.peaks) {
        if (!positions.empty()) positions += ';';
        positions += fmt_double(p.position);
    }
    manifest.add_metric("peak_positions_m", positions);
    if (s.spacing > 0.0) manifest.add_metric("peak_spacing_m", s.spacing);
    manifest.add_metric("chi2_per_dof", s.report.chi2_per_dof);
    manifest.add_metric("max_sigma_deviation", s.report.max_sigma_deviation);
}

RunManifest begin_manifest(Experiment experiment, const RunOptions& options) {
    RunManifest manifest;
    manifest.experiment = experiment_name(experiment);
    manifest.config_hash = config_hash(options.config);
    manifest.seed = options.seed;
    manifest.started_at = now_iso8601();
    return manifest;
}

void finish_manifest(RunManifest& manifest, const std::string& out_dir) {
    manifest.finished_at = now_iso8601();
    write_manifest(manifest, join_path(out_dir, manifest.experiment + "_manifest.txt"));
}

RunManifest run_singles_scan(const RunOptions& options) {
    RunManifest manifest = begin_manifest(Experiment::SinglesScan, options);
    const ScanSummary s = run_scan(options.config, ScanMode::FixedD1, options, 0);
    const std::string csv = join_path(options.out_dir, "singles.csv");
    write_result_csv(s.result, csv);
    manifest.outputs.push_back(csv);
    const double freq = options.config.groove_spacing / options.config.lambda_z();
    manifest.add_metric("ensemble", static_cast<double>(options.ensemble));
    manifest.add_metric("fringe_frequency_per_m", freq);
    manifest.add_metric("singles_d1_fringe_ratio",
                        fringe_frequency_ratio(s.result.positions, s.result.singles_d1, freq));
    manifest.add_metric("singles_d2_fringe_ratio",
                        fringe_frequency_ratio(s.result.positions, s.result.singles_d2, freq));
    finish_manifest(manifest, options.out_dir);
    return manifest;
}

RunManifest run_g2_scan(Experiment experiment, const RunOptions& options) {
    RunManifest manifest = begin_manifest(experiment, options);
    ScanMode mode = ScanMode::FixedD1;
    std::string csv_name = "g2_fixed.csv";
    std::uint64_t tag = 1;
    if (experiment == Experiment::G2Counter) {
        mode = ScanMode::CounterScan;
        csv_name = "g2_counter.csv";
        tag = 2;
    } else if (experiment == Experiment::G2CoScan) {
        mode = ScanMode::CoScan;
        csv_name = "g2_coscan.csv";
        tag = 3;
    }
    const ScanSummary s = run_scan(options.config, mode, options, tag);
    const std::string csv = join_path(options.out_dir, csv_name);
    write_result_csv(s.result, csv);
    manifest.outputs.push_back(csv);
    add_scan_metrics(manifest, s);
    if (experiment == Experiment::G2CoScan) {
        double mean = 0.0;
        for (const double g : s.result.g2) mean += g;
        mean /= static_cast<double>(s.result.g2.size());
        std::size_t inside = 0;
        for (std::size_t i = 0; i < s.result.g2.size(); ++i)
            if (std::abs(s.result.g2[i] - mean) <= 3.0 * s.result.stderr_g2[i]) ++inside;
        manifest.add_metric("coscan_mean", mean);
        manifest.add_metric("coscan_flat_fraction",
                            static_cast<double>(inside) / static_cast<double>(s.result.g2.size()));
    }
    finish_manifest(manifest, options.out_dir);
    return manifest;
}

RunManifest run_histogram(const RunOptions& options) {
    RunManifest manifest = begin_manifest(Experiment::CoincidenceHistogram, options);
    const ApparatusConfig& cfg = options.config;
    EventRunOptions ev;
    ev.duration = options.event_duration;
    ev.workers = options.workers;
    ev.spatial_factor = aperture_pair_factor(cfg, 0.0, 0.0, 8);
    const auto [d1, d2] = simulate_event_pair(cfg, ev, derive_seed(options.seed, 4));
    const CoincidenceHistogram hist = tac_mca(d1, d2);
    const std::string csv = join_path(options.out_dir, "histogram.csv");
    write_histogram_csv(hist, csv);
    manifest.outputs.push_back(csv);
    const double g2w = g2_windowed(hist, cfg);
    manifest.add_metric("duration_s", ev.duration);
    manifest.add_metric("counts_d1", static_cast<double>(d1.timestamps.size()));
    manifest.add_metric("counts_d2", static_cast<double>(d2.timestamps.size()));
    manifest.add_metric("spatial_factor", ev.spatial_factor);
    manifest.add_metric("beta_temporal", beta_temporal(cfg));
    manifest.add_metric("g2_windowed", g2w);
    manifest.add_metric("visibility_excess", g2w - 1.0);
    manifest.add_metric("visibility_contrast", (g2w - 1.0) / (g2w + 1.0));
    finish_manifest(manifest, options.out_dir);
    return manifest;
}

RunManifest run_full_paper(const RunOptions& options) {
    RunManifest manifest = begin_manifest(Experiment::FullPaper, options);
    const RunManifest singles = run_singles_scan(options);
    const RunManifest fixed = run_g2_scan(Experiment::G2Fixed, options);
    const RunManifest counter = run_g2_scan(Experiment::G2Counter, options);
    const RunManifest coscan = run_g2_scan(Experiment::G2CoScan, options);
    const RunManifest hist = run_histogram(options);

    for (const RunManifest* sub : {&singles, &fixed, &counter, &coscan, &hist})
        for (const std::string& out : sub->outputs) manifest.outputs.push_back(out);

    auto metric = [](const RunManifest& m, const std::string& key) -> std::string {
        for (const auto& [k, v] : m.metrics)
            if (k == key) return v;
        return "";
    };
    auto metric_num = [&](const RunManifest& m, const std::string& key) {
        const std::string v = metric(m, key);
        return v.empty() ? 0.0 : std::stod(v);
    };
    const double spacing_fixed = metric_num(fixed, "peak_spacing_m");
    const double spacing_counter = metric_num(counter, "peak_spacing_m");
    manifest.add_metric("peak_spacing_fixed_m", spacing_fixed);
    manifest.add_metric("peak_spacing_counter_m", spacing_counter);
    if (spacing_counter > 0.0)
        manifest.add_metric("peak_spacing_ratio", spacing_fixed / spacing_counter);
    manifest.add_metric("counter_chi2_per_dof", metric(counter, "chi2_per_dof"));
    manifest.add_metric("counter_visibility_excess", metric(counter, "visibility_excess"));
    manifest.add_metric("counter_visibility_contrast", metric(counter, "visibility_contrast"));
    manifest.add_metric("coscan_flat_fraction", metric(coscan, "coscan_flat_fraction"));
    manifest.add_metric("singles_d1_fringe_ratio", metric(singles, "singles_d1_fringe_ratio"));
    manifest.add_metric("singles_d2_fringe_ratio", metric(singles, "singles_d2_fringe_ratio"));
    manifest.add_metric("event_g2_windowed", metric(hist, "g2_windowed"));
    manifest.add_metric("event_visibility_excess", metric(hist, "visibility_excess"));
    manifest.add_metric("event_visibility_contrast", metric(hist, "visibility_contrast"));

    const std::string summary_path = join_path(options.out_dir, "summary.txt");
    std::FILE* f = std::fopen(summary_path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + summary_path);
    for (const auto& [k, v] : manifest.metrics) std::fprintf(f, "%s = %s\n", k.c_str(), v.c_str());
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + summary_path);
    manifest.outputs.push_back(summary_path);

    finish_manifest(manifest, options.out_dir);
    return manifest;
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
    if (name == "singles-scan") return Experiment::SinglesScan;
    if (name == "g2-fixed") return Experiment::G2Fixed;
    if (name == "g2-counter") return Experiment::G2Counter;
    if (name == "g2-coscan") return Experiment::G2CoScan;
    if (name == "coincidence-histogram") return Experiment::CoincidenceHistogram;
    if (name == "full-paper") return Experiment::FullPaper;
    throw std::invalid_argument("unknown experiment: '" + name + "'");
}

std::string experiment_name(Experiment experiment) {
    switch (experiment) {
        case Experiment::SinglesScan: return "singles-scan";
        case Experiment::G2Fixed: return "g2-fixed";
        case Experiment::G2Counter: return "g2-counter";
        case Experiment::G2CoScan: return "g2-coscan";
        case Experiment::CoincidenceHistogram: return "coincidence-histogram";
        case Experiment::FullPaper: return "full-paper";
    }
    throw std::logic_error("experiment_name: unhandled experiment");
}

void RunManifest::add_metric(const std::string& key, double value) {
    metrics.emplace_back(key, fmt_double(value));
}

void RunManifest::add_metric(const std::string& key, const std::string& value) {
    metrics.emplace_back(key, value);
}

RunManifest run_experiment(Experiment experiment, const RunOptions& options) {
    validate(options.config);
    std::filesystem::create_directories(options.out_dir);
    switch (experiment) {
        case Experiment::SinglesScan: return run_singles_scan(options);
        case Experiment::G2Fixed:
        case Experiment::G2Counter:
        case Experiment::G2CoScan: return run_g2_scan(experiment, options);
        case Experiment::CoincidenceHistogram: return run_histogram(options);
        case Experiment::FullPaper: return run_full_paper(options);
    }
    throw std::logic_error("run_experiment: unhandled experiment");
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "experiment = %s\n", manifest.experiment.c_str());
    std::fprintf(f, "config_hash = %016llx\n",
                 static_cast<unsigned long long>(manifest.config_hash));
    std::fprintf(f, "seed = %llu\n", static_cast<unsigned long long>(manifest.seed));
    std::fprintf(f, "started_at = %s\n", manifest.started_at.c_str());
    std::fprintf(f, "finished_at = %s\n", manifest.finished_at.c_str());
    for (const std::string& out : manifest.outputs)
        std::fprintf(f, "output = %s\n", out.c_str());
    for (const auto& [k, v] : manifest.metrics)
        std::fprintf(f, "metric.%s = %s\n", k.c_str(), v.c_str());
    if (std::fclose(f) != 0) throw std::runtime_error("write failed: " + path);
}

void emit_plot_data(const std::string& csv_path, const std::string& out_dir) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open: " + csv_path);
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("empty CSV: " + csv_path);
    const bool scan = header == "position_m,g2,stderr,singles_d1,singles_d2";
    const bool histogram = header == "tau_s,count";
    if (!scan && !histogram)
        throw std::invalid_argument("unrecognized CSV header in " + csv_path + ": " + header);

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t begin = 0;
        while (begin <= line.size()) {
            const std::size_t end = std::min(line.find(',', begin), line.size());
            std::size_t used = 0;
            const std::string cell = line.substr(begin, end - begin);
            try {
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw std::invalid_argument("malformed CSV cell '" + cell + "' in " + csv_path);
            }
            if (used != cell.size())
                throw std::invalid_argument("malformed CSV cell '" + cell + "' in " + csv_path);
            begin = end + 1;
        }
        if (row.size() != static_cast<std::size_t>(scan ? 5 : 2))
            throw std::invalid_argument("wrong column count in " + csv_path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("CSV has no data rows: " + csv_path);

    std::filesystem::create_directories(out_dir);
    const std::string stem = std::filesystem::path(csv_path).stem().string();
    const std::string dat_path = join_path(out_dir, stem + ".dat");
    const std::string gp_path = join_path(out_dir, stem + ".gp");

    std::FILE* dat = std::fopen(dat_path.c_str(), "w");
    if (dat == nullptr) throw std::runtime_error("cannot open for writing: " + dat_path);
    std::fputs(scan ? "# position_m g2 stderr singles_d1 singles_d2\n" : "# tau_s count\n", dat);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(dat, "%s%.9g", i == 0 ? "" : " ", row[i]);
        std::fputc('\n', dat);
    }
    if (std::fclose(dat) != 0) throw std::runtime_error("write failed: " + dat_path);

    std::FILE* gp = std::fopen(gp_path.c_str(), "w");
    if (gp == nullptr) throw std::runtime_error("cannot open for writing: " + gp_path);
    std::fprintf(gp, "set terminal pngcairo size 960,640\n");
    std::fprintf(gp, "set output '%s.png'\n", stem.c_str());
    std::fprintf(gp, "set grid\n");
    if (scan) {
        std::fprintf(gp, "set xlabel 'detector position (m)'\n");
        const bool counter = stem.find("counter") != std::string::npos;
        if (counter)
            std::fprintf(gp,
                         "# counter-propagating scan: the fringe period on this axis is half\n"
                         "# the fixed-detector period\n");
        std::fprintf(gp, "set ylabel '%s'\n", stem.find("singles") != std::string::npos
                                                  ? "mean singles intensity"
                                                  : "g2");
        if (stem.find("singles") != std::string::npos) {
            std::fprintf(gp,
                         "plot '%s' using 1:4 with linespoints title 'detector 1', \\\n"
                         "     '%s' using 1:5 with linespoints title 'detector 2'\n",
                         dat_path.c_str(), dat_path.c_str());
        } else {
            std::fprintf(gp, "plot '%s' using 1:2:3 with yerrorlines title '%s'\n",
                         dat_path.c_str(), stem.c_str());
        }
    } else {
        std::fprintf(gp, "set xlabel 'tau (s)'\n");
        std::fprintf(gp, "set ylabel 'coincidence counts'\n");
        std::fprintf(gp, "set style fill solid 0.4\n");
        std::fprintf(gp, "plot '%s' using 1:2 with boxes title '%s'\n", dat_path.c_str(),
                     stem.c_str());
    }
    if (std::fclose(gp) != 0) throw std::runtime_error("write failed: " + gp_path);
}

double fringe_frequency_ratio(const std::vector<double>& x, const std::vector<double>& y,
                              double freq) {
    if (x.size() != y.size() || x.size() < 4)
        throw std::invalid_argument("fringe_frequency_ratio: need matched arrays of 4+ points");
    const std::size_t n = x.size();
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    auto amplitude = [&](double f) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = -2.0 * M_PI * f * x[i];
            acc += (y[i] - mean) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        return std::abs(acc) / static_cast<double>(n);
    };
    // Probe comb away from zero and from the fringe frequency itself; the
    // median forms the broadband noise floor.
    std::vector<double> floor_amps;
    for (int k = 0; k < 17; ++k) {
        const double f = freq * (0.15 + 0.1 * k);
        if (std::abs(f - freq) < 0.12 * freq) continue;
        floor_amps.push_back(amplitude(f));
    }
    std::sort(floor_amps.begin(), floor_amps.end());
    const double floor = floor_amps[floor_amps.size() / 2];
    if (floor <= 0.0) return 0.0;
    return amplitude(freq) / floor;
}

}  // namespace hbt
