#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hbt/apparatus.hpp"
#include "hbt/correlation.hpp"

namespace hbt {

enum class Experiment {
    SinglesScan,
    G2Fixed,
    G2Counter,
    G2CoScan,
    CoincidenceHistogram,
    FullPaper,
};

/// Throws std::invalid_argument for unknown names.
Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment experiment);

struct RunOptions {
    ApparatusConfig config;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::size_t ensemble = 20000;
    int workers = 0;
    double event_duration = 2.5;  // seconds of photon stream
    double scan_halfwidth = 10e-3;
};

/// Flat record of one run: inputs, outputs, and independently recomputable
/// summary metrics, in a fixed key order.
struct RunManifest {
    std::string experiment;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;  // ISO 8601 UTC
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> metrics;

    void add_metric(const std::string& key, double value);
    void add_metric(const std::string& key, const std::string& value);
};

/// Runs one experiment, writes its CSVs and "<experiment>_manifest.txt" into
/// out_dir, and returns the manifest. FullPaper runs the five basic
/// experiments and additionally writes summary.txt with the combined metrics.
RunManifest run_experiment(Experiment experiment, const RunOptions& options);

void write_manifest(const RunManifest& manifest, const std::string& path);

/// |DFT amplitude of y at spatial frequency freq| over the median amplitude
/// across a comb of probe frequencies: a first-order fringe detector. Flat
/// data scores near 1, a real fringe at freq scores far above it.
double fringe_frequency_ratio(const std::vector<double>& x, const std::vector<double>& y,
                              double freq);

/// Turns a result CSV (scan or histogram, recognized by header) into a
/// gnuplot script plus a whitespace table next to it. Malformed input throws
/// std::invalid_argument.
void emit_plot_data(const std::string& csv_path, const std::string& out_dir);

}  // namespace hbt
