#include <cstdio>
#include <exception>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "hbt/apparatus.hpp"
#include "hbt/runner.hpp"

namespace {

std::uint64_t random_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int run_command(const std::string& experiment, const std::string& config_path,
                const hbt::RunOptions& base) {
    hbt::RunOptions options = base;
    if (!config_path.empty()) options.config = hbt::load_config_file(config_path);
    hbt::validate(options.config);
    const hbt::RunManifest manifest =
        hbt::run_experiment(hbt::parse_experiment(experiment), options);
    std::printf("experiment: %s\n", manifest.experiment.c_str());
    std::printf("seed: %llu\n", static_cast<unsigned long long>(manifest.seed));
    for (const std::string& out : manifest.outputs) std::printf("wrote: %s\n", out.c_str());
    for (const auto& [k, v] : manifest.metrics) std::printf("%s = %s\n", k.c_str(), v.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo simulator for two-photon interference of thermal light"};
    app.require_subcommand(1);

    std::string experiment = "full-paper";
    std::string config_path;
    hbt::RunOptions options;
    options.seed = random_seed();  // overridden by --seed for reproducible runs

    auto* run = app.add_subcommand("run", "Run an experiment; writes CSVs and a manifest");
    run->add_option("-e,--experiment", experiment,
                    "One of singles-scan, g2-fixed, g2-counter, g2-coscan, "
                    "coincidence-histogram, full-paper")
        ->envname("THERMAL_HBT_EXPERIMENT");
    run->add_option("-c,--config", config_path, "Apparatus config file (key = value lines)")
        ->envname("THERMAL_HBT_CONFIG");
    run->add_option("-s,--seed", options.seed, "Random seed; omit for a fresh one")
        ->envname("THERMAL_HBT_SEED");
    run->add_option("-o,--out", options.out_dir, "Output directory")
        ->envname("THERMAL_HBT_OUT");
    run->add_option("-n,--ensemble", options.ensemble, "Field realizations per scan")
        ->envname("THERMAL_HBT_ENSEMBLE");
    run->add_option("-w,--workers", options.workers, "Worker threads; 0 = all cores")
        ->envname("THERMAL_HBT_WORKERS");
    run->add_option("-d,--duration", options.event_duration,
                    "Seconds of photon stream for the histogram experiments")
        ->envname("THERMAL_HBT_DURATION");

    std::string plot_csv;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "Turn a result CSV into a gnuplot script");
    plot->add_option("csv", plot_csv, "Scan or histogram CSV")->required();
    plot->add_option("-o,--out", plot_out, "Output directory; defaults next to the CSV")
        ->envname("THERMAL_HBT_OUT");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(experiment, config_path, options);
        if (plot->parsed()) {
            if (plot_out.empty()) {
                plot_out = std::filesystem::path(plot_csv).parent_path().string();
                if (plot_out.empty()) plot_out = ".";
            }
            hbt::emit_plot_data(plot_csv, plot_out);
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
