#include "flowest/core.hpp"
#include "flowest/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Exit categories: 0 ok, 2 validation, 3 compute, 4 I/O.
constexpr int kExitValidation = 2;
constexpr int kExitCompute = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowest: sparse-sensor flow state estimation pipeline"};
    app.require_subcommand(1);

    flowest::PipelineOptions opts;
    app.add_option("--config", opts.config_path, "pipeline configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--output-dir", opts.output_dir_override,
                   "override the config's output directory");
    app.add_option("--seed", opts.seed_override, "override the synthetic generator seed");

    auto* synth = app.add_subcommand("synth", "generate a synthetic ground-truth dataset");
    auto* pod = app.add_subcommand("pod", "compute the POD basis from snapshots");
    auto* calibrate = app.add_subcommand("calibrate", "calibrate the reduced model");
    auto* estimate = app.add_subcommand("estimate", "run the configured estimators");
    auto* report = app.add_subcommand("report", "render error report tables");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) flowest::cmd_synth(opts);
        if (pod->parsed()) flowest::cmd_pod(opts);
        if (calibrate->parsed()) flowest::cmd_calibrate(opts);
        if (estimate->parsed()) flowest::cmd_estimate(opts);
        if (report->parsed()) flowest::cmd_report(opts);
    } catch (const flowest::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCompute;
    }
    return 0;
}
