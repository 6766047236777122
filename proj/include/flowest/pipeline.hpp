#pragma once

#include <string>

namespace flowest {

/// Config-driven pipeline stages behind the CLI verbs. Stages communicate
/// only through files under the config's output directory:
///   synth      -> snapshots.* , truth_coeffs.txt, truth_rom.*, truth_basis.*
///   pod        -> basis.* (+ .eig sidecar), pod_summary.txt
///   calibrate  -> rom.*, calibration_report.txt
///   estimate   -> measurements.txt, estimate_<method>.txt, telemetry_<m>.txt,
///                 cr_sweep.txt (when configured)
///   report     -> report_coefficients.txt, report_components_<mode>.txt
/// Every output carries a provenance header with input hashes and the
/// parameters that produced it; reruns on identical inputs are byte-identical.
struct PipelineOptions {
    std::string config_path;
    std::string output_dir_override;  // empty: use the config's output_dir
    long long seed_override = -1;     // negative: use the config's seed
};

void cmd_synth(const PipelineOptions& opts);
void cmd_pod(const PipelineOptions& opts);
void cmd_calibrate(const PipelineOptions& opts);
void cmd_estimate(const PipelineOptions& opts);
void cmd_report(const PipelineOptions& opts);

}  // namespace flowest
