#include "flowest/pipeline.hpp"

#include "flowest/calibration.hpp"
#include "flowest/estimators.hpp"
#include "flowest/io.hpp"
#include "flowest/metrics.hpp"
#include "flowest/observer.hpp"
#include "flowest/pod.hpp"
#include "flowest/rom.hpp"
#include "flowest/sensors.hpp"
#include "flowest/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace flowest {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_config(const PipelineOptions& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw IoError("cannot open config '" + opts.config_path + "'");
    json cfg;
    try {
        cfg = json::parse(in, nullptr, true, true);  // allow comments
    } catch (const json::exception& e) {
        throw std::invalid_argument("config '" + opts.config_path + "': " + e.what());
    }
    if (!opts.output_dir_override.empty()) cfg["output_dir"] = opts.output_dir_override;
    if (opts.seed_override >= 0) cfg["synth"]["seed"] = opts.seed_override;
    return cfg;
}

[[noreturn]] void bad_key(const std::string& path, const std::string& why) {
    throw std::invalid_argument("config key '" + path + "': " + why);
}

template <typename T>
T require(const json& cfg, const std::string& path) {
    const json* node = &cfg;
    std::string walked;
    std::istringstream keys(path);
    std::string key;
    while (std::getline(keys, key, '.')) {
        walked += (walked.empty() ? "" : ".") + key;
        if (!node->is_object() || !node->contains(key)) bad_key(walked, "missing");
        node = &(*node)[key];
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        bad_key(path, "wrong type");
    }
}

template <typename T>
T value_or(const json& cfg, const std::string& path, const T& fallback) {
    const json* node = &cfg;
    std::istringstream keys(path);
    std::string key;
    while (std::getline(keys, key, '.')) {
        if (!node->is_object() || !node->contains(key)) return fallback;
        node = &(*node)[key];
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        bad_key(path, "wrong type");
    }
}

std::string out_dir(const json& cfg) {
    const auto dir = value_or<std::string>(cfg, "output_dir", "out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    return dir;
}

FileFormat config_format(const json& cfg) {
    return format_from_name(value_or<std::string>(cfg, "format", "text-table"));
}

std::string ext_of(FileFormat f) { return f == FileFormat::TextTable ? ".txt" : ".bin"; }

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw IoError("missing upstream artifact '" + path + "'; run `flowest " + producer +
                      "` first");
}

std::vector<std::string> provenance(const std::string& cmd, const json& cfg,
                                    const std::vector<std::string>& inputs,
                                    const std::string& params) {
    std::vector<std::string> lines;
    lines.push_back("provenance: cmd=" + cmd);
    for (const auto& in : inputs) lines.push_back("input: " + in + " fnv1a=" + file_hash_hex(in));
    if (!params.empty()) lines.push_back("params: " + params);
    (void)cfg;
    return lines;
}

GridPtr grid_from_config(const json& cfg) {
    const auto dims = require<std::vector<int>>(cfg, "synth.grid_dims");
    const auto extent = require<std::vector<std::vector<double>>>(cfg, "synth.grid_extent");
    if (dims.size() != extent.size()) bad_key("synth.grid_extent", "one [lo,hi] pair per axis");
    std::vector<std::pair<double, double>> ext;
    for (std::size_t a = 0; a < extent.size(); ++a) {
        if (extent[a].size() != 2 || !(extent[a][1] > extent[a][0]))
            bad_key("synth.grid_extent", "axis " + std::to_string(a) + " needs lo < hi");
        ext.emplace_back(extent[a][0], extent[a][1]);
    }
    for (int d : dims)
        if (d < 3) bad_key("synth.grid_dims", "each axis needs >= 3 points");
    return make_uniform_grid(dims, ext);
}

std::vector<SensorSpec> sensors_from_config(const json& cfg) {
    if (!cfg.contains("sensors") || !cfg["sensors"].is_array() || cfg["sensors"].empty())
        bad_key("sensors", "missing or empty sensor list");
    std::vector<SensorSpec> specs;
    int idx = 0;
    for (const auto& s : cfg["sensors"]) {
        const std::string where = "sensors[" + std::to_string(idx++) + "]";
        SensorSpec spec;
        spec.kind = sensor_kind_from_name(value_or<std::string>(s, "kind", "point-velocity"));
        spec.location = value_or<std::vector<double>>(s, "location", {});
        spec.component = value_or<int>(s, "component", 0);
        spec.weight = value_or<double>(s, "weight", 1.0);
        if (spec.kind == SensorKind::WallShear) {
            spec.wall_axis = value_or<int>(s, "wall_axis", -1);
            const std::string side = value_or<std::string>(s, "wall_side", "");
            if (side == "min")
                spec.wall_side = WallSide::Min;
            else if (side == "max")
                spec.wall_side = WallSide::Max;
            else
                bad_key(where + ".wall_side", "must be 'min' or 'max'");
        }
        if (spec.kind == SensorKind::BoxAverage) {
            spec.box_lo = value_or<std::vector<double>>(s, "box_lo", {});
            spec.box_hi = value_or<std::vector<double>>(s, "box_hi", {});
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

struct EstimationSetup {
    SnapshotSet snapshots;
    PodBasis basis;
    SensorSuite suite;
    CoefficientTrajectory training_reference;  // projections over the calibration window
    MeasurementRecord training_record;
    MeasurementRecord estimation_record;
    VectorXd estimation_times;
};

std::pair<double, double> window_from(const json& cfg, const std::string& key) {
    const auto w = require<std::vector<double>>(cfg, key);
    if (w.size() != 2 || !(w[1] > w[0])) bad_key(key, "expected [t0, t1] with t0 < t1");
    return {w[0], w[1]};
}

EstimationSetup load_estimation_setup(const json& cfg, const std::string& dir,
                                      FileFormat format) {
    const std::string snap_path = dir + "/snapshots" + ext_of(format);
    const std::string basis_path = dir + "/basis" + ext_of(format);
    require_artifact(snap_path, "synth");
    require_artifact(basis_path, "pod");

    EstimationSetup setup{load_snapshots(snap_path), load_basis(basis_path), {}, {}, {}, {}, {}};
    setup.suite = build_suite(sensors_from_config(cfg), setup.basis);

    const auto [c0, c1] = window_from(cfg, "calibration.window");
    setup.training_reference = project_snapshots(setup.basis, setup.snapshots).window(c0, c1);
    if (setup.training_reference.n_samples() < 2)
        bad_key("calibration.window", "contains fewer than 2 snapshots");
    setup.training_record =
        sample_measurements(setup.suite, setup.snapshots, setup.training_reference.times);

    const auto [e0, e1] = window_from(cfg, "estimation.window");
    const int n_est = value_or<int>(cfg, "estimation.n_samples", 128);
    if (n_est < 2) bad_key("estimation.n_samples", "must be >= 2");
    setup.estimation_times.resize(n_est);
    for (int i = 0; i < n_est; ++i)
        setup.estimation_times[i] = e0 + (e1 - e0) * static_cast<double>(i) / (n_est - 1);
    setup.estimation_record =
        sample_measurements(setup.suite, setup.snapshots, setup.estimation_times);
    return setup;
}

}  // namespace

void cmd_synth(const PipelineOptions& opts) {
    const json cfg = load_config(opts);
    const std::string dir = out_dir(cfg);
    const FileFormat format = config_format(cfg);

    const GridPtr grid = grid_from_config(cfg);
    const int n_modes = require<int>(cfg, "synth.n_modes");
    if (n_modes < 2) bad_key("synth.n_modes", "must be >= 2");
    const auto dynamics = dynamics_from_name(require<std::string>(cfg, "synth.dynamics"));
    const auto [t0, t1] = window_from(cfg, "synth.span");
    const double dt = require<double>(cfg, "synth.dt");
    if (!(dt > 0) || dt > (t1 - t0)) bad_key("synth.dt", "must be positive and below the span");
    const int n_snapshots = require<int>(cfg, "synth.n_snapshots");
    if (n_snapshots < 2) bad_key("synth.n_snapshots", "must be >= 2");
    const auto seed = value_or<std::uint64_t>(cfg, "synth.seed", 0);

    const SyntheticScenario scenario =
        make_scenario(grid, n_modes, dynamics, t0, t1, dt, n_snapshots, seed);
    export_scenario(scenario, dir, format);
}

void cmd_pod(const PipelineOptions& opts) {
    const json cfg = load_config(opts);
    const std::string dir = out_dir(cfg);
    const FileFormat format = config_format(cfg);
    const std::string snap_path = dir + "/snapshots" + ext_of(format);
    require_artifact(snap_path, "synth");

    const int n_retained = require<int>(cfg, "pod.n_retained");
    if (n_retained < 1) bad_key("pod.n_retained", "must be >= 1");

    const SnapshotSet set = load_snapshots(snap_path);
    const PodBasis basis = compute_pod(set, n_retained);
    save_basis(basis, dir + "/basis" + ext_of(format), format,
               provenance("pod", cfg, {snap_path},
                          "n_retained=" + std::to_string(n_retained)));

    std::ostringstream os;
    os << "# pod summary\nmode eigenvalue\n";
    os.precision(12);
    for (int k = 0; k < basis.n_retained(); ++k)
        os << (k + 1) << " " << basis.eigenvalues[k] << "\n";
    write_text_file(dir + "/pod_summary.txt", os.str());
}

void cmd_calibrate(const PipelineOptions& opts) {
    const json cfg = load_config(opts);
    const std::string dir = out_dir(cfg);
    const FileFormat format = config_format(cfg);
    const std::string snap_path = dir + "/snapshots" + ext_of(format);
    const std::string basis_path = dir + "/basis" + ext_of(format);
    require_artifact(snap_path, "synth");
    require_artifact(basis_path, "pod");

    const auto [w0, w1] = window_from(cfg, "calibration.window");
    const int n_nodes = value_or<int>(cfg, "calibration.n_nodes", 81);
    if (n_nodes < 2) bad_key("calibration.n_nodes", "must be >= 2");
    const std::string b_source = value_or<std::string>(cfg, "calibration.b_source", "geometric");

    const SnapshotSet set = load_snapshots(snap_path);
    const PodBasis basis = load_basis(basis_path);

    std::vector<std::string> inputs{snap_path, basis_path};
    Tensor3 quadratic;
    if (b_source == "geometric") {
        quadratic = assemble_quadratic_tensor(basis);
    } else if (b_source == "sidecar") {
        const std::string rom_path = dir + "/truth_rom" + ext_of(format);
        const std::string tbasis_path = dir + "/truth_basis" + ext_of(format);
        require_artifact(rom_path, "synth");
        require_artifact(tbasis_path, "synth");
        const RomCoefficients truth = from_record(load_rom_record(rom_path));
        const PodBasis true_basis = load_basis(tbasis_path);
        if (truth.n_modes() != basis.n_retained())
            bad_key("calibration.b_source",
                    "sidecar rotation needs pod.n_retained == synth.n_modes (" +
                        std::to_string(basis.n_retained()) + " vs " +
                        std::to_string(truth.n_modes()) + "); use \"geometric\"");
        // Orthogonal change of basis from the generator's modes to the
        // computed POD modes.
        MatrixXd m(basis.n_retained(), basis.n_retained());
        for (int j = 0; j < basis.n_retained(); ++j)
            for (int i = 0; i < basis.n_retained(); ++i)
                m(j, i) = inner_product(true_basis.modes[i], basis.modes[j]);
        quadratic = transform(truth, m).quadratic;
        inputs.push_back(rom_path);
        inputs.push_back(tbasis_path);
    } else {
        bad_key("calibration.b_source", "must be 'geometric' or 'sidecar'");
    }

    const CoefficientTrajectory ref = project_snapshots(basis, set).window(w0, w1);
    if (ref.n_samples() < n_nodes / 4 || ref.n_samples() < 2)
        bad_key("calibration.window", "too few snapshots inside the window");
    const CollocationOperator op =
        build_collocation(ref.times[0], ref.times[ref.times.size() - 1], n_nodes);
    const MatrixXd at_nodes = resample_columns(ref.times, ref.values, op.nodes);
    const CalibrationResult result = calibrate(quadratic, at_nodes, op);

    save_rom_record(to_record(result.rom), dir + "/rom" + ext_of(format), format,
                    provenance("calibrate", cfg, inputs,
                               "window=[" + std::to_string(w0) + "," + std::to_string(w1) +
                                   "] n_nodes=" + std::to_string(n_nodes) +
                                   " b_source=" + b_source));
    write_text_file(dir + "/calibration_report.txt", calibration_report(result));
}

namespace {

struct EstimatorRun {
    std::string method;
    CoefficientTrajectory trajectory;
    std::string telemetry;
};

}  // namespace

void cmd_estimate(const PipelineOptions& opts) {
    const json cfg = load_config(opts);
    const std::string dir = out_dir(cfg);
    const FileFormat format = config_format(cfg);
    const std::string rom_path = dir + "/rom" + ext_of(format);

    EstimationSetup setup = load_estimation_setup(cfg, dir, format);

    save_time_table(setup.estimation_record.times, setup.estimation_record.values,
                    dir + "/measurements.txt",
                    provenance("estimate", cfg, {dir + "/snapshots" + ext_of(format)},
                               "rows=times cols=sensors"));

    if (!cfg.contains("estimators") || !cfg["estimators"].is_array() ||
        cfg["estimators"].empty())
        bad_key("estimators", "missing or empty estimator list");

    // Shared fits, made lazily.
    std::optional<LseModel> lse_model;
    auto lse = [&]() -> const LseModel& {
        if (!lse_model)
            lse_model = lse_fit(setup.training_reference, setup.training_record,
                                setup.suite.ref_offset);
        return *lse_model;
    };
    std::optional<RomCoefficients> rom;
    auto model = [&]() -> const RomCoefficients& {
        if (!rom) {
            require_artifact(rom_path, "calibrate");
            rom = from_record(load_rom_record(rom_path));
            if (rom->n_modes() != setup.basis.n_retained())
                throw std::runtime_error("estimate: rom mode count (" +
                                         std::to_string(rom->n_modes()) +
                                         ") does not match the basis (" +
                                         std::to_string(setup.basis.n_retained()) + ")");
        }
        return *rom;
    };

    std::vector<EstimatorRun> runs;
    int idx = 0;
    for (const auto& est : cfg["estimators"]) {
        const std::string where = "estimators[" + std::to_string(idx++) + "]";
        const std::string method = value_or<std::string>(est, "method", "");
        EstimatorRun run;
        run.method = method;
        if (method == "lsq") {
            run.trajectory = lsq_estimate(setup.suite, setup.estimation_record);
        } else if (method == "lse") {
            run.trajectory = lse_estimate(lse(), setup.estimation_record);
        } else if (method == "qse") {
            const QseModel qse = qse_fit(setup.training_reference, setup.training_record,
                                         setup.suite.ref_offset);
            run.trajectory = qse_estimate(qse, setup.estimation_record);
        } else if (method == "slse") {
            const SlseModel slse = slse_fit(setup.training_reference, setup.training_record,
                                            setup.suite.ref_offset);
            // SLSE applies per-bin transfers, so the estimation record must
            // tick at the training rate.
            const double dt = setup.training_record.times[1] - setup.training_record.times[0];
            const double e0 = setup.estimation_times[0];
            const double e1 = setup.estimation_times[setup.estimation_times.size() - 1];
            const int n = static_cast<int>(std::floor((e1 - e0) / dt + 1e-9)) + 1;
            if (n < slse.training_length)
                bad_key("estimation.window", "too short for the slse window length");
            VectorXd times(n);
            for (int i = 0; i < n; ++i) times[i] = e0 + dt * i;
            const MeasurementRecord rec =
                sample_measurements(setup.suite, setup.snapshots, times);
            run.trajectory = slse_estimate(slse, rec);
        } else if (method == "klsq" || method == "klse") {
            const ObserverVariant variant = observer_variant_from_name(method);
            const double c_r = value_or<double>(est, "c_r", default_c_r(variant));
            if (!(c_r > 0)) bad_key(where + ".c_r", "must be positive");
            const int window =
                value_or<int>(est, "window", setup.estimation_record.n_samples());
            const int n_nodes = value_or<int>(est, "n_nodes", 0);
            const int stride = value_or<int>(est, "stride", window);
            if (window < 2) bad_key(where + ".window", "must be >= 2");
            if (stride < 1) bad_key(where + ".stride", "must be >= 1");
            const LseModel* lse_ptr = (variant == ObserverVariant::KLse) ? &lse() : nullptr;

            if (stride == window) {
                const ObserverSolution sol =
                    estimate_chunked(model(), setup.suite, setup.estimation_record, window,
                                     variant, lse_ptr, c_r, n_nodes);
                run.trajectory = sol.trajectory;
                std::ostringstream tele;
                tele << "# observer telemetry (" << method << "), chunked windows\n";
                tele << "window_iterations";
                for (double g : sol.report.grad_norms) tele << " " << g;
                tele << "\n# iterations total: " << sol.report.iterations
                     << " converged: " << (sol.report.converged ? "yes" : "no") << "\n";
                run.telemetry = tele.str();
            } else {
                const SlidingWindowResult result = sliding_window_estimate(
                    model(), setup.suite, setup.estimation_record, window, stride, variant,
                    lse_ptr, c_r, n_nodes, true);
                run.trajectory = result.estimates;
                std::ostringstream tele;
                tele << "# observer telemetry (" << method << "), sliding windows\n";
                tele << "window iterations converged final_objective\n";
                for (std::size_t w = 0; w < result.reports.size(); ++w) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf, "%zu %d %s %.6e\n", w + 1,
                                  result.reports[w].iterations,
                                  result.reports[w].converged ? "yes" : "no",
                                  result.reports[w].objectives.back());
                    tele << buf;
                }
                run.telemetry = tele.str();
            }
        } else {
            bad_key(where + ".method",
                    "unknown method '" + method +
                        "' (expected lsq, lse, qse, slse, klsq or klse)");
        }
        runs.push_back(std::move(run));
    }

    for (const auto& run : runs) {
        auto comments = provenance("estimate", cfg, {dir + "/snapshots" + ext_of(format)},
                                   "method=" + run.method);
        for (const auto& w : run.trajectory.warnings) comments.push_back("warning: " + w);
        save_time_table(run.trajectory.times, run.trajectory.values,
                        dir + "/estimate_" + run.method + ".txt", comments);
        if (!run.telemetry.empty())
            write_text_file(dir + "/telemetry_" + run.method + ".txt", run.telemetry);
    }

    // Residual-weight sweep over the first configured K-variant window.
    const auto sweep = value_or<std::vector<double>>(cfg, "metrics.cr_sweep", {});
    if (!sweep.empty()) {
        for (double c : sweep)
            if (!(c > 0)) bad_key("metrics.cr_sweep", "weights must be positive");
        const ObserverVariant variant = ObserverVariant::KLse;
        const LseModel& lm = lse();
        const int window = std::min(setup.estimation_record.n_samples(), 64);
        const MeasurementRecord rec = setup.estimation_record.window(0, window);
        const ObserverProblem base =
            assemble_problem(model(), setup.suite, rec, variant, &lm, -1.0, 0);
        const CoefficientTrajectory ref =
            project_snapshots(setup.basis, setup.snapshots)
                .window(rec.times[0], rec.times[rec.times.size() - 1]);
        const auto rows = c_r_sweep(base, sweep, ref.n_samples() >= 2 ? &ref : nullptr);
        write_text_file(dir + "/cr_sweep.txt", render_c_r_sweep(rows));
    }
}

void cmd_report(const PipelineOptions& opts) {
    const json cfg = load_config(opts);
    const std::string dir = out_dir(cfg);
    const FileFormat format = config_format(cfg);

    const std::string snap_path = dir + "/snapshots" + ext_of(format);
    const std::string basis_path = dir + "/basis" + ext_of(format);
    require_artifact(snap_path, "synth");
    require_artifact(basis_path, "pod");

    const SnapshotSet set = load_snapshots(snap_path);
    const PodBasis basis = load_basis(basis_path);
    const auto [e0, e1] = window_from(cfg, "estimation.window");

    const CoefficientTrajectory reference = project_snapshots(basis, set).window(e0, e1);
    if (reference.n_samples() < 2) bad_key("estimation.window", "covers fewer than 2 snapshots");
    std::vector<VectorField> ref_fields;
    for (Eigen::Index i = 0; i < set.times().size(); ++i)
        if (set.times()[i] >= e0 - 1e-12 && set.times()[i] <= e1 + 1e-12)
            ref_fields.push_back(set.field(static_cast<int>(i)));

    const auto modes = value_or<std::vector<std::string>>(
        cfg, "metrics.modes", {"total", "fluctuating", "pod-projected"});

    std::vector<ErrorReport> reports;
    if (!cfg.contains("estimators") || !cfg["estimators"].is_array())
        bad_key("estimators", "missing estimator list");
    for (const auto& est : cfg["estimators"]) {
        const std::string method = value_or<std::string>(est, "method", "");
        const std::string path = dir + "/estimate_" + method + ".txt";
        require_artifact(path, "estimate");
        auto [times, values] = load_time_table(path);
        CoefficientTrajectory traj(std::move(times), std::move(values));

        ErrorReport report;
        report.label = method;
        report.window_start = e0;
        report.window_end = e1;
        report.per_coefficient = coefficient_error(traj, reference);

        // Reconstruct the estimate at the reference snapshot times.
        const MatrixXd est_coeffs = traj.sample_at(reference.times);
        std::vector<VectorField> est_fields;
        est_fields.reserve(ref_fields.size());
        for (Eigen::Index i = 0; i < reference.times.size(); ++i)
            est_fields.push_back(reconstruct(basis, est_coeffs.row(i)));

        for (const auto& mode : modes) {
            const FieldErrorMode m = field_error_mode_from_name(mode);
            const ChannelErrors err =
                field_error(est_fields, ref_fields, reference.times, m, basis);
            if (m == FieldErrorMode::Total) report.per_component = err;
            if (m == FieldErrorMode::Fluctuating) report.fluctuating = err;
            if (m == FieldErrorMode::PodProjected) report.projected = err;
        }
        reports.push_back(std::move(report));
    }

    write_text_file(dir + "/report_coefficients.txt",
                    render_report(reports, ReportLayout::CoefficientTable));
    write_text_file(dir + "/report_components.txt",
                    render_report(reports, ReportLayout::ComponentTable));
}

}  // namespace flowest
