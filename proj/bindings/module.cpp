#include "flowest/calibration.hpp"
#include "flowest/estimators.hpp"
#include "flowest/io.hpp"
#include "flowest/metrics.hpp"
#include "flowest/observer.hpp"
#include "flowest/pod.hpp"
#include "flowest/rom.hpp"
#include "flowest/sensors.hpp"
#include "flowest/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace flowest;

namespace {

std::shared_ptr<Grid> py_make_grid(const std::vector<std::vector<double>>& coords) {
    return std::make_shared<Grid>(coords);
}

}  // namespace

PYBIND11_MODULE(_flowest, m) {
    m.doc() = "flow state estimation from sparse sensors (POD/Galerkin + observers)";

    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
        .def(py::init(&py_make_grid), py::arg("coords"))
        .def_property_readonly("n_axes", &Grid::n_axes)
        .def_property_readonly("n_points", &Grid::n_points)
        .def("dim", &Grid::dim)
        .def("coords", &Grid::coords, py::return_value_policy::reference_internal)
        .def_property_readonly("quad_weights", &Grid::quad_weights)
        .def_property_readonly("volume", &Grid::volume);
    m.def("make_uniform_grid", &make_uniform_grid, py::arg("dims"), py::arg("extents"));

    py::class_<VectorField>(m, "VectorField")
        .def(py::init<GridPtr, std::vector<VectorXd>>(), py::arg("grid"), py::arg("components"))
        .def(py::init<GridPtr>(), py::arg("grid"))
        .def_property_readonly("grid", &VectorField::grid)
        .def_property_readonly("n_components", &VectorField::n_components)
        .def("component", [](const VectorField& f, int c) { return f.component(c); });
    m.def("inner_product", &inner_product);

    py::class_<SnapshotSet>(m, "SnapshotSet")
        .def(py::init<VectorXd, std::vector<VectorField>, VectorField>(), py::arg("times"),
             py::arg("fields"), py::arg("reference"))
        .def(py::init<VectorXd, std::vector<VectorField>>(), py::arg("times"),
             py::arg("fields"))
        .def_property_readonly("n_snapshots", &SnapshotSet::n_snapshots)
        .def_property_readonly("times", &SnapshotSet::times)
        .def("field", &SnapshotSet::field)
        .def_property_readonly("reference", &SnapshotSet::reference)
        .def("at_time", &SnapshotSet::at_time);

    m.def("save_snapshots",
          [](const SnapshotSet& set, const std::string& path, const std::string& format) {
              save_snapshots(set, path, format_from_name(format));
          });
    m.def("load_snapshots", [](const std::string& path) { return load_snapshots(path); });

    py::class_<CoefficientTrajectory>(m, "CoefficientTrajectory")
        .def(py::init<VectorXd, MatrixXd>(), py::arg("times"), py::arg("values"))
        .def_readonly("times", &CoefficientTrajectory::times)
        .def_readonly("values", &CoefficientTrajectory::values)
        .def_readonly("warnings", &CoefficientTrajectory::warnings)
        .def("sample_at", &CoefficientTrajectory::sample_at)
        .def("window", &CoefficientTrajectory::window);

    py::class_<PodBasis>(m, "PodBasis")
        .def_property_readonly("n_retained", &PodBasis::n_retained)
        .def_readonly("modes", &PodBasis::modes)
        .def_readonly("eigenvalues", &PodBasis::eigenvalues)
        .def_readonly("snapshot_coeffs", &PodBasis::snapshot_coeffs)
        .def_readonly("reference", &PodBasis::reference);
    m.def("correlation_matrix", &correlation_matrix);
    m.def("compute_pod", &compute_pod, py::arg("set"), py::arg("n_retained"));
    m.def("project", &project);
    m.def("reconstruct", &reconstruct);
    m.def("project_snapshots", &project_snapshots);

    py::class_<Tensor3>(m, "Tensor3")
        .def(py::init<int>())
        .def_property_readonly("n", &Tensor3::n)
        .def("__getitem__",
             [](const Tensor3& t, std::tuple<int, int, int> i) {
                 return t(std::get<0>(i), std::get<1>(i), std::get<2>(i));
             })
        .def("__setitem__", [](Tensor3& t, std::tuple<int, int, int> i, double v) {
            t(std::get<0>(i), std::get<1>(i), std::get<2>(i)) = v;
        });

    py::class_<RomCoefficients>(m, "RomCoefficients")
        .def(py::init(&make_rom), py::arg("constant"), py::arg("linear"), py::arg("quadratic"))
        .def_readonly("constant", &RomCoefficients::constant)
        .def_readonly("linear", &RomCoefficients::linear)
        .def_readonly("quadratic", &RomCoefficients::quadratic)
        .def_property_readonly("n_modes", &RomCoefficients::n_modes);
    m.def("assemble_quadratic_tensor", &assemble_quadratic_tensor);
    m.def("residual", &residual);
    m.def("rom_rhs", &rhs);
    m.def("integrate", &integrate, py::arg("rom"), py::arg("a0"), py::arg("t0"), py::arg("t1"),
          py::arg("dt"));

    py::class_<CollocationOperator>(m, "CollocationOperator")
        .def_readonly("nodes", &CollocationOperator::nodes)
        .def_readonly("diff", &CollocationOperator::diff)
        .def_property_readonly("n_points", &CollocationOperator::n_points);
    m.def("build_collocation", &build_collocation, py::arg("t_a"), py::arg("t_b"),
          py::arg("n_points"));

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("rom", &CalibrationResult::rom)
        .def_readonly("residual_before", &CalibrationResult::residual_before)
        .def_readonly("residual_after", &CalibrationResult::residual_after)
        .def_readonly("condition", &CalibrationResult::condition);
    m.def("calibrate", &calibrate, py::arg("quadratic"), py::arg("reference_at_nodes"),
          py::arg("op"));

    py::enum_<SensorKind>(m, "SensorKind")
        .value("PointVelocity", SensorKind::PointVelocity)
        .value("WallShear", SensorKind::WallShear)
        .value("BoxAverage", SensorKind::BoxAverage);
    py::enum_<WallSide>(m, "WallSide").value("Min", WallSide::Min).value("Max", WallSide::Max);

    py::class_<SensorSpec>(m, "SensorSpec")
        .def(py::init<>())
        .def_readwrite("kind", &SensorSpec::kind)
        .def_readwrite("location", &SensorSpec::location)
        .def_readwrite("component", &SensorSpec::component)
        .def_readwrite("wall_axis", &SensorSpec::wall_axis)
        .def_readwrite("wall_side", &SensorSpec::wall_side)
        .def_readwrite("box_lo", &SensorSpec::box_lo)
        .def_readwrite("box_hi", &SensorSpec::box_hi)
        .def_readwrite("weight", &SensorSpec::weight);
    m.def("apply_sensor", [](const SensorSpec& s, const VectorField& f) { return apply(s, f); });

    py::class_<SensorSuite>(m, "SensorSuite")
        .def_readonly("mode_response", &SensorSuite::mode_response)
        .def_readonly("ref_offset", &SensorSuite::ref_offset)
        .def_property_readonly("n_sensors", &SensorSuite::n_sensors);
    m.def("build_suite", &build_suite);

    py::class_<MeasurementRecord>(m, "MeasurementRecord")
        .def(py::init([](VectorXd times, MatrixXd values) {
                 MeasurementRecord r;
                 r.times = std::move(times);
                 r.values = std::move(values);
                 return r;
             }),
             py::arg("times"), py::arg("values"))
        .def_readonly("times", &MeasurementRecord::times)
        .def_readonly("values", &MeasurementRecord::values);
    m.def("sample_measurements", &sample_measurements);
    m.def("measurements_from_coeffs", &measurements_from_coeffs);

    m.def("lsq_estimate", &lsq_estimate);

    py::class_<LseModel>(m, "LseModel")
        .def_readonly("lambda_", &LseModel::lambda)
        .def_readonly("offset", &LseModel::offset);
    m.def("lse_fit", &lse_fit);
    m.def("lse_estimate", &lse_estimate);

    py::class_<QseModel>(m, "QseModel")
        .def_readonly("lambda_", &QseModel::lambda)
        .def_readonly("omega", &QseModel::omega);
    m.def("qse_fit", &qse_fit);
    m.def("qse_estimate", &qse_estimate);

    py::class_<SlseModel>(m, "SlseModel")
        .def_readonly("frequencies", &SlseModel::frequencies)
        .def_readonly("training_length", &SlseModel::training_length)
        .def_readonly("warnings", &SlseModel::warnings);
    m.def("slse_fit", &slse_fit);
    m.def("slse_estimate", &slse_estimate);

    py::enum_<ObserverVariant>(m, "ObserverVariant")
        .value("KLsq", ObserverVariant::KLsq)
        .value("KLse", ObserverVariant::KLse);
    py::enum_<ObserverInit>(m, "ObserverInit")
        .value("StaticTargets", ObserverInit::StaticTargets)
        .value("Zeros", ObserverInit::Zeros)
        .value("Given", ObserverInit::Given);

    py::class_<ObserverProblem>(m, "ObserverProblem")
        .def_readonly("targets", &ObserverProblem::targets)
        .def_readonly("c_r", &ObserverProblem::c_r)
        .def_property_readonly("n_nodes", &ObserverProblem::n_nodes)
        .def_property_readonly("nodes",
                               [](const ObserverProblem& p) { return p.op.nodes; });
    m.def("assemble_problem", &assemble_problem, py::arg("rom"), py::arg("suite"),
          py::arg("record"), py::arg("variant"), py::arg("static_model") = nullptr,
          py::arg("c_r") = -1.0, py::arg("n_nodes") = 0);

    py::class_<NewtonReport>(m, "NewtonReport")
        .def_readonly("iterations", &NewtonReport::iterations)
        .def_readonly("grad_norms", &NewtonReport::grad_norms)
        .def_readonly("objectives", &NewtonReport::objectives)
        .def_readonly("converged", &NewtonReport::converged);

    py::class_<ObserverSolution>(m, "ObserverSolution")
        .def_readonly("trajectory", &ObserverSolution::trajectory)
        .def_readonly("report", &ObserverSolution::report);
    m.def(
        "solve",
        [](const ObserverProblem& p, ObserverInit init, double tol, int max_iter) {
            return solve(p, init, nullptr, tol, max_iter);
        },
        py::arg("problem"), py::arg("init") = ObserverInit::StaticTargets,
        py::arg("tol") = -1.0, py::arg("max_iter") = 50);
    m.def("objective", &objective);

    py::class_<SlidingWindowResult>(m, "SlidingWindowResult")
        .def_readonly("estimates", &SlidingWindowResult::estimates)
        .def_readonly("reports", &SlidingWindowResult::reports);
    m.def("sliding_window_estimate", &sliding_window_estimate, py::arg("rom"), py::arg("suite"),
          py::arg("stream"), py::arg("window"), py::arg("stride"), py::arg("variant"),
          py::arg("static_model") = nullptr, py::arg("c_r") = -1.0, py::arg("n_nodes") = 0,
          py::arg("warm_start") = true);

    py::enum_<DynamicsKind>(m, "DynamicsKind")
        .value("LimitCycle", DynamicsKind::LimitCycle)
        .value("ChaoticQuadratic", DynamicsKind::ChaoticQuadratic);
    py::enum_<ModeFamily>(m, "ModeFamily")
        .value("Trigonometric", ModeFamily::Trigonometric)
        .value("PolynomialBump", ModeFamily::PolynomialBump);

    py::class_<SyntheticScenario>(m, "SyntheticScenario")
        .def_readonly("true_basis", &SyntheticScenario::true_basis)
        .def_readonly("true_rom", &SyntheticScenario::true_rom)
        .def_readonly("true_trajectory", &SyntheticScenario::true_trajectory)
        .def_readonly("snapshots", &SyntheticScenario::snapshots)
        .def_readonly("seed", &SyntheticScenario::seed);
    m.def("make_modes", &make_modes, py::arg("grid"), py::arg("n_modes"), py::arg("family"),
          py::arg("seed"));
    m.def("make_dynamics", &make_dynamics, py::arg("kind"), py::arg("n_modes"));
    m.def("make_scenario", &make_scenario, py::arg("grid"), py::arg("n_modes"),
          py::arg("dynamics"), py::arg("t0"), py::arg("t1"), py::arg("dt"),
          py::arg("n_snapshots"), py::arg("seed"));
    m.def("export_scenario", [](const SyntheticScenario& s, const std::string& dir,
                                const std::string& format) {
        export_scenario(s, dir, format_from_name(format));
    });

    py::class_<ChannelErrors>(m, "ChannelErrors")
        .def_readonly("percent", &ChannelErrors::percent)
        .def_readonly("defined", &ChannelErrors::defined)
        .def("mean_defined", &ChannelErrors::mean_defined)
        .def("max_defined", &ChannelErrors::max_defined);
    m.def("coefficient_error", &coefficient_error);
}
