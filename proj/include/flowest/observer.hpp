#pragma once

#include "flowest/calibration.hpp"
#include "flowest/estimators.hpp"
#include "flowest/rom.hpp"
#include "flowest/sensors.hpp"

namespace flowest {

enum class ObserverVariant { KLsq, KLse };

ObserverVariant observer_variant_from_name(const std::string& name);
std::string observer_variant_name(ObserverVariant v);

/// Joint minimization data over one estimation window: the coefficients at
/// the collocation nodes are the unknowns, the model residual (with the time
/// derivative taken through the collocation differentiation matrix) is
/// weighted by c_r against the mismatch to the static-estimator targets.
struct ObserverProblem {
    RomCoefficients rom;
    CollocationOperator op;
    MatrixXd targets;  // n_nodes x n_modes
    double c_r = 1.0;
    ObserverVariant variant = ObserverVariant::KLsq;

    int n_nodes() const { return op.n_points(); }
    int n_modes() const { return rom.n_modes(); }
};

/// Default residual weights from the paper's tuning: 10 for K-LSQ, 0.1 for K-LSE.
double default_c_r(ObserverVariant v);

/// Resamples the measurements onto CGL nodes spanning the record and builds
/// the static targets: pseudoinverse coefficients for K-LSQ, the fitted
/// linear map for K-LSE (which requires `static_model`).
/// n_nodes <= 0 selects one node per record sample.
ObserverProblem assemble_problem(const RomCoefficients& rom, const SensorSuite& suite,
                                 const MeasurementRecord& record, ObserverVariant variant,
                                 const LseModel* static_model = nullptr, double c_r = -1.0,
                                 int n_nodes = 0);

struct NewtonReport {
    int iterations = 0;
    std::vector<double> grad_norms;  // per iterate, starting at the initial guess
    std::vector<double> objectives;  // same indexing
    bool converged = false;
    std::vector<std::string> warnings;
};

enum class ObserverInit { StaticTargets, Zeros, Given };

struct ObserverSolution {
    CoefficientTrajectory trajectory;  // at the collocation nodes
    NewtonReport report;
};

/// Damped Newton minimization of
///   J(a) = sum_nodes [ c_r * sum_r R_r(a)^2 + sum_r (a_r - target_r)^2 ]
/// with analytic gradient and Hessian, Armijo backtracking, and a
/// Levenberg-style diagonal shift when the Newton system is indefinite or
/// singular. tol <= 0 selects 1e-10 * (1 + |J0|).
ObserverSolution solve(const ObserverProblem& problem,
                       ObserverInit init = ObserverInit::StaticTargets,
                       const MatrixXd* init_values = nullptr, double tol = -1.0,
                       int max_iter = 50);

/// Node-wise model residuals R at the given node values.
MatrixXd residual_matrix(const ObserverProblem& problem, const MatrixXd& a);
double objective(const ObserverProblem& problem, const MatrixXd& a);
MatrixXd objective_gradient(const ObserverProblem& problem, const MatrixXd& a);

struct SlidingWindowResult {
    CoefficientTrajectory estimates;  // window-final states, one per window
    std::vector<NewtonReport> reports;
    std::vector<ObserverSolution> solutions;
};

/// Moving-window operation: each window of `window` consecutive stream
/// samples is solved with the previous window's solution as the Newton
/// initial guess (static targets where the new window extends past it), and
/// the state at the window's final node is emitted.
SlidingWindowResult sliding_window_estimate(const RomCoefficients& rom, const SensorSuite& suite,
                                            const MeasurementRecord& stream, int window,
                                            int stride, ObserverVariant variant,
                                            const LseModel* static_model = nullptr,
                                            double c_r = -1.0, int n_nodes = 0,
                                            bool warm_start = true);

/// Consecutive non-overlapping windows covering the whole stream, full node
/// trajectories concatenated. The tail, if shorter than `chunk`, is solved on
/// the final `chunk` samples and only its uncovered part is appended.
ObserverSolution estimate_chunked(const RomCoefficients& rom, const SensorSuite& suite,
                                  const MeasurementRecord& stream, int chunk,
                                  ObserverVariant variant, const LseModel* static_model = nullptr,
                                  double c_r = -1.0, int n_nodes = 0);

struct CrSweepRow {
    double c_r = 0.0;
    double model_residual = 0.0;    // sqrt(sum_nodes sum_r R^2)
    double target_mismatch = 0.0;   // sqrt(sum_nodes sum_r (a - target)^2)
    int iterations = 0;
    double mean_coeff_error_pct = -1.0;  // vs reference, when provided
};

/// Re-solves the same window for each residual weight; the analog of the
/// paper's weight-sensitivity figure.
std::vector<CrSweepRow> c_r_sweep(const ObserverProblem& base, const std::vector<double>& values,
                                  const CoefficientTrajectory* reference = nullptr);

std::string render_c_r_sweep(const std::vector<CrSweepRow>& rows);

}  // namespace flowest
