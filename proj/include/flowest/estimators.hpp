#pragma once

#include "flowest/rom.hpp"
#include "flowest/sensors.hpp"
#include "flowest/trajectory.hpp"

#include <complex>

namespace flowest {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Per-time least-squares fit of the modal coefficients to the instantaneous
/// offset-corrected measurements, via the minimum-norm pseudoinverse of the
/// suite's mode-response matrix (singular values below 1e-12 of the largest
/// are dropped). Ill conditioning attaches a warning instead of failing.
CoefficientTrajectory lsq_estimate(const SensorSuite& suite, const MeasurementRecord& record);

/// The pseudoinverse matrix itself (N_r x N_s), as used by lsq_estimate and
/// the K-LSQ observer targets.
MatrixXd lsq_matrix(const SensorSuite& suite, double* condition = nullptr);

/// Linear stochastic estimation: alpha_j(t) = Lambda_kj (f_k(t) - offset_k).
struct LseModel {
    MatrixXd lambda;  // N_s x N_r
    VectorXd offset;  // measurement offsets f_k(reference)
};

/// Fits Lambda from the time-integral normal equations over the training
/// interval (trapezoidal quadrature). Throws std::invalid_argument naming a
/// dependent sensor when the measurement covariance is singular.
LseModel lse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                 const VectorXd& ref_offset);
CoefficientTrajectory lse_estimate(const LseModel& model, const MeasurementRecord& record);

/// Quadratic extension: alpha_j = Lambda_kj f_k + Omega_kmj f_k f_m with
/// Omega symmetric in its first two indices.
struct QseModel {
    MatrixXd lambda;  // N_s x N_r
    Tensor3 omega;    // N_s x N_s x N_r
    VectorXd offset;
};

QseModel qse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                 const VectorXd& ref_offset);
CoefficientTrajectory qse_estimate(const QseModel& model, const MeasurementRecord& record);

/// Spectral LSE: one complex transfer matrix per DFT bin of a fixed-length
/// window, fitted by cross-spectral normal equations with 50%-overlap segment
/// averaging. Estimation applies the matrices bin-by-bin in the frequency
/// domain (a convolution in time).
struct SlseModel {
    std::vector<MatrixXcd> gamma;  // per-bin N_s x N_r transfer matrices
    VectorXd frequencies;          // cyclic frequency of each bin
    int training_length = 0;       // DFT window length in samples
    double dt = 0.0;
    VectorXd offset;
    std::vector<std::string> warnings;  // excluded-bin notices
};

SlseModel slse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                   const VectorXd& ref_offset);
CoefficientTrajectory slse_estimate(const SlseModel& model, const MeasurementRecord& record);

/// Frequency-domain application on one window of exactly training_length
/// samples, returning the complex series before the real part is taken.
MatrixXcd slse_apply_window(const SlseModel& model, const MatrixXd& window_values);

}  // namespace flowest
