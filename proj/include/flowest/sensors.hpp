#pragma once

#include "flowest/pod.hpp"
#include "flowest/trajectory.hpp"

namespace flowest {

enum class SensorKind { PointVelocity, WallShear, BoxAverage };
enum class WallSide { Min, Max };

SensorKind sensor_kind_from_name(const std::string& name);
std::string sensor_kind_name(SensorKind kind);

/// One linear measurement functional on velocity fields.
///  - point-velocity: multilinear interpolation of `component` at `location`
///  - wall-shear: one-sided second-order wall-normal derivative of
///    `component` at the wall grid point nearest `location`, wall given by
///    wall_axis/wall_side (component must differ from wall_axis)
///  - box-average: quadrature-weighted mean of `component` over [box_lo, box_hi]
/// The result is scaled by `weight`.
struct SensorSpec {
    SensorKind kind = SensorKind::PointVelocity;
    std::vector<double> location;
    int component = 0;
    int wall_axis = 0;
    WallSide wall_side = WallSide::Min;
    std::vector<double> box_lo, box_hi;
    double weight = 1.0;
};

double apply(const SensorSpec& spec, const VectorField& field);

/// Sensor bank with its precomputed action on a POD basis.
struct SensorSuite {
    std::vector<SensorSpec> specs;
    MatrixXd mode_response;  // N_s x N_r, entry (k,j) = apply(spec_k, mode_j)
    VectorXd ref_offset;     // N_s, apply(spec_k, reference)

    int n_sensors() const { return static_cast<int>(specs.size()); }
    int n_modes() const { return static_cast<int>(mode_response.cols()); }
};

SensorSuite build_suite(const std::vector<SensorSpec>& specs, const PodBasis& basis);

/// Measurements of all sensors at consecutive times; rows follow `times`.
struct MeasurementRecord {
    VectorXd times;
    MatrixXd values;  // n_times x n_sensors

    int n_samples() const { return static_cast<int>(times.size()); }
    int n_sensors() const { return static_cast<int>(values.cols()); }
    MeasurementRecord window(int first, int count) const;
};

/// f_k(u(t)) for every sensor and time; fields between snapshots are linear
/// time interpolations, extrapolation is refused.
MeasurementRecord sample_measurements(const SensorSuite& suite, const SnapshotSet& set,
                                      const VectorXd& times);

/// Measurements of reconstruct(a(t)) evaluated algebraically:
/// ref_offset + mode_response * a, with a interpolated onto `times`.
MeasurementRecord measurements_from_coeffs(const SensorSuite& suite,
                                           const CoefficientTrajectory& coeffs,
                                           const VectorXd& times);

}  // namespace flowest
