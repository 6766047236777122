#pragma once

#include "flowest/pod.hpp"
#include "flowest/trajectory.hpp"

namespace flowest {

/// Relative L2 errors in percent. Channels whose reference norm vanishes are
/// flagged undefined instead of propagating NaN.
struct ChannelErrors {
    VectorXd percent;
    std::vector<std::uint8_t> defined;

    double mean_defined() const;
    double max_defined() const;
};

/// e(a_i) = 100 * ||est_i - ref_i||_L2(time) / ||ref_i||_L2(time), with the
/// estimate interpolated onto the reference times and trapezoidal quadrature.
ChannelErrors coefficient_error(const CoefficientTrajectory& estimated,
                                const CoefficientTrajectory& reference);

enum class FieldErrorMode { Total, Fluctuating, PodProjected };

FieldErrorMode field_error_mode_from_name(const std::string& name);
std::string field_error_mode_name(FieldErrorMode mode);

/// Per-component relative L2 errors between field sequences at matched times:
/// space-L2 per snapshot, then time-L2 of that scalar, in percent.
///  - Total: full fields
///  - Fluctuating: reference field subtracted from both sides
///  - PodProjected: the reference is replaced by reconstruct(project(ref))
ChannelErrors field_error(const std::vector<VectorField>& estimated,
                          const std::vector<VectorField>& reference, const VectorXd& times,
                          FieldErrorMode mode, const PodBasis& basis);

struct ErrorReport {
    std::string label;
    ChannelErrors per_coefficient;
    ChannelErrors per_component;   // e(U), e(V) [, e(W)]
    ChannelErrors fluctuating;
    ChannelErrors projected;
    double window_start = 0.0;
    double window_end = 0.0;
};

enum class ReportLayout { CoefficientTable, ComponentTable };

/// Deterministic text table mirroring the per-coefficient / per-component
/// error summaries, percentages with two decimals.
std::string render_report(const std::vector<ErrorReport>& reports, ReportLayout layout);

}  // namespace flowest
