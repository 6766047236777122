#pragma once

#include "flowest/core.hpp"

namespace flowest {

/// Sampled modal-coefficient history: rows are times, columns are modes.
struct CoefficientTrajectory {
    VectorXd times;
    MatrixXd values;  // n_samples x n_modes
    std::vector<std::string> warnings;

    CoefficientTrajectory() = default;
    CoefficientTrajectory(VectorXd t, MatrixXd v);

    int n_samples() const { return static_cast<int>(times.size()); }
    int n_modes() const { return static_cast<int>(values.cols()); }

    /// Values interpolated at the query times (see resample_columns).
    MatrixXd sample_at(const VectorXd& query) const;
    /// Restriction to samples with t in [t0, t1] (inclusive, small tolerance).
    CoefficientTrajectory window(double t0, double t1) const;
};

/// Interpolate each column of `values` from `times` onto `query` times using
/// barycentric Lagrange interpolation on a local stencil of up to
/// `max_stencil` nearest samples. Queries must lie inside the sampled span.
MatrixXd resample_columns(const VectorXd& times, const MatrixXd& values, const VectorXd& query,
                          int max_stencil = 8);

}  // namespace flowest
