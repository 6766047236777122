#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// I/O failures carry the offending path; the CLI maps them to their own exit code.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rectilinear structured grid in 2 or 3 dimensions with trapezoidal
/// tensor-product quadrature weights. Immutable after construction.
class Grid {
  public:
    /// coords: one strictly increasing coordinate array per axis.
    explicit Grid(std::vector<std::vector<double>> coords);

    int n_axes() const { return static_cast<int>(coords_.size()); }
    int dim(int axis) const { return static_cast<int>(coords_[axis].size()); }
    std::size_t n_points() const { return n_points_; }
    const std::vector<double>& coords(int axis) const { return coords_[axis]; }

    /// Per-point quadrature weight, flat-indexed with axis 0 fastest.
    const VectorXd& quad_weights() const { return weights_; }
    double volume() const { return volume_; }

    /// Flat index of a multi-index (axis 0 fastest).
    std::size_t flat_index(const std::vector<int>& idx) const;
    /// Stride of an axis in the flat ordering.
    std::size_t stride(int axis) const;

    bool same_layout(const Grid& other) const;
    std::string describe() const;

  private:
    std::vector<std::vector<double>> coords_;
    VectorXd weights_;
    std::size_t n_points_ = 0;
    double volume_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_uniform_grid(const std::vector<int>& dims,
                          const std::vector<std::pair<double, double>>& extents);

/// Sampled vector field on a Grid: one scalar array per velocity component,
/// component count equal to the number of grid axes.
class VectorField {
  public:
    VectorField() = default;  // empty state, assign before use
    VectorField(GridPtr grid, std::vector<VectorXd> components);
    /// Zero field with one component per grid axis.
    explicit VectorField(GridPtr grid);

    const GridPtr& grid() const { return grid_; }
    int n_components() const { return static_cast<int>(components_.size()); }
    const VectorXd& component(int c) const { return components_[c]; }
    VectorXd& component(int c) { return components_[c]; }

    VectorField& operator+=(const VectorField& other);
    VectorField& operator-=(const VectorField& other);
    VectorField& operator*=(double s);
    /// this += s * other
    void axpy(double s, const VectorField& other);

  private:
    GridPtr grid_;
    std::vector<VectorXd> components_;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);

/// Discrete L2 inner product over the grid: sum_p w_p sum_c a_c(p) b_c(p).
/// Throws std::invalid_argument with an axis/dim diagnostic on grid mismatch.
double inner_product(const VectorField& a, const VectorField& b);

inline double norm(const VectorField& a) { return std::sqrt(std::max(0.0, inner_product(a, a))); }

/// d(values)/d(axis coordinate) with second-order central differences in the
/// interior and second-order one-sided stencils at the boundaries.
/// Requires at least 3 points along the axis.
VectorXd derivative_along_axis(const Grid& grid, const VectorXd& values, int axis);

/// Time-stamped snapshots plus a reference (mean) field on a common grid.
class SnapshotSet {
  public:
    SnapshotSet() = default;  // empty state, assign before use
    SnapshotSet(VectorXd times, std::vector<VectorField> fields, VectorField reference);
    /// Reference defaults to the arithmetic time-mean of the snapshots.
    SnapshotSet(VectorXd times, std::vector<VectorField> fields);

    const GridPtr& grid() const { return reference_.grid(); }
    int n_snapshots() const { return static_cast<int>(fields_.size()); }
    const VectorXd& times() const { return times_; }
    const VectorField& field(int i) const { return fields_[i]; }
    const std::vector<VectorField>& fields() const { return fields_; }
    const VectorField& reference() const { return reference_; }

    /// Field at an arbitrary time inside coverage, linearly interpolated
    /// between the bracketing snapshots. Refuses extrapolation.
    VectorField at_time(double t) const;

  private:
    VectorXd times_;
    std::vector<VectorField> fields_;
    VectorField reference_;
};

}  // namespace flowest
