#pragma once

#include "flowest/core.hpp"
#include "flowest/io.hpp"

namespace flowest {

/// Orthonormal empirical basis from the snapshot method. Modes are unit-norm
/// under inner_product; eigenvalues are non-increasing.
struct PodBasis {
    std::vector<VectorField> modes;
    VectorXd eigenvalues;
    MatrixXd snapshot_coeffs;  // N x N_r: mode k = sum_i coeffs(i,k) * (U_i - mean)
    VectorField reference;

    int n_retained() const { return static_cast<int>(modes.size()); }
    const GridPtr& grid() const { return reference.grid(); }
};

/// Time correlation matrix of the mean-subtracted snapshots:
/// entry (j,l) = inner_product(U_j - mean, U_l - mean).
MatrixXd correlation_matrix(const SnapshotSet& set);

/// Snapshot-method POD. Eigenvalues below 1e-12 * lambda_max count as null
/// space; asking for more modes than the numerical rank raises
/// std::invalid_argument. The sign of each mode is fixed so the
/// largest-magnitude entry of its eigenvector is positive.
PodBasis compute_pod(const SnapshotSet& set, int n_retained);

/// Coefficients of the field's fluctuation in the basis:
/// component r = inner_product(field - reference, mode_r).
VectorXd project(const PodBasis& basis, const VectorField& field);

/// reference + sum_i coeffs_i * mode_i.
VectorField reconstruct(const PodBasis& basis, const VectorXd& coeffs);

/// Projections of every snapshot; rows follow the snapshot times.
CoefficientTrajectory project_snapshots(const PodBasis& basis, const SnapshotSet& set);

/// Basis truncated to its leading n modes.
PodBasis truncate(const PodBasis& basis, int n);

/// Persistence: the modes travel in the snapshot file format (reference field
/// plus one "snapshot" per mode, timestamped by mode index); eigenvalues and
/// snapshot coefficients go to a text sidecar at path + ".eig".
void save_basis(const PodBasis& basis, const std::string& path, FileFormat format,
                const std::vector<std::string>& header_comments = {});
PodBasis load_basis(const std::string& path);

}  // namespace flowest
