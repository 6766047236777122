#pragma once

#include "flowest/rom.hpp"
#include "flowest/trajectory.hpp"

namespace flowest {

/// Chebyshev-Gauss-Lobatto collocation over a time window: nodes (ascending,
/// endpoints exact) and the dense spectral differentiation matrix built from
/// barycentric Lagrange weights.
struct CollocationOperator {
    VectorXd nodes;
    MatrixXd diff;

    int n_points() const { return static_cast<int>(nodes.size()); }
    double t_a() const { return nodes[0]; }
    double t_b() const { return nodes[nodes.size() - 1]; }
};

CollocationOperator build_collocation(double t_a, double t_b, int n_points);

struct CalibrationResult {
    RomCoefficients rom;
    VectorXd residual_before;  // per-mode node-residual 2-norm with A=0, C=0
    VectorXd residual_after;   // per-mode minimum attained by the fit
    double condition;          // condition estimate of the shared normal system
};

/// Pseudo-spectral calibration of A_r and C_kr with the quadratic tensor held
/// fixed: for each mode r independently, least-squares fit of
///   (D a)_r - A_r - C_kr a_k + B_ksr a_k a_s  ->  0
/// over the collocation nodes. `reference_at_nodes` is n_nodes x n_modes,
/// sampled exactly at op.nodes. Rank deficiency (e.g. a constant reference
/// trajectory) raises std::invalid_argument naming a dependent mode column.
CalibrationResult calibrate(const Tensor3& quadratic, const MatrixXd& reference_at_nodes,
                            const CollocationOperator& op);

/// Text-table calibration report (per-mode residual norms and conditioning).
std::string calibration_report(const CalibrationResult& result);

}  // namespace flowest
