#include "flowest/calibration.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace flowest {

CollocationOperator build_collocation(double t_a, double t_b, int n_points) {
    if (!(t_b > t_a)) throw std::invalid_argument("build_collocation: t_b must exceed t_a");
    if (n_points < 2) throw std::invalid_argument("build_collocation: need at least 2 points");

    const int n = n_points;
    CollocationOperator op;
    op.nodes.resize(n);
    // x_j = cos(j pi / (n-1)) descending from 1 to -1; map so time ascends.
    for (int j = 0; j < n; ++j) {
        const double x = std::cos(M_PI * static_cast<double>(j) / (n - 1));
        op.nodes[j] = t_a + 0.5 * (t_b - t_a) * (1.0 - x);
    }
    op.nodes[0] = t_a;
    op.nodes[n - 1] = t_b;

    // Canonical CGL barycentric weights; the affine map rescales every weight
    // by the same factor, which cancels in the weight ratios below.
    VectorXd w(n);
    for (int j = 0; j < n; ++j) w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    w[0] *= 0.5;
    w[n - 1] *= 0.5;

    op.diff.resize(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = (w[j] / w[i]) / (op.nodes[i] - op.nodes[j]);
            op.diff(i, j) = d;
            diag -= d;
        }
        op.diff(i, i) = diag;  // rows sum to zero: constants differentiate to zero
    }
    return op;
}

CalibrationResult calibrate(const Tensor3& quadratic, const MatrixXd& reference_at_nodes,
                            const CollocationOperator& op) {
    const int n_nodes = op.n_points();
    const int n_modes = quadratic.n();
    if (reference_at_nodes.rows() != n_nodes)
        throw std::invalid_argument("calibrate: reference rows (" +
                                    std::to_string(reference_at_nodes.rows()) +
                                    ") must match collocation node count (" +
                                    std::to_string(n_nodes) + ")");
    if (reference_at_nodes.cols() != n_modes)
        throw std::invalid_argument("calibrate: reference columns must match tensor modes");
    if (n_nodes < n_modes + 1)
        throw std::invalid_argument("calibrate: need at least n_modes+1 nodes for the fit");

    const MatrixXd& a = reference_at_nodes;
    const MatrixXd da = op.diff * a;

    // Shared regressor matrix: [1, a_1(t), ..., a_n(t)] at every node.
    MatrixXd x(n_nodes, n_modes + 1);
    x.col(0).setOnes();
    x.rightCols(n_modes) = a;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < n_modes + 1) {
        // Column pivoting pushes dependent columns last; name the first one.
        const int dep = static_cast<int>(qr.colsPermutation().indices()[qr.rank()]);
        const std::string which =
            dep == 0 ? "the constant column" : ("mode " + std::to_string(dep));
        throw std::invalid_argument(
            "calibrate: regressor matrix is rank deficient (rank " + std::to_string(qr.rank()) +
            " of " + std::to_string(n_modes + 1) + "); " + which +
            " is linearly dependent on the others (constant or degenerate reference trajectory)");
    }

    // Condition estimate of the shared normal system X^T X.
    Eigen::JacobiSVD<MatrixXd> svd(x);
    const double cond_x =
        svd.singularValues()[0] / svd.singularValues()[svd.singularValues().size() - 1];

    // Quadratic contribution, moved to the target side.
    MatrixXd quad_term(n_nodes, n_modes);
    for (int m = 0; m < n_nodes; ++m)
        for (int r = 0; r < n_modes; ++r) {
            double q = 0.0;
            for (int k = 0; k < n_modes; ++k)
                for (int s = 0; s < n_modes; ++s) q += quadratic(k, s, r) * a(m, k) * a(m, s);
            quad_term(m, r) = q;
        }

    CalibrationResult result;
    result.rom.constant.resize(n_modes);
    result.rom.linear.resize(n_modes, n_modes);
    result.rom.quadratic = quadratic;
    result.residual_before.resize(n_modes);
    result.residual_after.resize(n_modes);
    result.condition = cond_x * cond_x;

    for (int r = 0; r < n_modes; ++r) {
        const VectorXd y = da.col(r) + quad_term.col(r);
        result.residual_before[r] = y.norm();
        const VectorXd beta = qr.solve(y);
        result.rom.constant[r] = beta[0];
        result.rom.linear.col(r) = beta.tail(n_modes);
        result.residual_after[r] = (x * beta - y).norm();
    }
    result.rom.validate();
    return result;
}

std::string calibration_report(const CalibrationResult& result) {
    std::ostringstream os;
    os << "# calibration report: per-mode node-residual 2-norms\n";
    os << "# normal-system condition estimate: ";
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6e", result.condition);
        os << buf << "\n";
    }
    os << "mode residual_before residual_after\n";
    for (Eigen::Index r = 0; r < result.residual_before.size(); ++r) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "%lld %.6e %.6e\n", static_cast<long long>(r + 1),
                      result.residual_before[r], result.residual_after[r]);
        os << buf;
    }
    return os.str();
}

}  // namespace flowest
