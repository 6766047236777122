#include "flowest/pod.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace flowest {

MatrixXd correlation_matrix(const SnapshotSet& set) {
    const int n = set.n_snapshots();
    std::vector<VectorField> fluct;
    fluct.reserve(n);
    for (int i = 0; i < n; ++i) fluct.push_back(set.field(i) - set.reference());

    MatrixXd corr(n, n);
    for (int j = 0; j < n; ++j) {
        for (int l = 0; l <= j; ++l) {
            const double v = inner_product(fluct[j], fluct[l]);
            corr(j, l) = v;
            corr(l, j) = v;
        }
    }
    return corr;
}

PodBasis compute_pod(const SnapshotSet& set, int n_retained) {
    const int n = set.n_snapshots();
    if (n_retained < 1 || n_retained > n)
        throw std::invalid_argument("compute_pod: n_retained=" + std::to_string(n_retained) +
                                    " outside [1, " + std::to_string(n) + "]");

    const MatrixXd corr = correlation_matrix(set);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("compute_pod: eigendecomposition failed");

    // Eigen returns ascending order; flip to energy order.
    VectorXd lambda(n);
    MatrixXd vecs(n, n);
    for (int k = 0; k < n; ++k) {
        lambda[k] = eig.eigenvalues()[n - 1 - k];
        vecs.col(k) = eig.eigenvectors().col(n - 1 - k);
    }

    const double rank_tol = 1e-12 * std::max(lambda[0], 0.0);
    int rank = 0;
    while (rank < n && lambda[rank] > rank_tol) ++rank;
    if (n_retained > rank)
        throw std::invalid_argument("compute_pod: n_retained=" + std::to_string(n_retained) +
                                    " exceeds numerical rank " + std::to_string(rank) +
                                    " (eigenvalue " + std::to_string(n_retained) +
                                    " is below 1e-12 of the leading one)");

    // Sign convention: largest-magnitude eigenvector entry positive.
    for (int k = 0; k < n_retained; ++k) {
        Eigen::Index imax;
        vecs.col(k).cwiseAbs().maxCoeff(&imax);
        if (vecs(imax, k) < 0) vecs.col(k) = -vecs.col(k);
    }

    std::vector<VectorField> fluct;
    fluct.reserve(n);
    for (int i = 0; i < n; ++i) fluct.push_back(set.field(i) - set.reference());

    PodBasis basis;
    basis.reference = set.reference();
    basis.eigenvalues = lambda.head(n_retained);
    basis.snapshot_coeffs.resize(n, n_retained);
    basis.modes.reserve(n_retained);
    for (int k = 0; k < n_retained; ++k) {
        VectorField mode(set.grid());
        for (int i = 0; i < n; ++i) mode.axpy(vecs(i, k), fluct[i]);
        const double nrm = norm(mode);
        if (!(nrm > 0))
            throw std::runtime_error("compute_pod: mode " + std::to_string(k) +
                                     " has zero norm after assembly");
        mode *= 1.0 / nrm;
        basis.snapshot_coeffs.col(k) = vecs.col(k) / nrm;
        basis.modes.push_back(std::move(mode));
    }
    return basis;
}

VectorXd project(const PodBasis& basis, const VectorField& field) {
    const VectorField fluct = field - basis.reference;
    VectorXd a(basis.n_retained());
    for (int r = 0; r < basis.n_retained(); ++r) a[r] = inner_product(fluct, basis.modes[r]);
    return a;
}

VectorField reconstruct(const PodBasis& basis, const VectorXd& coeffs) {
    if (coeffs.size() != basis.n_retained())
        throw std::invalid_argument("reconstruct: " + std::to_string(coeffs.size()) +
                                    " coefficients for " + std::to_string(basis.n_retained()) +
                                    " modes");
    VectorField out = basis.reference;
    for (int i = 0; i < basis.n_retained(); ++i) out.axpy(coeffs[i], basis.modes[i]);
    return out;
}

CoefficientTrajectory project_snapshots(const PodBasis& basis, const SnapshotSet& set) {
    MatrixXd values(set.n_snapshots(), basis.n_retained());
    for (int i = 0; i < set.n_snapshots(); ++i) values.row(i) = project(basis, set.field(i));
    return CoefficientTrajectory(set.times(), std::move(values));
}

PodBasis truncate(const PodBasis& basis, int n) {
    if (n < 1 || n > basis.n_retained())
        throw std::invalid_argument("truncate: n outside [1, " +
                                    std::to_string(basis.n_retained()) + "]");
    PodBasis out;
    out.modes.assign(basis.modes.begin(), basis.modes.begin() + n);
    out.eigenvalues = basis.eigenvalues.head(n);
    out.snapshot_coeffs = basis.snapshot_coeffs.leftCols(n);
    out.reference = basis.reference;
    return out;
}

void save_basis(const PodBasis& basis, const std::string& path, FileFormat format,
                const std::vector<std::string>& header_comments) {
    VectorXd mode_index(basis.n_retained());
    for (int k = 0; k < basis.n_retained(); ++k) mode_index[k] = k + 1;
    SnapshotSet as_set(mode_index, basis.modes, basis.reference);
    auto comments = header_comments;
    comments.push_back("pod basis: fields are modes, times are mode indices");
    save_snapshots(as_set, path, format, true, comments);

    std::ostringstream os;
    os << "# eigenvalues then snapshot coefficient matrix (N x N_r)\n";
    os << "floweig 1 " << basis.snapshot_coeffs.rows() << " " << basis.n_retained() << "\n";
    os.precision(17);
    for (int k = 0; k < basis.n_retained(); ++k)
        os << basis.eigenvalues[k] << (k + 1 == basis.n_retained() ? "\n" : " ");
    for (Eigen::Index i = 0; i < basis.snapshot_coeffs.rows(); ++i)
        for (Eigen::Index k = 0; k < basis.snapshot_coeffs.cols(); ++k)
            os << basis.snapshot_coeffs(i, k)
               << (k + 1 == basis.snapshot_coeffs.cols() ? "\n" : " ");
    write_text_file(path + ".eig", os.str());
}

PodBasis load_basis(const std::string& path) {
    SnapshotSet as_set = load_snapshots(path);

    std::ifstream in(path + ".eig");
    if (!in) throw IoError("cannot open basis sidecar '" + path + ".eig'");
    std::string token;
    auto next = [&]() -> std::string {
        while (in >> token) {
            if (token[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return token;
        }
        throw IoError("parse error in '" + path + ".eig': unexpected end of file");
    };
    if (next() != "floweig") throw IoError("parse error in '" + path + ".eig': bad magic");
    if (std::stoll(next()) != 1) throw IoError("parse error in '" + path + ".eig': bad version");
    const long long n_snap = std::stoll(next());
    const long long n_modes = std::stoll(next());
    if (n_modes != as_set.n_snapshots())
        throw IoError("parse error in '" + path + ".eig': mode count " + std::to_string(n_modes) +
                      " does not match basis file (" + std::to_string(as_set.n_snapshots()) + ")");

    PodBasis basis;
    basis.reference = as_set.reference();
    basis.modes = as_set.fields();
    basis.eigenvalues.resize(n_modes);
    for (long long k = 0; k < n_modes; ++k) basis.eigenvalues[k] = std::stod(next());
    basis.snapshot_coeffs.resize(n_snap, n_modes);
    for (long long i = 0; i < n_snap; ++i)
        for (long long k = 0; k < n_modes; ++k) basis.snapshot_coeffs(i, k) = std::stod(next());
    return basis;
}

}  // namespace flowest
