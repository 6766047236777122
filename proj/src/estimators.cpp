#include "flowest/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <functional>
#include <limits>

namespace flowest {

namespace {

// Trapezoidal time-quadrature weights for the discrete <.,.> integrals.
VectorXd trapezoid_time_weights(const VectorXd& t) {
    const Eigen::Index n = t.size();
    VectorXd w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    w[0] = 0.5 * (t[1] - t[0]);
    w[n - 1] = 0.5 * (t[n - 1] - t[n - 2]);
    for (Eigen::Index i = 1; i + 1 < n; ++i) w[i] = 0.5 * (t[i + 1] - t[i - 1]);
    return w;
}

void require_paired(const CoefficientTrajectory& ref, const MeasurementRecord& rec,
                    const char* who) {
    if (ref.n_samples() != rec.n_samples())
        throw std::invalid_argument(std::string(who) + ": reference and record sample counts differ");
    const double tol = 1e-9 * (rec.times[rec.times.size() - 1] - rec.times[0] + 1.0);
    for (Eigen::Index i = 0; i < rec.times.size(); ++i)
        if (std::abs(ref.times[i] - rec.times[i]) > tol)
            throw std::invalid_argument(std::string(who) +
                                        ": reference and record times differ at index " +
                                        std::to_string(i));
}

// Weighted normal-equation solve G X = H with a singularity diagnostic that
// names the most involved regressor via except_name.
MatrixXd solve_normal(const MatrixXd& g, const MatrixXd& h, const char* who,
                      const std::function<std::string(int)>& regressor_name) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g);
    const VectorXd ev = eig.eigenvalues();
    const double emax = ev[ev.size() - 1];
    if (!(emax > 0) || ev[0] < 1e-12 * emax) {
        Eigen::Index dominant;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&dominant);
        throw std::invalid_argument(std::string(who) + ": covariance is singular; " +
                                    regressor_name(static_cast<int>(dominant)) +
                                    " is linearly dependent on the others");
    }
    const MatrixXd projected = eig.eigenvectors().transpose() * h;
    return eig.eigenvectors() * (projected.array().colwise() / ev.array()).matrix();
}

}  // namespace

MatrixXd lsq_matrix(const SensorSuite& suite, double* condition) {
    Eigen::JacobiSVD<MatrixXd> svd(suite.mode_response,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double cutoff = 1e-12 * smax;

    MatrixXd upsilon = MatrixXd::Zero(suite.n_modes(), suite.n_sensors());
    double smin_kept = smax;
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (!(sv[i] > cutoff)) continue;
        smin_kept = sv[i];
        ++kept;
        upsilon += (1.0 / sv[i]) * svd.matrixV().col(i) * svd.matrixU().col(i).transpose();
    }
    if (condition) {
        *condition = (kept < suite.n_modes()) ? std::numeric_limits<double>::infinity()
                                              : smax / smin_kept;
    }
    return upsilon;
}

CoefficientTrajectory lsq_estimate(const SensorSuite& suite, const MeasurementRecord& record) {
    if (record.n_sensors() != suite.n_sensors())
        throw std::invalid_argument("lsq_estimate: record sensor count mismatch");
    double condition = 0.0;
    const MatrixXd upsilon = lsq_matrix(suite, &condition);
    const MatrixXd fprime = record.values.rowwise() - suite.ref_offset.transpose();
    CoefficientTrajectory out(record.times, fprime * upsilon.transpose());
    if (!(condition <= 1e12)) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "lsq: mode-response matrix ill conditioned (condition %.3e); "
                      "minimum-norm solution used",
                      condition);
        out.warnings.emplace_back(buf);
    }
    return out;
}

LseModel lse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                 const VectorXd& ref_offset) {
    require_paired(reference, record, "lse_fit");
    if (ref_offset.size() != record.n_sensors())
        throw std::invalid_argument("lse_fit: offset size mismatch");

    const MatrixXd f = record.values.rowwise() - ref_offset.transpose();
    const VectorXd w = trapezoid_time_weights(record.times);
    const MatrixXd fw = f.array().colwise() * w.array();
    const MatrixXd g = f.transpose() * fw;              // <f_m f_k>
    const MatrixXd h = fw.transpose() * reference.values;  // <f_k alpha_j>

    LseModel model;
    model.offset = ref_offset;
    model.lambda = solve_normal(g, h, "lse_fit",
                                [](int k) { return "sensor " + std::to_string(k + 1); });
    return model;
}

CoefficientTrajectory lse_estimate(const LseModel& model, const MeasurementRecord& record) {
    if (record.n_sensors() != model.lambda.rows())
        throw std::invalid_argument("lse_estimate: record sensor count mismatch");
    const MatrixXd f = record.values.rowwise() - model.offset.transpose();
    return CoefficientTrajectory(record.times, f * model.lambda);
}

namespace {

// Augmented QSE regressor: [f_1..f_Ns, f_k f_m for k <= m].
MatrixXd qse_regressors(const MatrixXd& f) {
    const Eigen::Index n_t = f.rows();
    const int n_s = static_cast<int>(f.cols());
    const int n_quad = n_s * (n_s + 1) / 2;
    MatrixXd z(n_t, n_s + n_quad);
    z.leftCols(n_s) = f;
    int col = n_s;
    for (int k = 0; k < n_s; ++k)
        for (int m = k; m < n_s; ++m, ++col)
            z.col(col) = f.col(k).cwiseProduct(f.col(m));
    return z;
}

std::string qse_regressor_name(int idx, int n_s) {
    if (idx < n_s) return "sensor " + std::to_string(idx + 1);
    idx -= n_s;
    for (int k = 0; k < n_s; ++k)
        for (int m = k; m < n_s; ++m) {
            if (idx == 0)
                return "product of sensors " + std::to_string(k + 1) + " and " +
                       std::to_string(m + 1);
            --idx;
        }
    return "regressor ?";
}

}  // namespace

QseModel qse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                 const VectorXd& ref_offset) {
    require_paired(reference, record, "qse_fit");
    const int n_s = record.n_sensors();
    const MatrixXd f = record.values.rowwise() - ref_offset.transpose();
    const MatrixXd z = qse_regressors(f);
    const VectorXd w = trapezoid_time_weights(record.times);
    const MatrixXd zw = z.array().colwise() * w.array();
    const MatrixXd g = z.transpose() * zw;
    const MatrixXd h = zw.transpose() * reference.values;

    const MatrixXd beta = solve_normal(g, h, "qse_fit",
                                       [n_s](int k) { return qse_regressor_name(k, n_s); });

    QseModel model;
    model.offset = ref_offset;
    model.lambda = beta.topRows(n_s);
    model.omega = Tensor3(n_s);
    const int n_r = static_cast<int>(reference.values.cols());
    int row = n_s;
    for (int k = 0; k < n_s; ++k)
        for (int m = k; m < n_s; ++m, ++row)
            for (int j = 0; j < n_r; ++j) {
                // Off-diagonal pairs appear twice in the quadratic form.
                const double v = (k == m) ? beta(row, j) : 0.5 * beta(row, j);
                model.omega(k, m, j) = v;
                model.omega(m, k, j) = v;
            }
    return model;
}

CoefficientTrajectory qse_estimate(const QseModel& model, const MeasurementRecord& record) {
    const int n_s = static_cast<int>(model.lambda.rows());
    const int n_r = static_cast<int>(model.lambda.cols());
    if (record.n_sensors() != n_s)
        throw std::invalid_argument("qse_estimate: record sensor count mismatch");
    const MatrixXd f = record.values.rowwise() - model.offset.transpose();
    MatrixXd out = f * model.lambda;
    for (Eigen::Index t = 0; t < f.rows(); ++t)
        for (int j = 0; j < n_r; ++j) {
            double q = 0.0;
            for (int k = 0; k < n_s; ++k)
                for (int m = 0; m < n_s; ++m) q += model.omega(k, m, j) * f(t, k) * f(t, m);
            out(t, j) += q;
        }
    return CoefficientTrajectory(record.times, std::move(out));
}

namespace {

void require_uniform(const VectorXd& t, const char* who) {
    if (t.size() < 2) throw std::invalid_argument(std::string(who) + ": record too short");
    const double dt = t[1] - t[0];
    for (Eigen::Index i = 1; i < t.size(); ++i)
        if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt)
            throw std::invalid_argument(std::string(who) +
                                        ": record must be uniformly sampled (gap at index " +
                                        std::to_string(i) + ")");
}

MatrixXcd dft_columns(const MatrixXd& x) {
    Eigen::FFT<double> fft;
    MatrixXcd out(x.rows(), x.cols());
    std::vector<double> in(static_cast<std::size_t>(x.rows()));
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) in[static_cast<std::size_t>(i)] = x(i, c);
        fft.fwd(spec, in);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            out(i, c) = spec[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace

SlseModel slse_fit(const CoefficientTrajectory& reference, const MeasurementRecord& record,
                   const VectorXd& ref_offset) {
    require_paired(reference, record, "slse_fit");
    require_uniform(record.times, "slse_fit");

    const int n_total = record.n_samples();
    const int n_s = record.n_sensors();
    const int n_r = reference.n_modes();
    const double dt = record.times[1] - record.times[0];

    // 50%-overlap segments, at least 4 of them.
    const int seg_len = std::max(4, (2 * n_total) / 5);
    const int hop = std::max(1, seg_len / 2);
    if (seg_len > n_total || (n_total - seg_len) / hop + 1 < 4)
        throw std::invalid_argument("slse_fit: record too short for >= 4 overlapping segments");

    const MatrixXd f = record.values.rowwise() - ref_offset.transpose();

    std::vector<MatrixXcd> s_ff(seg_len, MatrixXcd::Zero(n_s, n_s));
    std::vector<MatrixXcd> s_fa(seg_len, MatrixXcd::Zero(n_s, n_r));
    int n_segments = 0;
    for (int start = 0; start + seg_len <= n_total; start += hop) {
        const MatrixXcd fhat = dft_columns(f.middleRows(start, seg_len));
        const MatrixXcd ahat = dft_columns(reference.values.middleRows(start, seg_len));
        for (int b = 0; b < seg_len; ++b) {
            const VectorXcd fb = fhat.row(b).transpose();
            s_ff[b] += fb.conjugate() * fb.transpose();
            s_fa[b] += fb.conjugate() * ahat.row(b);
        }
        ++n_segments;
    }

    SlseModel model;
    model.training_length = seg_len;
    model.dt = dt;
    model.offset = ref_offset;
    model.frequencies.resize(seg_len);
    for (int b = 0; b < seg_len; ++b) {
        const int signed_b = (b <= seg_len / 2) ? b : b - seg_len;
        model.frequencies[b] = static_cast<double>(signed_b) / (seg_len * dt);
    }
    model.gamma.assign(seg_len, MatrixXcd::Zero(n_s, n_r));

    double max_power = 0.0;
    for (int b = 0; b < seg_len; ++b) max_power = std::max(max_power, s_ff[b].norm());
    int excluded = 0;
    const int half = seg_len / 2;
    for (int b = 0; b <= half; ++b) {
        Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(s_ff[b]);
        cod.setThreshold(1e-10);
        const bool weak = s_ff[b].norm() < 1e-12 * max_power;
        if (weak || cod.rank() < n_s) {
            ++excluded;  // bin excluded: transfer left at zero
        } else {
            model.gamma[b] = cod.solve(s_fa[b]);
        }
        if (b == 0 || (seg_len % 2 == 0 && b == half)) {
            // Self-conjugate bins of a real signal carry a real transfer.
            model.gamma[b] = model.gamma[b].real().cast<std::complex<double>>();
        } else {
            model.gamma[seg_len - b] = model.gamma[b].conjugate();
        }
    }
    if (excluded > 0)
        model.warnings.push_back("slse_fit: " + std::to_string(excluded) + " of " +
                                 std::to_string(half + 1) +
                                 " bins had singular cross-spectra and were zeroed");
    return model;
}

MatrixXcd slse_apply_window(const SlseModel& model, const MatrixXd& window_values) {
    const int n = model.training_length;
    if (window_values.rows() != n)
        throw std::invalid_argument("slse_apply_window: window must have training_length rows");
    const MatrixXd f = window_values.rowwise() - model.offset.transpose();
    const MatrixXcd fhat = dft_columns(f);
    const int n_r = static_cast<int>(model.gamma[0].cols());
    MatrixXcd ahat(n, n_r);
    for (int b = 0; b < n; ++b) ahat.row(b) = fhat.row(b) * model.gamma[b];

    // Inverse DFT, column by column.
    Eigen::FFT<double> fft;
    MatrixXcd out(n, n_r);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n)),
        time(static_cast<std::size_t>(n));
    for (int j = 0; j < n_r; ++j) {
        for (int b = 0; b < n; ++b) spec[static_cast<std::size_t>(b)] = ahat(b, j);
        fft.inv(time, spec);
        for (int b = 0; b < n; ++b) out(b, j) = time[static_cast<std::size_t>(b)];
    }
    return out;
}

CoefficientTrajectory slse_estimate(const SlseModel& model, const MeasurementRecord& record) {
    require_uniform(record.times, "slse_estimate");
    if (record.n_sensors() != model.offset.size())
        throw std::invalid_argument("slse_estimate: record sensor count mismatch");
    const int n = record.n_samples();
    const int len = model.training_length;
    if (n < len)
        throw std::invalid_argument("slse_estimate: record shorter than the model window (" +
                                    std::to_string(n) + " < " + std::to_string(len) + ")");
    const double dt = record.times[1] - record.times[0];
    if (std::abs(dt - model.dt) > 1e-9 * model.dt)
        throw std::invalid_argument("slse_estimate: record sampling interval differs from training");

    const int n_r = static_cast<int>(model.gamma[0].cols());
    MatrixXd out(n, n_r);
    double imag_residue = 0.0;
    int pos = 0;
    while (pos < n) {
        int start = pos;
        int emit_from = 0;
        if (start + len > n) {  // final partial window: reuse the tail
            start = n - len;
            emit_from = pos - start;
        }
        const MatrixXcd win = slse_apply_window(model, record.values.middleRows(start, len));
        imag_residue = std::max(imag_residue, win.imag().cwiseAbs().maxCoeff());
        out.middleRows(pos, len - emit_from) = win.bottomRows(len - emit_from).real();
        pos += len - emit_from;
    }

    CoefficientTrajectory traj(record.times, std::move(out));
    traj.warnings = model.warnings;
    if (imag_residue > 1e-10)
        traj.warnings.push_back("slse_estimate: imaginary residue " +
                                std::to_string(imag_residue) + " exceeded 1e-10");
    return traj;
}

}  // namespace flowest
