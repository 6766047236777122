#include "flowest/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace flowest {

CoefficientTrajectory::CoefficientTrajectory(VectorXd t, MatrixXd v)
    : times(std::move(t)), values(std::move(v)) {
    if (times.size() != values.rows())
        throw std::invalid_argument("CoefficientTrajectory: " + std::to_string(times.size()) +
                                    " times vs " + std::to_string(values.rows()) + " rows");
    for (Eigen::Index i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument(
                "CoefficientTrajectory: times not strictly increasing at index " +
                std::to_string(i));
}

MatrixXd CoefficientTrajectory::sample_at(const VectorXd& query) const {
    return resample_columns(times, values, query);
}

CoefficientTrajectory CoefficientTrajectory::window(double t0, double t1) const {
    const double pad = 1e-12 * std::max(1.0, std::abs(t1 - t0));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < times.size(); ++i)
        if (times[i] >= t0 - pad && times[i] <= t1 + pad) keep.push_back(i);
    VectorXd t(keep.size());
    MatrixXd v(static_cast<Eigen::Index>(keep.size()), values.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        t[static_cast<Eigen::Index>(i)] = times[keep[i]];
        v.row(static_cast<Eigen::Index>(i)) = values.row(keep[i]);
    }
    CoefficientTrajectory out(std::move(t), std::move(v));
    out.warnings = warnings;
    return out;
}

MatrixXd resample_columns(const VectorXd& times, const MatrixXd& values, const VectorXd& query,
                          int max_stencil) {
    const Eigen::Index n = times.size();
    if (n == 0 || values.rows() != n)
        throw std::invalid_argument("resample_columns: empty or inconsistent samples");
    if (n == 1) return values.row(0).replicate(query.size(), 1);

    const double t_lo = times[0], t_hi = times[n - 1];
    const double pad = 1e-9 * (t_hi - t_lo);
    const int width = std::min<int>(max_stencil, static_cast<int>(n));

    MatrixXd out(query.size(), values.cols());
    for (Eigen::Index q = 0; q < query.size(); ++q) {
        double t = query[q];
        if (t < t_lo - pad || t > t_hi + pad)
            throw std::invalid_argument("resample_columns: query t=" + std::to_string(t) +
                                        " outside sampled span [" + std::to_string(t_lo) + ", " +
                                        std::to_string(t_hi) + "]");
        t = std::min(std::max(t, t_lo), t_hi);

        // Stencil of `width` consecutive samples centered on t.
        const double* begin = times.data();
        Eigen::Index hi = std::lower_bound(begin, begin + n, t) - begin;
        Eigen::Index start = std::clamp<Eigen::Index>(hi - width / 2, 0, n - width);

        // Exact hit: return the stored row (keeps node data bit-identical).
        bool exact = false;
        for (Eigen::Index j = start; j < start + width; ++j) {
            if (times[j] == t) {
                out.row(q) = values.row(j);
                exact = true;
                break;
            }
        }
        if (exact) continue;

        // Barycentric weights on the stencil, normalized by the local spacing
        // to keep the products well scaled.
        std::vector<double> w(width);
        const double scale = 4.0 / (times[start + width - 1] - times[start]);
        for (int j = 0; j < width; ++j) {
            double wj = 1.0;
            for (int k = 0; k < width; ++k)
                if (k != j) wj *= (times[start + j] - times[start + k]) * scale;
            w[j] = 1.0 / wj;
        }
        double denom = 0.0;
        Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(values.cols());
        for (int j = 0; j < width; ++j) {
            const double c = w[j] / (t - times[start + j]);
            denom += c;
            num += c * values.row(start + j);
        }
        out.row(q) = num / denom;
    }
    return out;
}

}  // namespace flowest
