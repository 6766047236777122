#include "doctest.h"

#include "flowest/estimators.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <random>

using namespace flowest;

namespace {

VectorXd uniform_times(int n, double t0, double t1) {
    VectorXd t(n);
    for (int i = 0; i < n; ++i) t[i] = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
    return t;
}

// Hand-made suite: mode responses and offsets without any grid machinery.
SensorSuite synthetic_suite(MatrixXd response, VectorXd offset) {
    SensorSuite suite;
    suite.specs.resize(response.rows());
    suite.mode_response = std::move(response);
    suite.ref_offset = std::move(offset);
    return suite;
}

VectorXd trap_weights(const VectorXd& t) {
    VectorXd w(t.size());
    w[0] = 0.5 * (t[1] - t[0]);
    w[t.size() - 1] = 0.5 * (t[t.size() - 1] - t[t.size() - 2]);
    for (Eigen::Index i = 1; i + 1 < t.size(); ++i) w[i] = 0.5 * (t[i + 1] - t[i - 1]);
    return w;
}

}  // namespace

TEST_CASE("lsq with an identity response is a passthrough") {
    const int n_t = 5, n = 3;
    const VectorXd offset = (VectorXd(n) << 1.0, -2.0, 0.5).finished();
    const SensorSuite suite = synthetic_suite(MatrixXd::Identity(n, n), offset);

    MeasurementRecord rec;
    rec.times = uniform_times(n_t, 0, 1);
    rec.values = MatrixXd::Random(n_t, n);
    const CoefficientTrajectory est = lsq_estimate(suite, rec);
    const MatrixXd expect = rec.values.rowwise() - offset.transpose();
    CHECK((est.values - expect).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(est.warnings.empty());
}

TEST_CASE("lsq recovers in-span coefficients with a full-rank suite") {
    std::mt19937_64 rng(4);
    const int n_s = 7, n_r = 4, n_t = 9;
    const MatrixXd response = MatrixXd::Random(n_s, n_r);
    const VectorXd offset = VectorXd::Random(n_s);
    const SensorSuite suite = synthetic_suite(response, offset);

    const MatrixXd truth = MatrixXd::Random(n_t, n_r);
    MeasurementRecord rec;
    rec.times = uniform_times(n_t, 0, 2);
    rec.values = (truth * response.transpose()).rowwise() + offset.transpose();

    const CoefficientTrajectory est = lsq_estimate(suite, rec);
    CHECK((est.values - truth).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("underdetermined lsq warns about conditioning but returns") {
    const int n_t = 6;
    const MatrixXd response = MatrixXd::Random(2, 6);  // the paper's 2-sensor shape
    const SensorSuite suite = synthetic_suite(response, VectorXd::Zero(2));
    MeasurementRecord rec;
    rec.times = uniform_times(n_t, 0, 1);
    rec.values = MatrixXd::Random(n_t, 2);

    const CoefficientTrajectory est = lsq_estimate(suite, rec);
    CHECK(est.values.allFinite());
    REQUIRE(!est.warnings.empty());
    CHECK(est.warnings[0].find("ill conditioned") != std::string::npos);
}

TEST_CASE("lse: single sensor with f = 2a learns lambda = 0.5") {
    const int n_t = 40;
    const VectorXd t = uniform_times(n_t, 0, 4);
    MatrixXd alpha(n_t, 1);
    for (int i = 0; i < n_t; ++i) alpha(i, 0) = std::sin(2.0 * t[i]) + 0.2 * std::cos(5.0 * t[i]);
    MeasurementRecord rec;
    rec.times = t;
    rec.values = 2.0 * alpha;

    const LseModel model = lse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(1));
    CHECK(model.lambda(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    const CoefficientTrajectory replay = lse_estimate(model, rec);
    CHECK((replay.values - alpha).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lse with a square invertible map reproduces the training data") {
    std::mt19937_64 rng(6);
    const int n_t = 60, n = 3;
    const VectorXd t = uniform_times(n_t, 0, 6);
    MatrixXd alpha(n_t, n);
    for (int i = 0; i < n_t; ++i)
        for (int j = 0; j < n; ++j) alpha(i, j) = std::sin((j + 1.0) * t[i] + 0.3 * j);

    MatrixXd m(n, n);
    m << 2, 0.5, -1, 0, 1.5, 0.2, 0.7, -0.3, 1.0;
    const VectorXd offset = (VectorXd(n) << 0.4, -1.0, 2.0).finished();
    MeasurementRecord rec;
    rec.times = t;
    rec.values = (alpha * m.transpose()).rowwise() + offset.transpose();

    const LseModel model = lse_fit(CoefficientTrajectory(t, alpha), rec, offset);
    const CoefficientTrajectory replay = lse_estimate(model, rec);
    CHECK((replay.values - alpha).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lse normal equations match an independent dense solve") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> dist;
    const int n_t = 80, n_s = 3, n_r = 2;
    const VectorXd t = uniform_times(n_t, 0, 8);
    MatrixXd f(n_t, n_s), alpha(n_t, n_r);
    for (int i = 0; i < n_t; ++i) {
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
        for (int j = 0; j < n_r; ++j)
            alpha(i, j) = 0.8 * f(i, j) - 0.3 * f(i, 2) + 0.1 * f(i, 0) * f(i, 1);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const LseModel model = lse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));

    // Oracle: explicit trapezoid-weighted normal equations, LU solve.
    const VectorXd w = trap_weights(t);
    MatrixXd g = MatrixXd::Zero(n_s, n_s), h = MatrixXd::Zero(n_s, n_r);
    for (int i = 0; i < n_t; ++i) {
        g += w[i] * f.row(i).transpose() * f.row(i);
        h += w[i] * f.row(i).transpose() * alpha.row(i);
    }
    const MatrixXd expect = g.fullPivLu().solve(h);
    CHECK((model.lambda - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lse training residuals are orthogonal to the measurements") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> dist;
    const int n_t = 64, n_s = 2, n_r = 3;
    const VectorXd t = uniform_times(n_t, 0, 3);
    MatrixXd f(n_t, n_s), alpha(n_t, n_r);
    for (int i = 0; i < n_t; ++i) {
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
        for (int j = 0; j < n_r; ++j) alpha(i, j) = dist(rng);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const LseModel model = lse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));
    const MatrixXd resid = alpha - lse_estimate(model, rec).values;

    const VectorXd w = trap_weights(t);
    for (int j = 0; j < n_r; ++j)
        for (int k = 0; k < n_s; ++k) {
            const double ip = (resid.col(j).array() * f.col(k).array() * w.array()).sum();
            const double scale =
                std::sqrt((resid.col(j).array().square() * w.array()).sum()) *
                    std::sqrt((f.col(k).array().square() * w.array()).sum()) +
                1e-30;
            CHECK(std::abs(ip) < 1e-10 * std::max(1.0, scale));
        }
}

TEST_CASE("lse rejects singular measurement covariance naming a sensor") {
    const int n_t = 30;
    const VectorXd t = uniform_times(n_t, 0, 3);
    MatrixXd f(n_t, 2);
    for (int i = 0; i < n_t; ++i) {
        f(i, 0) = std::sin(t[i]);
        f(i, 1) = 2.0 * f(i, 0);  // exactly dependent
    }
    MatrixXd alpha = f.col(0);
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    CHECK_THROWS_WITH_AS(
        lse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(2)),
        doctest::Contains("sensor"), std::invalid_argument);
}

TEST_CASE("qse on purely linear data degenerates to lse") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> dist;
    const int n_t = 200, n_s = 2, n_r = 2;
    const VectorXd t = uniform_times(n_t, 0, 10);
    MatrixXd f(n_t, n_s);
    for (int i = 0; i < n_t; ++i)
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
    MatrixXd m(n_s, n_r);
    m << 1.0, -0.5, 0.3, 2.0;
    const MatrixXd alpha = f * m;

    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const CoefficientTrajectory ref(t, alpha);
    const QseModel qse = qse_fit(ref, rec, VectorXd::Zero(n_s));
    const LseModel lse = lse_fit(ref, rec, VectorXd::Zero(n_s));

    double omega_max = 0.0;
    for (int k = 0; k < n_s; ++k)
        for (int mm = 0; mm < n_s; ++mm)
            for (int j = 0; j < n_r; ++j)
                omega_max = std::max(omega_max, std::abs(qse.omega(k, mm, j)));
    CHECK(omega_max < 1e-8);
    CHECK((qse.lambda - lse.lambda).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("qse identifies a pure square: alpha = f^2") {
    const int n_t = 50;
    const VectorXd t = uniform_times(n_t, 0, 5);
    MatrixXd f(n_t, 1), alpha(n_t, 1);
    for (int i = 0; i < n_t; ++i) {
        f(i, 0) = std::sin(1.7 * t[i]) + 0.4 * std::cos(3.1 * t[i]);
        alpha(i, 0) = f(i, 0) * f(i, 0);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const QseModel model = qse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(1));
    CHECK(std::abs(model.lambda(0, 0)) < 1e-10);
    CHECK(model.omega(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("qse matches an independent augmented least-squares oracle") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> dist;
    const int n_t = 120, n_s = 2, n_r = 2;
    const VectorXd t = uniform_times(n_t, 0, 12);
    MatrixXd f(n_t, n_s), alpha(n_t, n_r);
    for (int i = 0; i < n_t; ++i) {
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
        alpha(i, 0) = 0.5 * f(i, 0) + 0.7 * f(i, 0) * f(i, 1) - 0.2 * f(i, 1) * f(i, 1);
        alpha(i, 1) = -f(i, 1) + 0.3 * f(i, 0) * f(i, 0) + dist(rng) * 0.01;
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const QseModel model = qse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));

    // Oracle: explicit weighted regressors [f1 f2 f1f1 f1f2 f2f2].
    const VectorXd w = trap_weights(t);
    MatrixXd z(n_t, 5);
    z.col(0) = f.col(0);
    z.col(1) = f.col(1);
    z.col(2) = f.col(0).cwiseProduct(f.col(0));
    z.col(3) = f.col(0).cwiseProduct(f.col(1));
    z.col(4) = f.col(1).cwiseProduct(f.col(1));
    const MatrixXd zw = z.array().colwise() * w.array();
    const MatrixXd beta = (z.transpose() * zw).fullPivLu().solve(zw.transpose() * alpha);

    CHECK((model.lambda - beta.topRows(2)).cwiseAbs().maxCoeff() < 1e-10);
    for (int j = 0; j < n_r; ++j) {
        CHECK(model.omega(0, 0, j) == doctest::Approx(beta(2, j)).epsilon(1e-9));
        CHECK(model.omega(0, 1, j) == doctest::Approx(0.5 * beta(3, j)).epsilon(1e-9));
        CHECK(model.omega(1, 1, j) == doctest::Approx(beta(4, j)).epsilon(1e-9));
    }

    // Nested-regressor property: QSE training error never exceeds LSE's.
    const LseModel lse = lse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));
    const MatrixXd r_lse = alpha - lse_estimate(lse, rec).values;
    const MatrixXd r_qse = alpha - qse_estimate(model, rec).values;
    double e_lse = 0.0, e_qse = 0.0;
    for (int i = 0; i < n_t; ++i) {
        e_lse += w[i] * r_lse.row(i).squaredNorm();
        e_qse += w[i] * r_qse.row(i).squaredNorm();
    }
    CHECK(e_qse <= e_lse + 1e-12);
}

TEST_CASE("slse learns a pure delay as a phase ramp") {
    // 160 samples, dt = 1/32: the fitted window is 64 samples, so a 1 Hz
    // sinusoid lands exactly on bin 2 of the window DFT.
    const int n_t = 160;
    const double dt = 1.0 / 32.0, freq = 1.0, delay = 0.1;
    VectorXd t(n_t);
    MatrixXd f(n_t, 1), alpha(n_t, 1);
    for (int i = 0; i < n_t; ++i) {
        t[i] = dt * i;
        f(i, 0) = std::sin(2.0 * M_PI * freq * t[i]);
        alpha(i, 0) = std::sin(2.0 * M_PI * freq * (t[i] - delay));
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const SlseModel model = slse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(1));
    REQUIRE(model.training_length == 64);

    const int bin = 2;
    CHECK(model.frequencies[bin] == doctest::Approx(freq).epsilon(1e-12));
    const std::complex<double> gamma = model.gamma[bin](0, 0);
    CHECK(std::abs(gamma) == doctest::Approx(1.0).epsilon(1e-6));
    const double expected_phase = -2.0 * M_PI * freq * delay;
    CHECK(std::arg(gamma) == doctest::Approx(expected_phase).epsilon(1e-6));
    // Unexcited bins are zeroed with a warning.
    CHECK(!model.warnings.empty());
    CHECK(model.gamma[5].norm() == 0.0);
}

TEST_CASE("slse on broadband alpha = 2 f learns a flat transfer") {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> dist;
    const int n_t = 200;
    VectorXd t(n_t);
    MatrixXd f(n_t, 1);
    for (int i = 0; i < n_t; ++i) {
        t[i] = 0.05 * i;
        f(i, 0) = dist(rng);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const SlseModel model =
        slse_fit(CoefficientTrajectory(t, MatrixXd(2.0 * f)), rec, VectorXd::Zero(1));
    for (int b = 0; b < model.training_length; ++b) {
        if (model.gamma[b].norm() == 0.0) continue;
        CHECK(std::abs(model.gamma[b](0, 0) - 2.0) < 1e-8);
    }
}

TEST_CASE("slse estimation equals time-domain circular convolution") {
    std::mt19937_64 rng(18);
    std::normal_distribution<double> dist;
    const int n_t = 170, n_s = 2, n_r = 2;
    VectorXd t(n_t);
    MatrixXd f(n_t, n_s), alpha(n_t, n_r);
    for (int i = 0; i < n_t; ++i) {
        t[i] = 0.1 * i;
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
        alpha(i, 0) = 0.6 * f(i, 0) - 0.2 * (i > 0 ? f(i - 1, 1) : 0.0);
        alpha(i, 1) = f(i, 1);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const SlseModel model = slse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));

    const int len = model.training_length;
    MeasurementRecord window;
    window.times = t.head(len);
    window.values = f.topRows(len);
    const MatrixXcd spectral = slse_apply_window(model, window.values);
    CHECK(spectral.imag().cwiseAbs().maxCoeff() < 1e-10);

    // Oracle: kernel = inverse DFT of gamma per (k,j), then circular convolution.
    Eigen::FFT<double> fft;
    std::vector<MatrixXd> kernel(len, MatrixXd(n_s, n_r));
    for (int k = 0; k < n_s; ++k)
        for (int j = 0; j < n_r; ++j) {
            std::vector<std::complex<double>> spec(len), time(len);
            for (int b = 0; b < len; ++b) spec[b] = model.gamma[b](k, j);
            fft.inv(time, spec);
            for (int b = 0; b < len; ++b) kernel[b](k, j) = time[b].real();
        }
    MatrixXd conv = MatrixXd::Zero(len, n_r);
    for (int m = 0; m < len; ++m)
        for (int tau = 0; tau < len; ++tau) {
            const int src = ((m - tau) % len + len) % len;
            conv.row(m) += window.values.row(src) * kernel[tau];
        }
    CHECK((spectral.real() - conv).cwiseAbs().maxCoeff() < 1e-8);

    // Windowed estimation returns real series of the full record length.
    const CoefficientTrajectory est = slse_estimate(model, rec);
    CHECK(est.values.rows() == n_t);
    CHECK(est.values.allFinite());
}

TEST_CASE("slse transfer matrices honor conjugate bin symmetry") {
    std::mt19937_64 rng(20);
    std::normal_distribution<double> dist;
    const int n_t = 150, n_s = 2;
    VectorXd t(n_t);
    MatrixXd f(n_t, n_s), alpha(n_t, 1);
    for (int i = 0; i < n_t; ++i) {
        t[i] = 0.2 * i;
        for (int k = 0; k < n_s; ++k) f(i, k) = dist(rng);
        alpha(i, 0) = f(i, 0) + 0.5 * f(i, 1);
    }
    MeasurementRecord rec;
    rec.times = t;
    rec.values = f;
    const SlseModel model = slse_fit(CoefficientTrajectory(t, alpha), rec, VectorXd::Zero(n_s));
    const int len = model.training_length;
    for (int b = 1; b < len; ++b) {
        const MatrixXcd diff = model.gamma[len - b] - model.gamma[b].conjugate();
        CHECK(diff.norm() == 0.0);
    }
}

TEST_CASE("slse requires uniform sampling") {
    VectorXd t(12);
    for (int i = 0; i < 12; ++i) t[i] = i * i * 0.1;
    MeasurementRecord rec;
    rec.times = t;
    rec.values = MatrixXd::Random(12, 1);
    CHECK_THROWS_WITH_AS(
        slse_fit(CoefficientTrajectory(t, MatrixXd::Random(12, 1)), rec, VectorXd::Zero(1)),
        doctest::Contains("uniform"), std::invalid_argument);
}
