#include "doctest.h"

#include "flowest/rom.hpp"
#include "flowest/synth.hpp"

#include <cmath>
#include <random>

using namespace flowest;

namespace {

RomCoefficients random_rom(int n, std::mt19937_64& rng, double quad_scale = 0.3) {
    std::normal_distribution<double> dist;
    RomCoefficients rom;
    rom.constant = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return dist(rng); });
    rom.linear = MatrixXd::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return dist(rng); });
    rom.quadratic = Tensor3(n);
    for (int k = 0; k < n; ++k)
        for (int s = 0; s < n; ++s)
            for (int r = 0; r < n; ++r) rom.quadratic(k, s, r) = quad_scale * dist(rng);
    return rom;
}

PodBasis constant_mode_basis(const GridPtr& g, int n) {
    PodBasis basis;
    basis.reference = VectorField(g);
    for (int k = 0; k < n; ++k) {
        VectorField m(g);
        m.component(k % 2).setConstant(1.0 + k);
        basis.modes.push_back(std::move(m));
    }
    basis.eigenvalues = VectorXd::Ones(n);
    return basis;
}

}  // namespace

TEST_CASE("residual with zero state is minus the constant term") {
    std::mt19937_64 rng(1);
    const RomCoefficients rom = random_rom(4, rng);
    const VectorXd zero = VectorXd::Zero(4);
    CHECK((residual(rom, zero, zero) + rom.constant).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("linear consistency: adot = C^T a gives zero residual when A = B = 0") {
    std::mt19937_64 rng(2);
    RomCoefficients rom = random_rom(3, rng, 0.0);
    rom.constant.setZero();
    const VectorXd a = VectorXd::Random(3);
    const VectorXd adot = rom.linear.transpose() * a;
    CHECK(residual(rom, a, adot).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual matches a triple-loop oracle") {
    std::mt19937_64 rng(3);
    const int n = 5;
    const RomCoefficients rom = random_rom(n, rng);
    const VectorXd a = VectorXd::Random(n);
    const VectorXd adot = VectorXd::Random(n);
    const VectorXd r = residual(rom, a, adot);

    for (int rr = 0; rr < n; ++rr) {
        double expect = adot[rr] - rom.constant[rr];
        for (int k = 0; k < n; ++k) expect -= rom.linear(k, rr) * a[k];
        for (int k = 0; k < n; ++k)
            for (int s = 0; s < n; ++s) expect += rom.quadratic(k, s, rr) * a[k] * a[s];
        CHECK(r[rr] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("quadratic tensor vanishes for spatially constant modes") {
    const auto g = make_uniform_grid({8, 8}, {{0.0, 1.0}, {0.0, 1.0}});
    const Tensor3 b = assemble_quadratic_tensor(constant_mode_basis(g, 3));
    double max_abs = 0.0;
    for (double v : b.flat()) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs < 1e-12);  // stencil coefficients cancel up to coordinate rounding
}

TEST_CASE("quadratic tensor matches the closed-form convection integral") {
    // Modes varying along x only: m0 = (sin(2 pi x), 0), m1 = (sin(4 pi x), 0),
    // m2 = (cos(2 pi x), 0). Entry (0,1,0): integral over the unit square of
    // sin(2 pi x) * d/dx sin(4 pi x) * sin(2 pi x) = 4 pi * (-1/4) = -pi,
    // using sin^2(a) cos(2a) integrating to -1/4 over a period.
    const auto g = make_uniform_grid({161, 5}, {{0.0, 1.0}, {0.0, 1.0}});
    PodBasis basis;
    basis.reference = VectorField(g);
    auto wave = [&](double k, bool cos_wave) {
        VectorField m(g);
        std::size_t p = 0;
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 161; ++i, ++p) {
                const double x = g->coords(0)[i];
                m.component(0)[static_cast<Eigen::Index>(i + 161 * j)] =
                    cos_wave ? std::cos(k * x) : std::sin(k * x);
            }
        return m;
    };
    basis.modes.push_back(wave(2 * M_PI, false));
    basis.modes.push_back(wave(4 * M_PI, false));
    basis.modes.push_back(wave(2 * M_PI, true));
    basis.eigenvalues = VectorXd::Ones(3);

    const Tensor3 b = assemble_quadratic_tensor(basis);
    CHECK(b(0, 1, 0) == doctest::Approx(-M_PI).epsilon(1e-3));
    // (0,0,2): sin * d/dx sin * cos = 2 pi sin cos^2 integrates to 0.
    CHECK(std::abs(b(0, 0, 2)) < 1e-3);
}

TEST_CASE("quadratic tensor matches an explicit per-entry assembly") {
    const auto g = make_uniform_grid({24, 24}, {{0.0, 1.0}, {0.0, 1.0}});
    const PodBasis basis = make_modes(g, 3, ModeFamily::Trigonometric, 77);
    const Tensor3 b = assemble_quadratic_tensor(basis);

    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s) {
            const VectorField conv = convective_term(basis.modes[k], basis.modes[s]);
            for (int r = 0; r < 3; ++r) {
                const double expect = inner_product(conv, basis.modes[r]);
                CHECK(b(k, s, r) == doctest::Approx(expect).epsilon(1e-13));
            }
        }
}

TEST_CASE("tensor assembly is bilinear in the modes") {
    const auto g = make_uniform_grid({16, 16}, {{0.0, 1.0}, {0.0, 1.0}});
    PodBasis basis = make_modes(g, 3, ModeFamily::Trigonometric, 5);
    const Tensor3 b1 = assemble_quadratic_tensor(basis);

    const double alpha = 2.5;
    basis.modes[1] *= alpha;
    const Tensor3 b2 = assemble_quadratic_tensor(basis);
    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s)
            for (int r = 0; r < 3; ++r) {
                int count = (k == 1) + (s == 1) + (r == 1);
                const double expect = b1(k, s, r) * std::pow(alpha, count);
                CHECK(b2(k, s, r) == doctest::Approx(expect).epsilon(1e-12));
            }
}

TEST_CASE("tensor assembly demands three points per axis") {
    const auto g = make_uniform_grid({2, 8}, {{0.0, 1.0}, {0.0, 1.0}});
    CHECK_THROWS_WITH_AS(assemble_quadratic_tensor(constant_mode_basis(g, 2)),
                         doctest::Contains("3 points"), std::invalid_argument);
}

TEST_CASE("integration of the trivial system is constant") {
    RomCoefficients rom;
    rom.constant = VectorXd::Zero(2);
    rom.linear = MatrixXd::Zero(2, 2);
    rom.quadratic = Tensor3(2);
    VectorXd a0(2);
    a0 << 1.5, -0.25;
    const CoefficientTrajectory traj = integrate(rom, a0, 0.0, 2.0, 0.1);
    CHECK((traj.values.rowwise() - a0.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(traj.times[traj.times.size() - 1] == doctest::Approx(2.0));
}

TEST_CASE("scalar decay integrates at fourth order") {
    RomCoefficients rom;
    rom.constant = VectorXd::Zero(1);
    rom.linear = MatrixXd::Constant(1, 1, -1.0);
    rom.quadratic = Tensor3(1);
    VectorXd a0 = VectorXd::Ones(1);

    std::vector<double> dts{0.1, 0.05, 0.025};
    std::vector<double> errs;
    for (double dt : dts) {
        const CoefficientTrajectory traj = integrate(rom, a0, 0.0, 1.0, dt);
        errs.push_back(std::abs(traj.values(traj.values.rows() - 1, 0) - std::exp(-1.0)));
    }
    const double slope01 = std::log2(errs[0] / errs[1]);
    const double slope12 = std::log2(errs[1] / errs[2]);
    CHECK(slope01 == doctest::Approx(4.0).epsilon(0.075));
    CHECK(slope12 == doctest::Approx(4.0).epsilon(0.075));
}

TEST_CASE("two-mode quadratic system passes the step-halving oracle") {
    std::mt19937_64 rng(7);
    const RomCoefficients rom = random_rom(2, rng, 0.4);
    VectorXd a0(2);
    a0 << 0.3, -0.2;

    const double t1 = 1.0;
    auto end_state = [&](double dt) {
        const CoefficientTrajectory traj = integrate(rom, a0, 0.0, t1, dt);
        return VectorXd(traj.values.row(traj.values.rows() - 1));
    };
    const VectorXd coarse = end_state(0.02);
    const VectorXd fine = end_state(0.01);
    const VectorXd finest = end_state(0.005);
    const double r = (coarse - fine).norm() / (fine - finest).norm();
    CHECK(r == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("residual vanishes along integrated trajectories") {
    std::mt19937_64 rng(9);
    const RomCoefficients rom = random_rom(3, rng, 0.2);
    VectorXd a0(3);
    a0 << 0.1, 0.2, -0.1;
    const CoefficientTrajectory traj = integrate(rom, a0, 0.0, 0.5, 0.01);
    for (Eigen::Index i = 0; i < traj.times.size(); ++i) {
        const VectorXd a = traj.values.row(i);
        CHECK(residual(rom, a, rhs(rom, a)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("blow-up reports the last valid time") {
    // da/dt = a^2 from a(0)=2 escapes at t = 0.5.
    RomCoefficients rom;
    rom.constant = VectorXd::Zero(1);
    rom.linear = MatrixXd::Zero(1, 1);
    rom.quadratic = Tensor3(1);
    rom.quadratic(0, 0, 0) = -1.0;
    CHECK_THROWS_WITH_AS(integrate(rom, 2.0 * VectorXd::Ones(1), 0.0, 1.0, 0.01),
                         doctest::Contains("last valid time"), std::runtime_error);
}

TEST_CASE("orthogonal change of basis commutes with integration") {
    std::mt19937_64 rng(21);
    const RomCoefficients rom = random_rom(3, rng, 0.2);
    // Random orthogonal matrix via QR.
    const MatrixXd gauss = MatrixXd::Random(3, 3);
    const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(gauss).householderQ();
    const RomCoefficients rotated = transform(rom, q);

    VectorXd a0(3);
    a0 << 0.2, -0.1, 0.15;
    const CoefficientTrajectory orig = integrate(rom, a0, 0.0, 1.0, 0.005);
    const CoefficientTrajectory rot = integrate(rotated, q * a0, 0.0, 1.0, 0.005);
    const MatrixXd mapped = orig.values * q.transpose();
    CHECK((rot.values - mapped).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("closed leading subsystems integrate identically") {
    // Mode 2 is driven by modes 0,1 but does not feed back.
    RomCoefficients rom;
    rom.constant = VectorXd::Zero(3);
    rom.linear = MatrixXd::Zero(3, 3);
    rom.linear(0, 0) = -0.3;
    rom.linear(1, 0) = -1.0;
    rom.linear(0, 1) = 1.0;
    rom.linear(1, 1) = -0.3;
    rom.linear(2, 2) = -0.5;
    rom.quadratic = Tensor3(3);
    rom.quadratic(0, 1, 2) = -0.8;  // forces mode 2 only

    const RomCoefficients sub = subsystem(rom, 2);
    VectorXd a0(3);
    a0 << 1.0, 0.0, 0.2;
    const CoefficientTrajectory full = integrate(rom, a0, 0.0, 2.0, 0.01);
    const CoefficientTrajectory lead = integrate(sub, a0.head(2), 0.0, 2.0, 0.01);
    CHECK((full.values.leftCols(2) - lead.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rom records round trip through both formats") {
    std::mt19937_64 rng(33);
    const RomCoefficients rom = random_rom(4, rng);
    for (auto format : {FileFormat::TextTable, FileFormat::RawBinary}) {
        const char* path = "/tmp/flowest_rom_rt";
        save_rom_record(to_record(rom), path, format);
        const RomCoefficients back = from_record(load_rom_record(path));
        CHECK((back.constant - rom.constant).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.linear - rom.linear).cwiseAbs().maxCoeff() == 0.0);
        for (int k = 0; k < 4; ++k)
            for (int s = 0; s < 4; ++s)
                for (int r = 0; r < 4; ++r)
                    CHECK(back.quadratic(k, s, r) == rom.quadratic(k, s, r));
        std::remove(path);
    }
}
