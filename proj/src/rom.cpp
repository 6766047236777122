#include "flowest/rom.hpp"

#include <cmath>

namespace flowest {

void RomCoefficients::validate() const {
    const int n = n_modes();
    if (linear.rows() != n || linear.cols() != n || quadratic.n() != n)
        throw std::invalid_argument("RomCoefficients: arrays not sized consistently with " +
                                    std::to_string(n) + " modes");
    auto finite = [](double v) { return std::isfinite(v); };
    for (int r = 0; r < n; ++r)
        if (!finite(constant[r])) throw std::invalid_argument("RomCoefficients: non-finite A");
    for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r)
            if (!finite(linear(k, r))) throw std::invalid_argument("RomCoefficients: non-finite C");
    for (double v : quadratic.flat())
        if (!finite(v)) throw std::invalid_argument("RomCoefficients: non-finite B");
}

RomCoefficients make_rom(VectorXd constant, MatrixXd linear, Tensor3 quadratic) {
    RomCoefficients rom{std::move(constant), std::move(linear), std::move(quadratic)};
    rom.validate();
    return rom;
}

VectorField convective_term(const VectorField& carrier, const VectorField& field) {
    if (!carrier.grid()->same_layout(*field.grid()))
        throw std::invalid_argument("convective_term: grid mismatch");
    const Grid& g = *field.grid();
    const int dim = g.n_axes();
    VectorField out(field.grid());
    for (int c = 0; c < dim; ++c) {
        VectorXd acc = VectorXd::Zero(static_cast<Eigen::Index>(g.n_points()));
        for (int d = 0; d < dim; ++d)
            acc.array() += carrier.component(d).array() *
                           derivative_along_axis(g, field.component(c), d).array();
        out.component(c) = acc;
    }
    return out;
}

Tensor3 assemble_quadratic_tensor(const PodBasis& basis) {
    const int n = basis.n_retained();
    const Grid& g = *basis.grid();
    for (int a = 0; a < g.n_axes(); ++a)
        if (g.dim(a) < 3)
            throw std::invalid_argument("assemble_quadratic_tensor: axis " + std::to_string(a) +
                                        " has fewer than 3 points, derivative stencil undefined");

    // Precompute all component gradients of every mode.
    const int dim = g.n_axes();
    std::vector<std::vector<VectorXd>> grad(n);  // grad[s][c*dim+d] = d(mode_s,c)/dx_d
    for (int s = 0; s < n; ++s) {
        grad[s].resize(static_cast<std::size_t>(dim) * dim);
        for (int c = 0; c < dim; ++c)
            for (int d = 0; d < dim; ++d)
                grad[s][static_cast<std::size_t>(c) * dim + d] =
                    derivative_along_axis(g, basis.modes[s].component(c), d);
    }

    Tensor3 b(n);
    const VectorXd& w = g.quad_weights();
    for (int k = 0; k < n; ++k) {
        for (int s = 0; s < n; ++s) {
            VectorField conv(basis.grid());
            for (int c = 0; c < dim; ++c) {
                VectorXd acc = VectorXd::Zero(w.size());
                for (int d = 0; d < dim; ++d)
                    acc.array() += basis.modes[k].component(d).array() *
                                   grad[s][static_cast<std::size_t>(c) * dim + d].array();
                conv.component(c) = acc;
            }
            for (int r = 0; r < n; ++r) b(k, s, r) = inner_product(conv, basis.modes[r]);
        }
    }
    return b;
}

VectorXd rhs(const RomCoefficients& rom, const VectorXd& a) {
    const int n = rom.n_modes();
    if (a.size() != n) throw std::invalid_argument("rhs: coefficient vector size mismatch");
    VectorXd out = rom.constant + rom.linear.transpose() * a;
    for (int r = 0; r < n; ++r) {
        double q = 0.0;
        for (int k = 0; k < n; ++k)
            for (int s = 0; s < n; ++s) q += rom.quadratic(k, s, r) * a[k] * a[s];
        out[r] -= q;
    }
    return out;
}

VectorXd residual(const RomCoefficients& rom, const VectorXd& a, const VectorXd& adot) {
    if (adot.size() != rom.n_modes())
        throw std::invalid_argument("residual: adot size mismatch");
    return adot - rhs(rom, a);
}

CoefficientTrajectory integrate(const RomCoefficients& rom, const VectorXd& a0, double t0,
                                double t1, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
    if (!(t1 > t0)) throw std::invalid_argument("integrate: empty time span");
    if (a0.size() != rom.n_modes())
        throw std::invalid_argument("integrate: initial state size mismatch");

    const double span = t1 - t0;
    const auto n_steps = static_cast<Eigen::Index>(std::ceil(span / dt - 1e-12));

    VectorXd times(n_steps + 1);
    MatrixXd values(n_steps + 1, rom.n_modes());
    times[0] = t0;
    values.row(0) = a0;

    VectorXd a = a0;
    double t = t0;
    for (Eigen::Index i = 0; i < n_steps; ++i) {
        const double h = (i + 1 == n_steps) ? (t1 - t) : dt;
        const VectorXd k1 = rhs(rom, a);
        const VectorXd k2 = rhs(rom, a + 0.5 * h * k1);
        const VectorXd k3 = rhs(rom, a + 0.5 * h * k2);
        const VectorXd k4 = rhs(rom, a + h * k3);
        a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = (i + 1 == n_steps) ? t1 : t0 + dt * static_cast<double>(i + 1);
        if (!a.allFinite())
            throw std::runtime_error("integrate: trajectory blew up; last valid time t=" +
                                     std::to_string(times[i]));
        times[i + 1] = t;
        values.row(i + 1) = a;
    }
    return CoefficientTrajectory(std::move(times), std::move(values));
}

RomCoefficients transform(const RomCoefficients& rom, const MatrixXd& m) {
    const int n = rom.n_modes();
    if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument("transform: change-of-basis matrix must be n_modes square");

    // b = m a, a = m^{-1} b. bdot_p = m_pr adot_r.
    const MatrixXd minv = m.inverse();

    RomCoefficients out;
    out.constant = m * rom.constant;
    // C'_qp = sum_{k,r} m_pr C_kr minv_kq  (coefficient of b_q in equation p)
    out.linear = MatrixXd::Zero(n, n);
    for (int q = 0; q < n; ++q)
        for (int p = 0; p < n; ++p) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k)
                for (int r = 0; r < n; ++r) acc += m(p, r) * rom.linear(k, r) * minv(k, q);
            out.linear(q, p) = acc;
        }
    out.quadratic = Tensor3(n);
    for (int q = 0; q < n; ++q)
        for (int u = 0; u < n; ++u)
            for (int p = 0; p < n; ++p) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    for (int s = 0; s < n; ++s)
                        for (int r = 0; r < n; ++r)
                            acc += m(p, r) * rom.quadratic(k, s, r) * minv(k, q) * minv(s, u);
                out.quadratic(q, u, p) = acc;
            }
    return out;
}

RomCoefficients subsystem(const RomCoefficients& rom, int n) {
    if (n < 1 || n > rom.n_modes())
        throw std::invalid_argument("subsystem: n outside [1, n_modes]");
    RomCoefficients out;
    out.constant = rom.constant.head(n);
    out.linear = rom.linear.topLeftCorner(n, n);
    out.quadratic = Tensor3(n);
    for (int k = 0; k < n; ++k)
        for (int s = 0; s < n; ++s)
            for (int r = 0; r < n; ++r) out.quadratic(k, s, r) = rom.quadratic(k, s, r);
    return out;
}

RomRecord to_record(const RomCoefficients& rom) {
    RomRecord rec;
    rec.n_modes = rom.n_modes();
    rec.constant = rom.constant;
    rec.linear = rom.linear;
    rec.quad = rom.quadratic.flat();
    return rec;
}

RomCoefficients from_record(const RomRecord& rec) {
    return make_rom(rec.constant, rec.linear, Tensor3(rec.n_modes, rec.quad));
}

}  // namespace flowest
