#include "flowest/observer.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace flowest {

ObserverVariant observer_variant_from_name(const std::string& name) {
    if (name == "klsq" || name == "k-lsq" || name == "K-LSQ") return ObserverVariant::KLsq;
    if (name == "klse" || name == "k-lse" || name == "K-LSE") return ObserverVariant::KLse;
    throw std::invalid_argument("unknown observer variant '" + name + "'");
}

std::string observer_variant_name(ObserverVariant v) {
    return v == ObserverVariant::KLsq ? "k-lsq" : "k-lse";
}

double default_c_r(ObserverVariant v) { return v == ObserverVariant::KLsq ? 10.0 : 0.1; }

ObserverProblem assemble_problem(const RomCoefficients& rom, const SensorSuite& suite,
                                 const MeasurementRecord& record, ObserverVariant variant,
                                 const LseModel* static_model, double c_r, int n_nodes) {
    if (record.n_samples() < 2)
        throw std::invalid_argument("assemble_problem: degenerate window (need >= 2 samples)");
    if (n_nodes <= 0) n_nodes = record.n_samples();
    if (n_nodes < 2)
        throw std::invalid_argument("assemble_problem: degenerate window (< 2 nodes)");
    if (variant == ObserverVariant::KLse && static_model == nullptr)
        throw std::invalid_argument("assemble_problem: K-LSE needs a fitted LSE model");
    if (suite.n_modes() != rom.n_modes())
        throw std::invalid_argument("assemble_problem: suite/rom mode count mismatch");

    ObserverProblem problem;
    problem.rom = rom;
    problem.variant = variant;
    problem.c_r = c_r > 0 ? c_r : default_c_r(variant);
    problem.op = build_collocation(record.times[0], record.times[record.times.size() - 1],
                                   n_nodes);

    const MatrixXd f_nodes =
        resample_columns(record.times, record.values, problem.op.nodes);
    if (variant == ObserverVariant::KLsq) {
        const MatrixXd upsilon = lsq_matrix(suite);
        problem.targets =
            (f_nodes.rowwise() - suite.ref_offset.transpose()) * upsilon.transpose();
    } else {
        MeasurementRecord at_nodes;
        at_nodes.times = problem.op.nodes;
        at_nodes.values = f_nodes;
        problem.targets = lse_estimate(*static_model, at_nodes).values;
    }
    return problem;
}

MatrixXd residual_matrix(const ObserverProblem& problem, const MatrixXd& a) {
    const int n_m = problem.n_nodes();
    const int n_r = problem.n_modes();
    if (a.rows() != n_m || a.cols() != n_r)
        throw std::invalid_argument("residual_matrix: node-value shape mismatch");

    MatrixXd r = problem.op.diff * a;                       // adot at nodes
    r.rowwise() -= problem.rom.constant.transpose();        // - A
    r -= a * problem.rom.linear;                            // - C_kr a_k
    for (int m = 0; m < n_m; ++m)
        for (int rr = 0; rr < n_r; ++rr) {
            double q = 0.0;
            for (int k = 0; k < n_r; ++k)
                for (int s = 0; s < n_r; ++s)
                    q += problem.rom.quadratic(k, s, rr) * a(m, k) * a(m, s);
            r(m, rr) += q;
        }
    return r;
}

double objective(const ObserverProblem& problem, const MatrixXd& a) {
    const MatrixXd r = residual_matrix(problem, a);
    const MatrixXd mis = a - problem.targets;
    return problem.c_r * r.squaredNorm() + mis.squaredNorm();
}

namespace {

// d(non-derivative residual terms at node m)/d a(m,q), as an n_r x n_r matrix
// with rows indexed by the residual equation.
MatrixXd node_jacobian(const RomCoefficients& rom, const Eigen::RowVectorXd& a_node) {
    const int n = rom.n_modes();
    MatrixXd jac = -rom.linear.transpose();  // d(-C_kr a_k)/d a_q = -C(q,r)
    for (int r = 0; r < n; ++r)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s)
                acc += (rom.quadratic(q, s, r) + rom.quadratic(s, q, r)) * a_node[s];
            jac(r, q) += acc;
        }
    return jac;
}

}  // namespace

MatrixXd objective_gradient(const ObserverProblem& problem, const MatrixXd& a) {
    const int n_m = problem.n_nodes();
    const MatrixXd r = residual_matrix(problem, a);
    MatrixXd g = problem.op.diff.transpose() * r;
    for (int m = 0; m < n_m; ++m) {
        const MatrixXd jac = node_jacobian(problem.rom, a.row(m));
        g.row(m) += r.row(m) * jac;
    }
    g *= 2.0 * problem.c_r;
    g += 2.0 * (a - problem.targets);
    return g;
}

ObserverSolution solve(const ObserverProblem& problem, ObserverInit init,
                       const MatrixXd* init_values, double tol, int max_iter) {
    const int n_m = problem.n_nodes();
    const int n_r = problem.n_modes();
    const Eigen::Index n = static_cast<Eigen::Index>(n_m) * n_r;

    MatrixXd a;
    switch (init) {
        case ObserverInit::StaticTargets: a = problem.targets; break;
        case ObserverInit::Zeros: a = MatrixXd::Zero(n_m, n_r); break;
        case ObserverInit::Given:
            if (!init_values) throw std::invalid_argument("solve: Given init without values");
            if (init_values->rows() != n_m || init_values->cols() != n_r)
                throw std::invalid_argument("solve: init value shape mismatch");
            a = *init_values;
            break;
    }

    NewtonReport report;
    double j_val = objective(problem, a);
    MatrixXd grad = objective_gradient(problem, a);
    if (tol <= 0) tol = 1e-10 * (1.0 + std::abs(j_val));
    report.objectives.push_back(j_val);
    report.grad_norms.push_back(grad.norm());

    const auto flatten = [n_r](const MatrixXd& mat) {
        // node-major: index (m, r) -> m*n_r + r
        MatrixXd t = mat.transpose();
        return VectorXd(Eigen::Map<VectorXd>(t.data(), t.size()));
    };

    for (int it = 0; it < max_iter; ++it) {
        if (grad.norm() <= tol) {
            report.converged = true;
            break;
        }

        // Residual Jacobian J[(m,r),(p,q)] = D(m,p) delta_rq + delta_mp M^p(r,q).
        const MatrixXd r = residual_matrix(problem, a);
        MatrixXd jac = MatrixXd::Zero(n, n);
        for (int m = 0; m < n_m; ++m)
            for (int p = 0; p < n_m; ++p) {
                const double d = problem.op.diff(m, p);
                if (d == 0.0) continue;
                for (int q = 0; q < n_r; ++q)
                    jac(static_cast<Eigen::Index>(m) * n_r + q,
                        static_cast<Eigen::Index>(p) * n_r + q) += d;
            }
        for (int p = 0; p < n_m; ++p) {
            const MatrixXd node_jac = node_jacobian(problem.rom, a.row(p));
            jac.block(static_cast<Eigen::Index>(p) * n_r, static_cast<Eigen::Index>(p) * n_r,
                      n_r, n_r) += node_jac;
        }

        MatrixXd hess = 2.0 * problem.c_r * (jac.transpose() * jac);
        // Curvature of the residual itself (R is quadratic in a).
        for (int m = 0; m < n_m; ++m) {
            MatrixXd s = MatrixXd::Zero(n_r, n_r);
            for (int q = 0; q < n_r; ++q)
                for (int q2 = 0; q2 < n_r; ++q2) {
                    double acc = 0.0;
                    for (int rr = 0; rr < n_r; ++rr)
                        acc += r(m, rr) * (problem.rom.quadratic(q, q2, rr) +
                                           problem.rom.quadratic(q2, q, rr));
                    s(q, q2) = acc;
                }
            hess.block(static_cast<Eigen::Index>(m) * n_r, static_cast<Eigen::Index>(m) * n_r,
                       n_r, n_r) += 2.0 * problem.c_r * s;
        }
        hess.diagonal().array() += 2.0;  // measurement-mismatch term

        const VectorXd g_flat = flatten(grad);
        VectorXd step;
        double shift = 0.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            MatrixXd h_shifted = hess;
            if (shift > 0) h_shifted.diagonal().array() += shift;
            Eigen::LDLT<MatrixXd> ldlt(h_shifted);
            bool ok = ldlt.info() == Eigen::Success;
            if (ok) {
                step = -ldlt.solve(g_flat);
                ok = step.allFinite() && g_flat.dot(step) < 0;
            }
            if (ok) break;
            const double base = hess.diagonal().cwiseAbs().maxCoeff();
            shift = (shift == 0.0) ? 1e-8 * base : shift * 100.0;
            if (attempt == 0)
                report.warnings.push_back(
                    "newton: indefinite or singular system, applying diagonal shift");
            step.resize(0);
        }
        if (step.size() == 0) {
            report.warnings.push_back("newton: no descent direction found, stopping");
            break;
        }

        // Armijo backtracking on J.
        const double slope = g_flat.dot(step);
        MatrixXd step_mat(n_m, n_r);
        for (int m = 0; m < n_m; ++m)
            for (int q = 0; q < n_r; ++q)
                step_mat(m, q) = step[static_cast<Eigen::Index>(m) * n_r + q];
        double t_step = 1.0;
        double j_new = 0.0;
        MatrixXd a_new;
        bool accepted = false;
        while (t_step >= 1e-12) {
            a_new = a + t_step * step_mat;
            j_new = objective(problem, a_new);
            if (j_new <= j_val + 1e-4 * t_step * slope) {
                accepted = true;
                break;
            }
            t_step *= 0.5;
        }
        if (!accepted) {
            report.warnings.push_back("newton: line search stalled, stopping");
            break;
        }

        a = a_new;
        j_val = j_new;
        grad = objective_gradient(problem, a);
        ++report.iterations;
        report.objectives.push_back(j_val);
        report.grad_norms.push_back(grad.norm());
    }
    if (!report.converged && grad.norm() <= tol) report.converged = true;

    ObserverSolution sol;
    sol.report = std::move(report);
    sol.trajectory = CoefficientTrajectory(problem.op.nodes, std::move(a));
    if (!sol.report.converged)
        sol.trajectory.warnings.push_back("observer: Newton did not reach tolerance");
    return sol;
}

SlidingWindowResult sliding_window_estimate(const RomCoefficients& rom, const SensorSuite& suite,
                                            const MeasurementRecord& stream, int window,
                                            int stride, ObserverVariant variant,
                                            const LseModel* static_model, double c_r, int n_nodes,
                                            bool warm_start) {
    if (window < 2 || window > stream.n_samples())
        throw std::invalid_argument("sliding_window_estimate: window outside [2, stream length]");
    if (stride < 1) throw std::invalid_argument("sliding_window_estimate: stride must be >= 1");

    SlidingWindowResult result;
    std::vector<double> t_stars;
    std::vector<Eigen::RowVectorXd> states;

    const ObserverSolution* prev = nullptr;
    for (int start = 0; start + window <= stream.n_samples(); start += stride) {
        const MeasurementRecord rec = stream.window(start, window);
        ObserverProblem problem =
            assemble_problem(rom, suite, rec, variant, static_model, c_r, n_nodes);

        ObserverSolution sol;
        if (warm_start && prev) {
            // Previous solution where it covers the new nodes, targets beyond.
            MatrixXd init = problem.targets;
            const double prev_end = prev->trajectory.times[prev->trajectory.times.size() - 1];
            std::vector<Eigen::Index> covered;
            for (Eigen::Index i = 0; i < problem.op.nodes.size(); ++i)
                if (problem.op.nodes[i] <= prev_end) covered.push_back(i);
            if (!covered.empty()) {
                VectorXd q(covered.size());
                for (std::size_t i = 0; i < covered.size(); ++i)
                    q[static_cast<Eigen::Index>(i)] = problem.op.nodes[covered[i]];
                const MatrixXd vals = prev->trajectory.sample_at(q);
                for (std::size_t i = 0; i < covered.size(); ++i)
                    init.row(covered[i]) = vals.row(static_cast<Eigen::Index>(i));
            }
            sol = solve(problem, ObserverInit::Given, &init);
        } else {
            sol = solve(problem);
        }

        t_stars.push_back(problem.op.t_b());
        states.emplace_back(sol.trajectory.values.row(sol.trajectory.values.rows() - 1));
        result.reports.push_back(sol.report);
        result.solutions.push_back(std::move(sol));
        prev = &result.solutions.back();
    }

    VectorXd times(static_cast<Eigen::Index>(t_stars.size()));
    MatrixXd values(static_cast<Eigen::Index>(t_stars.size()), rom.n_modes());
    for (std::size_t i = 0; i < t_stars.size(); ++i) {
        times[static_cast<Eigen::Index>(i)] = t_stars[i];
        values.row(static_cast<Eigen::Index>(i)) = states[i];
    }
    result.estimates = CoefficientTrajectory(std::move(times), std::move(values));
    return result;
}

ObserverSolution estimate_chunked(const RomCoefficients& rom, const SensorSuite& suite,
                                  const MeasurementRecord& stream, int chunk,
                                  ObserverVariant variant, const LseModel* static_model,
                                  double c_r, int n_nodes) {
    const int n = stream.n_samples();
    if (chunk < 2) throw std::invalid_argument("estimate_chunked: chunk must be >= 2");
    chunk = std::min(chunk, n);

    std::vector<double> times;
    std::vector<Eigen::RowVectorXd> rows;
    NewtonReport merged;
    merged.converged = true;

    int pos = 0;
    while (pos < n) {
        int start = pos;
        if (start + chunk > n) start = n - chunk;
        const MeasurementRecord rec = stream.window(start, chunk);
        ObserverProblem problem =
            assemble_problem(rom, suite, rec, variant, static_model, c_r, n_nodes);
        ObserverSolution sol = solve(problem);

        const double prev_end = times.empty() ? -std::numeric_limits<double>::infinity()
                                              : times.back();
        for (Eigen::Index i = 0; i < sol.trajectory.times.size(); ++i) {
            if (sol.trajectory.times[i] <= prev_end) continue;
            times.push_back(sol.trajectory.times[i]);
            rows.emplace_back(sol.trajectory.values.row(i));
        }
        merged.iterations += sol.report.iterations;
        merged.converged = merged.converged && sol.report.converged;
        for (const auto& w : sol.report.warnings) merged.warnings.push_back(w);
        merged.grad_norms.push_back(sol.report.grad_norms.back());
        merged.objectives.push_back(sol.report.objectives.back());
        pos = start + chunk;
    }

    VectorXd t(static_cast<Eigen::Index>(times.size()));
    MatrixXd v(static_cast<Eigen::Index>(times.size()), rom.n_modes());
    for (std::size_t i = 0; i < times.size(); ++i) {
        t[static_cast<Eigen::Index>(i)] = times[i];
        v.row(static_cast<Eigen::Index>(i)) = rows[i];
    }
    ObserverSolution out;
    out.trajectory = CoefficientTrajectory(std::move(t), std::move(v));
    out.report = std::move(merged);
    return out;
}

std::vector<CrSweepRow> c_r_sweep(const ObserverProblem& base, const std::vector<double>& values,
                                  const CoefficientTrajectory* reference) {
    std::vector<CrSweepRow> rows;
    rows.reserve(values.size());
    for (double c : values) {
        ObserverProblem problem = base;
        problem.c_r = c;
        const ObserverSolution sol = solve(problem);
        CrSweepRow row;
        row.c_r = c;
        row.iterations = sol.report.iterations;
        row.model_residual = residual_matrix(problem, sol.trajectory.values).norm();
        row.target_mismatch = (sol.trajectory.values - problem.targets).norm();
        if (reference) {
            const MatrixXd ref = reference->sample_at(problem.op.nodes);
            double acc = 0.0;
            int counted = 0;
            for (Eigen::Index j = 0; j < ref.cols(); ++j) {
                const double den = ref.col(j).norm();
                if (den <= 0) continue;
                acc += 100.0 * (sol.trajectory.values.col(j) - ref.col(j)).norm() / den;
                ++counted;
            }
            row.mean_coeff_error_pct = counted ? acc / counted : -1.0;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string render_c_r_sweep(const std::vector<CrSweepRow>& rows) {
    std::ostringstream os;
    os << "# residual-weight sweep\n";
    os << "c_r model_residual target_mismatch iterations mean_coeff_error_pct\n";
    for (const auto& r : rows) {
        char buf[160];
        if (r.mean_coeff_error_pct >= 0)
            std::snprintf(buf, sizeof buf, "%.6g %.6e %.6e %d %.2f\n", r.c_r, r.model_residual,
                          r.target_mismatch, r.iterations, r.mean_coeff_error_pct);
        else
            std::snprintf(buf, sizeof buf, "%.6g %.6e %.6e %d n/a\n", r.c_r, r.model_residual,
                          r.target_mismatch, r.iterations);
        os << buf;
    }
    return os.str();
}

}  // namespace flowest
