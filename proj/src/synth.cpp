#include "flowest/synth.hpp"

#include <cmath>
#include <filesystem>
#include <random>

namespace flowest {

ModeFamily mode_family_from_name(const std::string& name) {
    if (name == "trigonometric") return ModeFamily::Trigonometric;
    if (name == "polynomial-bump") return ModeFamily::PolynomialBump;
    throw std::invalid_argument("unknown mode family '" + name + "'");
}

DynamicsKind dynamics_from_name(const std::string& name) {
    if (name == "limit-cycle") return DynamicsKind::LimitCycle;
    if (name == "chaotic-quadratic") return DynamicsKind::ChaoticQuadratic;
    throw std::invalid_argument("unknown dynamics kind '" + name + "'");
}

std::string dynamics_name(DynamicsKind d) {
    return d == DynamicsKind::LimitCycle ? "limit-cycle" : "chaotic-quadratic";
}

namespace {

// Normalized coordinate of point index i along an axis.
double unit_coord(const Grid& g, int axis, int i) {
    const auto& x = g.coords(axis);
    return (x[i] - x.front()) / (x.back() - x.front());
}

VectorField reference_flow(const GridPtr& grid) {
    // Parabolic streamwise profile across the last axis, other components zero.
    VectorField ref(grid);
    const Grid& g = *grid;
    const int wall_axis = g.n_axes() - 1;
    std::vector<int> idx(g.n_axes(), 0);
    for (std::size_t p = 0; p < g.n_points(); ++p) {
        const double y = unit_coord(g, wall_axis, idx[wall_axis]);
        ref.component(0)[static_cast<Eigen::Index>(p)] = 4.0 * y * (1.0 - y);
        for (int a = 0; a < g.n_axes(); ++a) {
            if (++idx[a] < g.dim(a)) break;
            idx[a] = 0;
        }
    }
    return ref;
}

VectorField raw_mode(const GridPtr& grid, int j, ModeFamily family, std::mt19937_64& rng) {
    const Grid& g = *grid;
    const int dim = g.n_axes();
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

    VectorField mode(grid);
    for (int c = 0; c < dim; ++c) {
        std::vector<int> wavenum(dim);
        std::vector<double> shift(dim);
        for (int a = 0; a < dim; ++a) {
            wavenum[a] = 1 + (j + c + 2 * a) % (2 + j);
            shift[a] = phase(rng);
        }
        std::vector<int> idx(dim, 0);
        for (std::size_t p = 0; p < g.n_points(); ++p) {
            double v = 1.0;
            for (int a = 0; a < dim; ++a) {
                const double x = unit_coord(g, a, idx[a]);
                if (family == ModeFamily::Trigonometric) {
                    v *= std::sin(M_PI * wavenum[a] * x + shift[a]);
                } else {
                    // Wall-vanishing bump shaped by a low-order oscillation.
                    v *= x * (1.0 - x) * std::cos(M_PI * (wavenum[a] - 0.5) * x + shift[a]);
                }
            }
            mode.component(c)[static_cast<Eigen::Index>(p)] = v;
            for (int a = 0; a < dim; ++a) {
                if (++idx[a] < g.dim(a)) break;
                idx[a] = 0;
            }
        }
    }
    return mode;
}

}  // namespace

PodBasis make_modes(const GridPtr& grid, int n_modes, ModeFamily family, std::uint64_t seed) {
    if (n_modes < 1) throw std::invalid_argument("make_modes: n_modes must be positive");
    std::mt19937_64 rng(seed);

    PodBasis basis;
    basis.reference = reference_flow(grid);
    basis.modes.reserve(n_modes);
    for (int j = 0; j < n_modes; ++j) {
        VectorField candidate = raw_mode(grid, j, family, rng);
        const double raw_norm = norm(candidate);
        // Two-pass modified Gram-Schmidt.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& prev : basis.modes)
                candidate.axpy(-inner_product(candidate, prev), prev);
        const double nrm = norm(candidate);
        if (!(nrm > 1e-8 * raw_norm))
            throw std::runtime_error("make_modes: candidate mode " + std::to_string(j) +
                                     " is linearly dependent on earlier ones; use higher "
                                     "frequencies or a finer grid");
        candidate *= 1.0 / nrm;
        basis.modes.push_back(std::move(candidate));
    }
    // Synthetic modes are exact by construction: unit "energy" bookkeeping.
    basis.eigenvalues = VectorXd::Ones(n_modes);
    basis.snapshot_coeffs = MatrixXd::Zero(0, n_modes);
    return basis;
}

RomCoefficients make_dynamics(DynamicsKind kind, int n) {
    if (n < (kind == DynamicsKind::LimitCycle ? 2 : 3))
        throw std::invalid_argument("make_dynamics: too few modes for " + dynamics_name(kind));

    RomCoefficients rom;
    rom.constant = VectorXd::Zero(n);
    rom.linear = MatrixXd::Zero(n, n);
    rom.quadratic = Tensor3(n);

    // B enters the model as -B_ksr a_k a_s, so a forcing +g a_k a_s on
    // equation r is stored as B(k,s,r) = -g (split symmetrically).
    auto force = [&rom](int k, int s, int r, double g) {
        rom.quadratic(k, s, r) += -0.5 * g;
        rom.quadratic(s, k, r) += -0.5 * g;
    };

    if (kind == DynamicsKind::LimitCycle) {
        const double omega = 1.0;
        rom.linear(1, 0) = -omega;
        rom.linear(0, 1) = omega;

        // Harmonic pairs (2j, 2j+1) at frequency (j+1)*omega, driven by the
        // complex product of the fundamental and the previous pair.
        int pair = 1;
        int i = 2;
        for (; i + 1 < n; i += 2, ++pair) {
            const double w = (pair + 1) * omega;
            const double damp = 1.0;
            const double gain = 0.6 * std::pow(0.7, pair - 1);
            rom.linear(i, i) = -damp;
            rom.linear(i + 1, i) = -w;
            rom.linear(i, i + 1) = w;
            rom.linear(i + 1, i + 1) = -damp;
            const int pa = (pair == 1) ? 0 : i - 2;  // previous pair, real part
            const int pb = (pair == 1) ? 1 : i - 1;
            if (pair == 1) {
                force(0, 0, i, gain);
                force(1, 1, i, -gain);
                force(0, 1, i + 1, 2.0 * gain);
            } else {
                force(0, pa, i, gain);
                force(1, pb, i, -gain);
                force(0, pb, i + 1, gain);
                force(1, pa, i + 1, gain);
            }
        }
        if (i < n) {  // odd leftover: damped, driven at the next harmonic
            rom.linear(i, i) = -1.0;
            const double gain = 0.4 * std::pow(0.7, pair - 1);
            force(0, i - 2, i, gain);
            force(1, i - 1, i, -gain);
        }
        return rom;
    }

    // Chaotic core: Lorenz rescaled by 1/20 with the z fixed-point shifted
    // out, so all three coefficients are O(1) fluctuations.
    const double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0, scale = 20.0;
    rom.linear(0, 0) = -sigma;
    rom.linear(1, 0) = sigma;
    rom.linear(0, 1) = 1.0;  // rho - z enters as 1 - z' after the fixed-point shift
    rom.linear(1, 1) = -1.0;
    rom.linear(2, 2) = -beta;
    rom.constant[2] = -beta * (rho - 1.0) / scale;
    force(0, 2, 1, -scale);
    force(0, 1, 2, scale);

    // Remaining modes: damped rotating pairs driven one-way by products of
    // the chaotic triple, amplitudes decreasing with mode index.
    static const int drive[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 0}, {1, 1}, {2, 2}};
    int pair = 0;
    int i = 3;
    for (; i + 1 < n; i += 2, ++pair) {
        const double w = 2.0 + 0.7 * pair;
        const double damp = 0.8 + 0.1 * (pair % 3);
        const double gain = 1.1 * std::pow(0.82, pair);
        rom.linear(i, i) = -damp;
        rom.linear(i + 1, i) = -w;
        rom.linear(i, i + 1) = w;
        rom.linear(i + 1, i + 1) = -damp;
        const int* da = drive[pair % 6];
        const int* db = drive[(pair + 2) % 6];
        force(da[0], da[1], i, gain);
        force(db[0], db[1], i + 1, 0.8 * gain);
    }
    if (i < n) {
        rom.linear(i, i) = -1.0;
        const int* da = drive[pair % 6];
        force(da[0], da[1], i, 0.9 * std::pow(0.82, pair));
    }
    return rom;
}

SyntheticScenario make_scenario(const GridPtr& grid, int n_modes, DynamicsKind dynamics,
                                double t0, double t1, double dt, int n_snapshots,
                                std::uint64_t seed) {
    if (!(t1 > t0)) throw std::invalid_argument("make_scenario: empty time span");
    if (n_snapshots < 2) throw std::invalid_argument("make_scenario: need >= 2 snapshots");

    SyntheticScenario s;
    s.grid = grid;
    s.seed = seed;
    s.true_basis = make_modes(grid, n_modes, ModeFamily::Trigonometric, seed);
    s.true_rom = make_dynamics(dynamics, n_modes);

    // Wash-in so the recorded window sits on the attractor.
    VectorXd a0 = VectorXd::Zero(n_modes);
    if (dynamics == DynamicsKind::LimitCycle) {
        a0[0] = 1.0;
    } else {
        a0[0] = 0.05;
        a0[1] = 0.05;
        a0[2] = -1.3;
    }
    const double wash = 25.0;
    CoefficientTrajectory warmup;
    try {
        warmup = integrate(s.true_rom, a0, t0 - wash, t0, dt);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("make_scenario: wash-in diverged (") + e.what() +
                                 "); dynamics=" + dynamics_name(dynamics) +
                                 " n_modes=" + std::to_string(n_modes) +
                                 " dt=" + std::to_string(dt));
    }
    const VectorXd a_start = warmup.values.row(warmup.values.rows() - 1);

    try {
        s.true_trajectory = integrate(s.true_rom, a_start, t0, t1, dt);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("make_scenario: trajectory diverged (") + e.what() +
                                 "); dynamics=" + dynamics_name(dynamics) +
                                 " n_modes=" + std::to_string(n_modes) +
                                 " dt=" + std::to_string(dt));
    }

    VectorXd snap_times(n_snapshots);
    for (int i = 0; i < n_snapshots; ++i)
        snap_times[i] = t0 + (t1 - t0) * static_cast<double>(i) / (n_snapshots - 1);
    snap_times[n_snapshots - 1] = t1;

    const MatrixXd coeffs = s.true_trajectory.sample_at(snap_times);
    std::vector<VectorField> fields;
    fields.reserve(n_snapshots);
    for (int i = 0; i < n_snapshots; ++i)
        fields.push_back(reconstruct(s.true_basis, coeffs.row(i)));
    s.snapshots = SnapshotSet(snap_times, std::move(fields), s.true_basis.reference);
    return s;
}

void export_scenario(const SyntheticScenario& s, const std::string& dir, FileFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string ext = format == FileFormat::TextTable ? ".txt" : ".bin";

    save_snapshots(s.snapshots, dir + "/snapshots" + ext, format, true,
                   {"synthetic scenario snapshots, seed " + std::to_string(s.seed)});
    save_time_table(s.true_trajectory.times, s.true_trajectory.values,
                    dir + "/truth_coeffs.txt",
                    {"ground-truth modal coefficients, seed " + std::to_string(s.seed)});
    save_rom_record(to_record(s.true_rom), dir + "/truth_rom" + ext, format,
                    {"ground-truth model coefficients"});
    save_basis(s.true_basis, dir + "/truth_basis" + ext, format,
               {"ground-truth mode shapes"});
}

}  // namespace flowest
