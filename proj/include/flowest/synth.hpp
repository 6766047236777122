#pragma once

#include "flowest/io.hpp"
#include "flowest/pod.hpp"
#include "flowest/rom.hpp"

namespace flowest {

enum class ModeFamily { Trigonometric, PolynomialBump };
enum class DynamicsKind { LimitCycle, ChaoticQuadratic };

ModeFamily mode_family_from_name(const std::string& name);
DynamicsKind dynamics_from_name(const std::string& name);
std::string dynamics_name(DynamicsKind d);

/// Smooth analytic mode shapes, Gram-Schmidt orthonormalized under the grid
/// inner product. Deterministic for a given seed. The reference field is a
/// fixed parabolic-profile mean flow.
PodBasis make_modes(const GridPtr& grid, int n_modes, ModeFamily family, std::uint64_t seed);

/// Quadratic coefficient dynamics with a known closed form:
///  - limit-cycle: a neutral oscillator pair plus damped, quadratically
///    driven harmonic pairs (periodic attractor, decreasing amplitudes)
///  - chaotic-quadratic: a rescaled Lorenz triple driving damped oscillator
///    pairs one-way (bounded, non-periodic). Any leading subset containing
///    the triple is a closed subsystem.
RomCoefficients make_dynamics(DynamicsKind kind, int n_modes);

/// Model-consistent ground truth: fields, coefficients and model agree by
/// construction, standing in for the reference simulation.
struct SyntheticScenario {
    GridPtr grid;
    PodBasis true_basis;
    RomCoefficients true_rom;
    CoefficientTrajectory true_trajectory;  // one sample per integrator step
    SnapshotSet snapshots;                  // n_snapshots uniform times, true reference field
    std::uint64_t seed = 0;
};

/// Integrates the dynamics through a transient wash-in so the recorded
/// trajectory sits on the attractor, then synthesizes snapshots at
/// n_snapshots uniform times in [t0, t1].
SyntheticScenario make_scenario(const GridPtr& grid, int n_modes, DynamicsKind dynamics,
                                double t0, double t1, double dt, int n_snapshots,
                                std::uint64_t seed);

/// Writes snapshots plus the ground-truth sidecar (coefficient table, model
/// record, basis) under `dir`.
void export_scenario(const SyntheticScenario& scenario, const std::string& dir,
                     FileFormat format);

}  // namespace flowest
