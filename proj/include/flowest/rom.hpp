#pragma once

#include "flowest/io.hpp"
#include "flowest/pod.hpp"
#include "flowest/trajectory.hpp"

namespace flowest {

/// Dense rank-3 tensor with (k,s,r) indexing, k-major flat storage.
class Tensor3 {
  public:
    Tensor3() = default;
    explicit Tensor3(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n, 0.0) {}
    Tensor3(int n, std::vector<double> flat) : n_(n), v_(std::move(flat)) {
        if (v_.size() != static_cast<std::size_t>(n) * n * n)
            throw std::invalid_argument("Tensor3: flat size does not match n^3");
    }

    int n() const { return n_; }
    double operator()(int k, int s, int r) const { return v_[index(k, s, r)]; }
    double& operator()(int k, int s, int r) { return v_[index(k, s, r)]; }
    const std::vector<double>& flat() const { return v_; }

  private:
    std::size_t index(int k, int s, int r) const {
        return (static_cast<std::size_t>(k) * n_ + s) * n_ + r;
    }
    int n_ = 0;
    std::vector<double> v_;
};

/// Coefficients of the quadratic Galerkin system
///   da_r/dt = A_r + C_kr a_k - B_ksr a_k a_s
/// (implicit sums over k and s). `linear(k,r)` multiplies a_k in equation r.
struct RomCoefficients {
    VectorXd constant;   // A_r
    MatrixXd linear;     // C(k,r)
    Tensor3 quadratic;   // B(k,s,r)

    int n_modes() const { return static_cast<int>(constant.size()); }
    void validate() const;
};

RomCoefficients make_rom(VectorXd constant, MatrixXd linear, Tensor3 quadratic);

/// Galerkin convection tensor from mode geometry:
/// B_ksr = inner_product((mode_k . grad) mode_s, mode_r), derivatives by
/// second-order finite differences. Needs at least 3 grid points per axis.
Tensor3 assemble_quadratic_tensor(const PodBasis& basis);

/// Convected field (carrier . grad) field, the integrand of the tensor entries.
VectorField convective_term(const VectorField& carrier, const VectorField& field);

/// R_r = adot_r - A_r - C_kr a_k + B_ksr a_k a_s.
VectorXd residual(const RomCoefficients& rom, const VectorXd& a, const VectorXd& adot);

/// Right-hand side A_r + C_kr a_k - B_ksr a_k a_s.
VectorXd rhs(const RomCoefficients& rom, const VectorXd& a);

/// Classical fixed-step RK4 from t0 to t1, sampling every accepted step.
/// Throws std::runtime_error naming the last valid time on blow-up.
CoefficientTrajectory integrate(const RomCoefficients& rom, const VectorXd& a0, double t0,
                                double t1, double dt);

/// Model rewritten in coordinates b = m * a for an invertible (in practice
/// orthogonal) change of basis m.
RomCoefficients transform(const RomCoefficients& rom, const MatrixXd& m);

/// Leading n-mode subsystem (valid as a model only when the retained block is
/// closed, i.e. discarded modes do not force the retained ones).
RomCoefficients subsystem(const RomCoefficients& rom, int n);

RomRecord to_record(const RomCoefficients& rom);
RomCoefficients from_record(const RomRecord& rec);

}  // namespace flowest
