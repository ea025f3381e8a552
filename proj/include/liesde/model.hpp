#pragma once

#include <array>
#include <functional>
#include <string>

#include "liesde/lie.hpp"
#include "liesde/matops.hpp"

namespace liesde {

enum class MultiplySide { Left, Right };

/// An Ito SDE on a matrix Lie group, dQ = Q K dt + Q V dW (left) or
/// dQ = K Q dt + V Q dW (right), described by its coefficient providers.
/// Providers must be pure functions of (t, Q).
struct LieSDEModel {
  int dim = 0;
  MultiplySide side = MultiplySide::Left;
  std::function<SquareMatrix(double, const SquareMatrix&)> K;
  std::function<SquareMatrix(double, const SquareMatrix&)> V;
  GroupDescriptor group;
  std::string label;
  // False for the linear models whose K, V ignore the state; lets stage
  // evaluations skip reconstructing psi(Omega) Q.
  bool state_dependent = false;
  // False when K, V ignore t; skips stage-time shifts and d/dt terms.
  bool time_dependent = true;
};

/// Coefficients of the algebra-level SDE dOmega = A(Omega) dt + Gamma(Omega) dW
/// anchored at a step start (t_j, Q_j), with time frozen at t_j. For left
/// models A(Omega) = dpsi^{-1}_{-Omega}(K - V^2/2); for right models the sign
/// of the operator index flips and coefficients see the state psi(Omega) Q_j.
/// The Ito C-term is omitted: every scheme anchors at Omega_0 = 0 where it
/// vanishes for both maps.
class AlgebraCoefficients {
 public:
  AlgebraCoefficients(const LieSDEModel& model, const Parametrization& p, double t_j,
                      const SquareMatrix& q_j);

  SquareMatrix drift(const SquareMatrix& omega) const;      // A(Omega)
  SquareMatrix diffusion(const SquareMatrix& omega) const;  // Gamma(Omega)

  // Stage evaluations at a shifted time (Runge-Kutta nodes); the state
  // anchor is unchanged. Equal to drift/diffusion when the model ignores t.
  SquareMatrix drift_at_time(const SquareMatrix& omega, double t) const;
  SquareMatrix diffusion_at_time(const SquareMatrix& omega, double t) const;

  // Time derivatives at the anchor (state frozen), for the nonautonomous
  // terms of the order-1.5 Taylor scheme; central differences on the
  // providers, exactly zero for time-independent models.
  SquareMatrix drift_time_derivative0() const;      // d/dt dpsi_inv_0(K - V^2/2)
  SquareMatrix diffusion_time_derivative0() const;  // d/dt dpsi_inv_0(V)

  // Values at the anchor Omega = 0 (dpsi^{-1}_0 = id for exp, halves for cay).
  const SquareMatrix& drift0() const { return drift0_; }
  const SquareMatrix& diffusion0() const { return diffusion0_; }

  // Frozen group-level coefficients at the anchor.
  const SquareMatrix& k0() const { return k0_; }
  const SquareMatrix& v0() const { return v0_; }
  const SquareMatrix& drift_input0() const { return drift_input0_; }  // K - V^2/2

  /// First directional derivative at the anchor of Omega |-> the sided
  /// dpsi^{-1} applied to the frozen matrix `h`, in direction `dir`.
  SquareMatrix dpsi_inv_d1(const SquareMatrix& h, const SquareMatrix& dir) const;
  /// Second directional derivative (same direction twice).
  SquareMatrix dpsi_inv_d2(const SquareMatrix& h, const SquareMatrix& dir) const;

  /// dpsi^{-1} at Omega = 0: identity for exp, halving for cay.
  SquareMatrix apply_dpsi_inv_at0(const SquareMatrix& h) const;

  /// Directional derivatives at the anchor of the Ito coefficient C(Omega)
  /// (C(0) = 0 for both maps, but its slope feeds the drift derivatives).
  SquareMatrix c_coeff_d1(const SquareMatrix& dir) const;
  SquareMatrix c_coeff_d2(const SquareMatrix& dir) const;

  const Parametrization& parametrization() const { return param_; }
  MultiplySide side() const { return side_; }
  double anchor_time() const { return t_; }

 private:
  SquareMatrix sided_dpsi_inv(const SquareMatrix& omega, const SquareMatrix& h) const;
  // K and V at time t and the state reached through Omega (frozen values
  // when the model is not state dependent).
  SquareMatrix k_at(const SquareMatrix& omega, double t) const;
  SquareMatrix v_at(const SquareMatrix& omega, double t) const;

  const LieSDEModel* model_;
  Parametrization param_;
  MultiplySide side_;
  double t_;
  SquareMatrix q_;
  SquareMatrix k0_, v0_, drift_input0_;
  SquareMatrix drift0_, diffusion0_;
};

/// Convenience wrapper mirroring the one-shot construction.
inline AlgebraCoefficients algebra_coefficients(const LieSDEModel& model,
                                                const Parametrization& p, double t_j,
                                                const SquareMatrix& q_j) {
  return AlgebraCoefficients(model, p, t_j, q_j);
}

/// The SO(3) test problem: V_t = cos(t) G1 + sin(t) G2 + (1+t+t^2+t^3) G3,
/// K_t from the lower-triangle construction so that K + K^T = V^2.
LieSDEModel make_so3_test_model();

/// Body-frame angular momentum coefficient matrix of the free rigid body.
SquareMatrix rigid_body_V(const std::array<double, 3>& y, const std::array<double, 3>& inertia);

/// Nonlinear right-multiplication SDE on SO(3) for the stochastic rigid
/// body; the carrier y = Q y0 evolves on the unit sphere.
LieSDEModel make_rigid_body_model(const std::array<double, 3>& inertia,
                                  const std::array<double, 3>& y0);

/// SO(2) correlation-flow model: V = c J with J the rotation generator,
/// K from the same lower-triangle construction (here -c^2/2 I).
LieSDEModel make_so2_correlation_model(double c);

/// Model lookup for the CLI: "so3-test", "rigid-body", "so2-corr".
LieSDEModel make_model_by_name(const std::string& name, double corr_c = 0.3);

}  // namespace liesde
