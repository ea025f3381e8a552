#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "liesde/model.hpp"
#include "liesde/noise.hpp"

namespace liesde {

enum class Scheme { GEM, GIT15, GSRK15, FlatEM };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);  // gem | git15 | gsrk15 | em

struct SchemeConfig {
  Scheme scheme = Scheme::GEM;
  Parametrization param = Parametrization::cayley();
  // Permits truncation indices below the 2*gamma - 2 bound so the order
  // degradation experiment can run.
  bool allow_underresolved = false;

  double strong_order() const;
  /// Enforces q >= 2*gamma - 2 for the exponential map unless
  /// allow_underresolved is set. Throws ConfigError.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SquareMatrix> states;
  // Carrier vectors y_j = Q_j y0 when the group descriptor tracks one.
  std::vector<std::vector<double>> carrier;
  // Manifold distance of each recorded state (same length as times).
  std::vector<double> drift_series;
};

/// One step of the geometric Euler-Maruyama scheme in the algebra:
/// Omega_1 = A(0) dt + Gamma(0) dW.
SquareMatrix step_gem(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc);

/// One step of the strong order-1.5 Ito-Taylor scheme, all derivatives
/// taken as directional derivatives at the anchor Omega_0 = 0.
SquareMatrix step_git15(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc);

/// One step of the Roessler-type strong order-1.5 stochastic Runge-Kutta
/// scheme (derivative free, four diffusion stages).
SquareMatrix step_gsrk15(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc);

/// Dispatch on the algebra-level schemes (not FlatEM).
SquareMatrix scheme_step(Scheme scheme, const AlgebraCoefficients& coeffs,
                         const NoiseIncrement& inc);

/// Non-geometric Euler-Maruyama applied directly on the group carrier:
/// Q' = Q + Q K dt + Q V dW (left) or Q' = Q + K Q dt + V Q dW (right).
SquareMatrix step_flat_em(const LieSDEModel& model, double t, const SquareMatrix& q,
                          const NoiseIncrement& inc);

/// Distance from the manifold: ||Q^T Q - I||_F for SO(n), | |Q y0| - 1 |
/// for the unit-sphere carrier.
double manifold_distance(const SquareMatrix& q, const GroupDescriptor& group);

/// Run a full path from Q_0 = I over the given increments, recording every
/// state. Throws NonFiniteState (with the step index) if a state degenerates.
Trajectory simulate_path(const LieSDEModel& model, const SchemeConfig& cfg, double T,
                         double dt, std::span<const NoiseIncrement> increments);

struct PathResult {
  SquareMatrix terminal;
  double max_drift = 0.0;
};

/// Same dynamics as simulate_path but keeps only the terminal state and the
/// worst manifold distance; used by the Monte Carlo studies.
PathResult run_path_terminal(const LieSDEModel& model, const SchemeConfig& cfg,
                             std::span<const NoiseIncrement> increments);

}  // namespace liesde
