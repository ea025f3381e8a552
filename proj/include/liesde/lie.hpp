#pragma once

#include <vector>

#include "liesde/matops.hpp"

namespace liesde {

enum class MapKind { Exponential, Cayley };

/// Local parametrization psi: algebra -> group, either the matrix
/// exponential (with a truncation index q for the inverse-differential
/// Bernoulli series) or the Cayley transform (finite product, no
/// truncation).
struct Parametrization {
  MapKind kind = MapKind::Cayley;
  int truncation_q = 1;  // only meaningful for Exponential

  static Parametrization exponential(int q) { return {MapKind::Exponential, q}; }
  static Parametrization cayley() { return {MapKind::Cayley, 0}; }

  const char* name() const { return kind == MapKind::Exponential ? "exp" : "cay"; }
};

enum class GroupKind { SOn, UnitSphereCarrier };

struct GroupDescriptor {
  GroupKind kind = GroupKind::SOn;
  int dim = 3;
  // For UnitSphereCarrier: the unit vector whose orbit |Q y0| is tracked.
  std::vector<double> carrier_y0;

  static GroupDescriptor so_n(int n) { return {GroupKind::SOn, n, {}}; }
  static GroupDescriptor unit_sphere(std::vector<double> y0) {
    return {GroupKind::UnitSphereCarrier, static_cast<int>(y0.size()), std::move(y0)};
  }
};

inline constexpr double kDefaultDriftTol = 1e-8;

/// Membership test for SO(n): ||Q^T Q - I||_F <= tol and det(Q) > 0.
bool in_so_n(const SquareMatrix& q, double tol = kDefaultDriftTol);

/// psi(Omega): full matrix exponential, or (I - Omega)^{-1}(I + Omega).
SquareMatrix psi_apply(const Parametrization& p, const SquareMatrix& omega);

/// Truncated dexp^{-1}_{-Omega}(H) = sum_{k=0}^{q} B_k/k! ad_{-Omega}^k(H).
/// Bernoulli numbers are hard-coded through B_8 (q <= 8). Requires
/// ||Omega||_F < pi, the validity region of the full series.
SquareMatrix dexp_inv_trunc(const SquareMatrix& omega, const SquareMatrix& h, int q);

/// Truncated forward series dexp_{-Omega}(H) = sum_{k=0}^{q} ad_{-Omega}^k(H)/(k+1)!.
SquareMatrix dexp_forward_trunc(const SquareMatrix& omega, const SquareMatrix& h, int q);

/// dcay^{-1}_{-Omega}(H) = (1/2)(I + Omega) H (I - Omega); exact.
SquareMatrix dcay_inv(const SquareMatrix& omega, const SquareMatrix& h);

/// Forward map dcay_{-Omega}(H) = 2 (I + Omega)^{-1} H (I - Omega)^{-1}.
SquareMatrix dcay_forward(const SquareMatrix& omega, const SquareMatrix& h);

/// Dispatch to dexp_inv_trunc (with p.truncation_q) or dcay_inv.
SquareMatrix dpsi_inv(const Parametrization& p, const SquareMatrix& omega,
                      const SquareMatrix& h);

/// First directional derivative of Omega |-> dcay^{-1}_{-Omega}(H) in
/// direction Htilde: (1/2)(-H Ht + Ht H - Omega H Ht - Ht H Omega).
SquareMatrix ddcayinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                          const SquareMatrix& htilde);

/// Second directional derivative of dcay^{-1}: -Ht H Ht, independent of Omega.
SquareMatrix d2cayinv_dir(const SquareMatrix& h, const SquareMatrix& htilde);

/// First directional derivative of the k<=4 truncation of dexp^{-1}_{-Omega}(H)
/// in direction Htilde.
SquareMatrix ddexpinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                          const SquareMatrix& htilde);

/// Second directional derivative of the k<=4 truncation (same direction twice).
SquareMatrix d2dexpinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                           const SquareMatrix& htilde);

/// Ito correction coefficient for the Cayley map: C(Omega) = V Omega V.
SquareMatrix c_coeff_cayley(const SquareMatrix& v, const SquareMatrix& omega);

/// Diagnostic-only truncated double series for the exponential-map C(Omega),
/// sum over p+q <= max_total of ad_Omega^p(ad_Gamma(ad_Omega^q(Gamma))) with
/// weight (-1)^p / ((p+q+2) p! (q+1)!). Every scheme anchors at Omega = 0
/// where C vanishes, so this never feeds an integrator.
SquareMatrix c_coeff_exp_trunc(const SquareMatrix& omega, const SquareMatrix& gamma,
                               int max_total = 2);

/// Generators of so(n). For n=3 exactly G1, G2, G3; for n=2 the single
/// rotation generator [[0,-1],[1,0]]; for n>3 the basis E_ji - E_ij over
/// lexicographic pairs i<j.
std::vector<SquareMatrix> son_generators(int n);

/// Drift satisfying K + K^T = V^2 for skew V: lower triangle of V^2 with
/// halved diagonal.
SquareMatrix drift_from_diffusion(const SquareMatrix& v);

}  // namespace liesde
