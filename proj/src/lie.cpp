#include "liesde/lie.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace liesde {

namespace {

// B_k / k! for k = 0..8; odd Bernoulli numbers beyond B_1 vanish.
constexpr double kBernoulliOverFactorial[9] = {
    1.0, -0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 30240.0, 0.0, -1.0 / 1209600.0};
constexpr int kMaxTruncation = 8;

void check_exp_domain(const SquareMatrix& omega) {
  if (frobenius_norm(omega) >= std::numbers::pi) {
    throw DomainError("dexp_inv series requires ||Omega||_F < pi, got " +
                      std::to_string(frobenius_norm(omega)));
  }
}

void check_truncation(int q) {
  if (q < 0 || q > kMaxTruncation) {
    throw Unsupported("truncation index q must be in [0, 8], got " + std::to_string(q));
  }
}

}  // namespace

bool in_so_n(const SquareMatrix& q, double tol) {
  SquareMatrix gram = q.transpose() * q;
  for (int i = 0; i < q.dim(); ++i) gram(i, i) -= 1.0;
  return frobenius_norm(gram) <= tol && determinant(q) > 0.0;
}

SquareMatrix psi_apply(const Parametrization& p, const SquareMatrix& omega) {
  if (p.kind == MapKind::Exponential) return mat_exp(omega);
  SquareMatrix i_minus = SquareMatrix::identity(omega.dim());
  i_minus -= omega;
  SquareMatrix i_plus = SquareMatrix::identity(omega.dim());
  i_plus += omega;
  return mat_inverse(i_minus) * i_plus;
}

SquareMatrix dexp_inv_trunc(const SquareMatrix& omega, const SquareMatrix& h, int q) {
  detail::require_same_dim(omega, h, "dexp_inv_trunc");
  check_truncation(q);
  check_exp_domain(omega);
  SquareMatrix neg_omega = -omega;
  SquareMatrix term(h);
  SquareMatrix acc(h);  // k = 0 term, B_0 = 1
  for (int k = 1; k <= q; ++k) {
    term = commutator(neg_omega, term);
    if (kBernoulliOverFactorial[k] != 0.0) acc.add_scaled(kBernoulliOverFactorial[k], term);
  }
  return acc;
}

SquareMatrix dexp_forward_trunc(const SquareMatrix& omega, const SquareMatrix& h, int q) {
  detail::require_same_dim(omega, h, "dexp_forward_trunc");
  SquareMatrix neg_omega = -omega;
  SquareMatrix term(h);
  SquareMatrix acc(h);
  double factorial = 1.0;  // (k+1)! running
  for (int k = 1; k <= q; ++k) {
    term = commutator(neg_omega, term);
    factorial *= (k + 1);
    acc.add_scaled(1.0 / factorial, term);
  }
  return acc;
}

SquareMatrix dcay_inv(const SquareMatrix& omega, const SquareMatrix& h) {
  detail::require_same_dim(omega, h, "dcay_inv");
  const int n = omega.dim();
  SquareMatrix i_plus = SquareMatrix::identity(n);
  i_plus += omega;
  SquareMatrix i_minus = SquareMatrix::identity(n);
  i_minus -= omega;
  SquareMatrix r = i_plus * h * i_minus;
  r *= 0.5;
  return r;
}

SquareMatrix dcay_forward(const SquareMatrix& omega, const SquareMatrix& h) {
  detail::require_same_dim(omega, h, "dcay_forward");
  const int n = omega.dim();
  SquareMatrix i_plus = SquareMatrix::identity(n);
  i_plus += omega;
  SquareMatrix i_minus = SquareMatrix::identity(n);
  i_minus -= omega;
  SquareMatrix r = mat_inverse(i_plus) * h * mat_inverse(i_minus);
  r *= 2.0;
  return r;
}

SquareMatrix dpsi_inv(const Parametrization& p, const SquareMatrix& omega,
                      const SquareMatrix& h) {
  if (p.kind == MapKind::Exponential) return dexp_inv_trunc(omega, h, p.truncation_q);
  return dcay_inv(omega, h);
}

SquareMatrix ddcayinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                          const SquareMatrix& htilde) {
  detail::require_same_dim(omega, h, "ddcayinv_dir");
  detail::require_same_dim(omega, htilde, "ddcayinv_dir");
  SquareMatrix h_ht = h * htilde;
  SquareMatrix ht_h = htilde * h;
  SquareMatrix r(ht_h);
  r -= h_ht;
  r -= omega * h_ht;
  r -= ht_h * omega;
  r *= 0.5;
  return r;
}

SquareMatrix d2cayinv_dir(const SquareMatrix& h, const SquareMatrix& htilde) {
  detail::require_same_dim(h, htilde, "d2cayinv_dir");
  return -(htilde * h * htilde);
}

namespace {

// Directional derivatives of the k<=4 truncation of dexp^{-1}_{-Omega}(H).
// With X_k = ad_{-Omega}^k(H), the product rule gives
//   X'_k = [-Ht, X_{k-1}] + [-Omega, X'_{k-1}],
//   X''_k = 2[-Ht, X'_{k-1}] + [-Omega, X''_{k-1}],
// and the derivative of the series is sum_k (B_k/k!) X^{(m)}_k.
struct ExpDirDerivs {
  SquareMatrix first;
  SquareMatrix second;
};

ExpDirDerivs dexpinv_dir_derivs(const SquareMatrix& omega, const SquareMatrix& h,
                                const SquareMatrix& htilde) {
  detail::require_same_dim(omega, h, "ddexpinv_dir");
  detail::require_same_dim(omega, htilde, "ddexpinv_dir");
  const int n = omega.dim();
  SquareMatrix neg_omega = -omega;
  SquareMatrix neg_ht = -htilde;
  SquareMatrix x0(h);
  SquareMatrix x1(n);  // zero
  SquareMatrix x2(n);
  SquareMatrix acc1(n);
  SquareMatrix acc2(n);
  for (int k = 1; k <= 4; ++k) {
    SquareMatrix nx2 = commutator(neg_ht, x1);
    nx2 *= 2.0;
    nx2 += commutator(neg_omega, x2);
    SquareMatrix nx1 = commutator(neg_ht, x0);
    nx1 += commutator(neg_omega, x1);
    x0 = commutator(neg_omega, x0);
    x1 = std::move(nx1);
    x2 = std::move(nx2);
    const double c = kBernoulliOverFactorial[k];
    if (c != 0.0) {
      acc1.add_scaled(c, x1);
      acc2.add_scaled(c, x2);
    }
  }
  return {std::move(acc1), std::move(acc2)};
}

}  // namespace

SquareMatrix ddexpinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                          const SquareMatrix& htilde) {
  return dexpinv_dir_derivs(omega, h, htilde).first;
}

SquareMatrix d2dexpinv_dir(const SquareMatrix& omega, const SquareMatrix& h,
                           const SquareMatrix& htilde) {
  return dexpinv_dir_derivs(omega, h, htilde).second;
}

SquareMatrix c_coeff_cayley(const SquareMatrix& v, const SquareMatrix& omega) {
  detail::require_same_dim(v, omega, "c_coeff_cayley");
  return v * omega * v;
}

SquareMatrix c_coeff_exp_trunc(const SquareMatrix& omega, const SquareMatrix& gamma,
                               int max_total) {
  detail::require_same_dim(omega, gamma, "c_coeff_exp_trunc");
  const int n = omega.dim();
  SquareMatrix acc(n);
  double p_factorial = 1.0;
  for (int p = 0; p <= max_total; ++p) {
    if (p > 0) p_factorial *= p;
    double q1_factorial = 1.0;  // (q+1)!
    for (int q = 0; p + q <= max_total; ++q) {
      if (q > 0) q1_factorial *= (q + 1);
      const double sign = (p % 2 == 0) ? 1.0 : -1.0;
      const double w = sign / ((p + q + 2) * p_factorial * q1_factorial);
      SquareMatrix inner = adjoint_power(omega, gamma, q);
      inner = commutator(gamma, inner);
      acc.add_scaled(w, adjoint_power(omega, inner, p));
    }
  }
  return acc;
}

std::vector<SquareMatrix> son_generators(int n) {
  if (n < 2) throw Unsupported("son_generators: n must be >= 2");
  std::vector<SquareMatrix> gens;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      SquareMatrix g(n);
      g(i, j) = -1.0;
      g(j, i) = 1.0;
      gens.push_back(std::move(g));
    }
  }
  return gens;
}

SquareMatrix drift_from_diffusion(const SquareMatrix& v) {
  SquareMatrix skew_defect = v + v.transpose();
  if (frobenius_norm(skew_defect) > 1e-12 * (1.0 + frobenius_norm(v))) {
    throw NotSkew("drift_from_diffusion: V is not skew-symmetric");
  }
  SquareMatrix v2 = v * v;
  const int n = v.dim();
  SquareMatrix k(n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 0.5 * v2(i, i);
    for (int j = 0; j < i; ++j) k(i, j) = v2(i, j);
  }
  return k;
}

}  // namespace liesde
