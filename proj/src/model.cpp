#include "liesde/model.hpp"

#include <cmath>
#include <utility>

namespace liesde {

AlgebraCoefficients::AlgebraCoefficients(const LieSDEModel& model, const Parametrization& p,
                                         double t_j, const SquareMatrix& q_j)
    : model_(&model),
      param_(p),
      side_(model.side),
      t_(t_j),
      q_(q_j),
      k0_(model.K(t_j, q_j)),
      v0_(model.V(t_j, q_j)) {
  drift_input0_ = k0_;
  drift_input0_.add_scaled(-0.5, v0_ * v0_);
  // dpsi^{-1} at Omega = 0 coincides for both operator index signs.
  drift0_ = dpsi_inv(param_, SquareMatrix(model.dim), drift_input0_);
  diffusion0_ = dpsi_inv(param_, SquareMatrix(model.dim), v0_);
}

SquareMatrix AlgebraCoefficients::sided_dpsi_inv(const SquareMatrix& omega,
                                                 const SquareMatrix& h) const {
  // dpsi^{-1}_{+Omega}(H) equals the -index operator evaluated at -Omega.
  if (side_ == MultiplySide::Right) return dpsi_inv(param_, -omega, h);
  return dpsi_inv(param_, omega, h);
}

SquareMatrix AlgebraCoefficients::k_at(const SquareMatrix& omega, double t) const {
  if (!model_->state_dependent) {
    if (!model_->time_dependent || t == t_) return k0_;
    return model_->K(t, q_);
  }
  const SquareMatrix psi = psi_apply(param_, omega);
  return model_->K(t, side_ == MultiplySide::Right ? psi * q_ : q_ * psi);
}

SquareMatrix AlgebraCoefficients::v_at(const SquareMatrix& omega, double t) const {
  if (!model_->state_dependent) {
    if (!model_->time_dependent || t == t_) return v0_;
    return model_->V(t, q_);
  }
  const SquareMatrix psi = psi_apply(param_, omega);
  return model_->V(t, side_ == MultiplySide::Right ? psi * q_ : q_ * psi);
}

SquareMatrix AlgebraCoefficients::drift_at_time(const SquareMatrix& omega, double t) const {
  const double tt = model_->time_dependent ? t : t_;
  const SquareMatrix v = v_at(omega, tt);
  SquareMatrix input = k_at(omega, tt);
  input.add_scaled(-0.5, v * v);
  // Ito coefficient C(Omega): zero at the anchor, but stage evaluations at
  // Omega != 0 need it for the schemes to keep their strong order. Cayley:
  // C = V Omega V for either multiplication side. Exponential: truncated
  // double series; the right-multiply version is -C(-Omega).
  if (omega.max_abs() != 0.0) {
    if (param_.kind == MapKind::Cayley) {
      input.add_scaled(-0.5, v * omega * v);
    } else {
      const SquareMatrix gamma = sided_dpsi_inv(omega, v);
      if (side_ == MultiplySide::Left) {
        input.add_scaled(-0.5, c_coeff_exp_trunc(omega, gamma, 2));
      } else {
        input.add_scaled(0.5, c_coeff_exp_trunc(-omega, gamma, 2));
      }
    }
  }
  return sided_dpsi_inv(omega, input);
}

SquareMatrix AlgebraCoefficients::diffusion_at_time(const SquareMatrix& omega, double t) const {
  const double tt = model_->time_dependent ? t : t_;
  return sided_dpsi_inv(omega, v_at(omega, tt));
}

SquareMatrix AlgebraCoefficients::drift(const SquareMatrix& omega) const {
  return drift_at_time(omega, t_);
}

SquareMatrix AlgebraCoefficients::diffusion(const SquareMatrix& omega) const {
  return diffusion_at_time(omega, t_);
}

namespace {
constexpr double kTimeFdEps = 1e-5;
}

SquareMatrix AlgebraCoefficients::drift_time_derivative0() const {
  if (!model_->time_dependent) return SquareMatrix(model_->dim);
  const SquareMatrix zero(model_->dim);
  auto input = [&](double t) {
    const SquareMatrix v = model_->V(t, q_);
    SquareMatrix ka = model_->K(t, q_);
    ka.add_scaled(-0.5, v * v);
    return ka;
  };
  SquareMatrix dot = input(t_ + kTimeFdEps) - input(t_ - kTimeFdEps);
  dot *= 1.0 / (2.0 * kTimeFdEps);
  return dpsi_inv(param_, zero, dot);
}

SquareMatrix AlgebraCoefficients::diffusion_time_derivative0() const {
  if (!model_->time_dependent) return SquareMatrix(model_->dim);
  const SquareMatrix zero(model_->dim);
  SquareMatrix dot = model_->V(t_ + kTimeFdEps, q_) - model_->V(t_ - kTimeFdEps, q_);
  dot *= 1.0 / (2.0 * kTimeFdEps);
  return dpsi_inv(param_, zero, dot);
}

SquareMatrix AlgebraCoefficients::dpsi_inv_d1(const SquareMatrix& h,
                                              const SquareMatrix& dir) const {
  const SquareMatrix zero(h.dim());
  SquareMatrix d = param_.kind == MapKind::Cayley ? ddcayinv_dir(zero, h, dir)
                                                  : ddexpinv_dir(zero, h, dir);
  // d/dOmega f(-Omega) picks up one sign on first derivatives.
  if (side_ == MultiplySide::Right) d *= -1.0;
  return d;
}

SquareMatrix AlgebraCoefficients::dpsi_inv_d2(const SquareMatrix& h,
                                              const SquareMatrix& dir) const {
  if (param_.kind == MapKind::Cayley) return d2cayinv_dir(h, dir);
  return d2dexpinv_dir(SquareMatrix(h.dim()), h, dir);
}

SquareMatrix AlgebraCoefficients::apply_dpsi_inv_at0(const SquareMatrix& h) const {
  if (param_.kind == MapKind::Cayley) return 0.5 * h;
  return h;
}

SquareMatrix AlgebraCoefficients::c_coeff_d1(const SquareMatrix& dir) const {
  // Same for either multiplication side (the sign flips cancel).
  if (param_.kind == MapKind::Cayley) return v0_ * dir * v0_;
  return (1.0 / 6.0) * commutator(v0_, commutator(dir, v0_));
}

SquareMatrix AlgebraCoefficients::c_coeff_d2(const SquareMatrix& dir) const {
  if (param_.kind == MapKind::Cayley) return SquareMatrix(v0_.dim());  // C linear in Omega
  SquareMatrix r = commutator(v0_, commutator(dir, commutator(dir, v0_)));
  r -= commutator(dir, commutator(v0_, commutator(dir, v0_)));
  r *= 0.25;
  if (side_ == MultiplySide::Right) r *= -1.0;  // C_right(Omega) = -C_left(-Omega)
  return r;
}

LieSDEModel make_so3_test_model() {
  const auto gens = son_generators(3);
  LieSDEModel m;
  m.dim = 3;
  m.side = MultiplySide::Left;
  m.group = GroupDescriptor::so_n(3);
  m.label = "so3-test";
  m.state_dependent = false;
  const SquareMatrix g1 = gens[0], g2 = gens[1], g3 = gens[2];
  m.V = [g1, g2, g3](double t, const SquareMatrix&) {
    SquareMatrix v = std::cos(t) * g1;
    v.add_scaled(std::sin(t), g2);
    v.add_scaled(1.0 + t + t * t + t * t * t, g3);
    return v;
  };
  m.K = [V = m.V](double t, const SquareMatrix& q) { return drift_from_diffusion(V(t, q)); };
  return m;
}

SquareMatrix rigid_body_V(const std::array<double, 3>& y, const std::array<double, 3>& inertia) {
  for (double i : inertia) {
    if (!(i > 0.0)) throw InvalidInertia("rigid_body_V: moments of inertia must be positive");
  }
  const double a = y[2] / inertia[2];
  const double b = y[1] / inertia[1];
  const double c = y[0] / inertia[0];
  return SquareMatrix(3, {0.0, a, -b, -a, 0.0, c, b, -c, 0.0});
}

LieSDEModel make_rigid_body_model(const std::array<double, 3>& inertia,
                                  const std::array<double, 3>& y0) {
  const double norm = std::sqrt(y0[0] * y0[0] + y0[1] * y0[1] + y0[2] * y0[2]);
  if (std::abs(norm - 1.0) > 1e-12) {
    throw InvalidInitial("make_rigid_body_model: |y0| must be 1");
  }
  for (double i : inertia) {
    if (!(i > 0.0)) throw InvalidInertia("make_rigid_body_model: inertia must be positive");
  }
  LieSDEModel m;
  m.dim = 3;
  m.side = MultiplySide::Right;
  m.group = GroupDescriptor::unit_sphere({y0[0], y0[1], y0[2]});
  m.label = "rigid-body";
  m.state_dependent = true;
  m.time_dependent = false;
  auto carried_V = [inertia, y0](double, const SquareMatrix& q) {
    std::array<double, 3> y{};
    for (int i = 0; i < 3; ++i)
      y[i] = q(i, 0) * y0[0] + q(i, 1) * y0[1] + q(i, 2) * y0[2];
    return rigid_body_V(y, inertia);
  };
  m.V = carried_V;
  m.K = [carried_V](double t, const SquareMatrix& q) {
    return drift_from_diffusion(carried_V(t, q));
  };
  return m;
}

LieSDEModel make_so2_correlation_model(double c) {
  LieSDEModel m;
  m.dim = 2;
  m.side = MultiplySide::Left;
  m.group = GroupDescriptor::so_n(2);
  m.label = "so2-corr";
  m.state_dependent = false;
  m.time_dependent = false;
  const SquareMatrix v = c * son_generators(2)[0];
  const SquareMatrix k = drift_from_diffusion(v);
  m.V = [v](double, const SquareMatrix&) { return v; };
  m.K = [k](double, const SquareMatrix&) { return k; };
  return m;
}

LieSDEModel make_model_by_name(const std::string& name, double corr_c) {
  if (name == "so3-test") return make_so3_test_model();
  if (name == "rigid-body") {
    return make_rigid_body_model({2.0, 1.0, 2.0 / 3.0}, {std::sin(1.1), 0.0, std::cos(1.1)});
  }
  if (name == "so2-corr") return make_so2_correlation_model(corr_c);
  throw ConfigError("unknown model '" + name + "' (so3-test, rigid-body, so2-corr)");
}

}  // namespace liesde
