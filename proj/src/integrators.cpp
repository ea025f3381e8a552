#include "liesde/integrators.hpp"

#include <cmath>
#include <string>

namespace liesde {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::GEM: return "gem";
    case Scheme::GIT15: return "git15";
    case Scheme::GSRK15: return "gsrk15";
    case Scheme::FlatEM: return "em";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "gem") return Scheme::GEM;
  if (name == "git15") return Scheme::GIT15;
  if (name == "gsrk15") return Scheme::GSRK15;
  if (name == "em") return Scheme::FlatEM;
  throw ConfigError("unknown scheme '" + name + "' (gem, git15, gsrk15, em)");
}

double SchemeConfig::strong_order() const {
  switch (scheme) {
    case Scheme::GEM: return 1.0;
    case Scheme::GIT15:
    case Scheme::GSRK15: return 1.5;
    case Scheme::FlatEM: return 0.5;
  }
  return 0.0;
}

void SchemeConfig::validate() const {
  if (scheme == Scheme::FlatEM) return;
  if (param.kind != MapKind::Exponential) return;
  const int required = static_cast<int>(std::lround(std::ceil(2.0 * strong_order() - 2.0)));
  if (param.truncation_q < required && !allow_underresolved) {
    throw ConfigError("truncation index q=" + std::to_string(param.truncation_q) +
                      " violates q >= 2*gamma - 2 = " + std::to_string(required) +
                      " for strong order " + std::to_string(strong_order()) +
                      " (pass --allow-underresolved to run anyway)");
  }
}

SquareMatrix step_gem(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc) {
  SquareMatrix omega = coeffs.drift0() * inc.dt;
  omega.add_scaled(inc.dW, coeffs.diffusion0());
  return omega;
}

SquareMatrix step_git15(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc) {
  const SquareMatrix& a0 = coeffs.drift0();
  const SquareMatrix& g0 = coeffs.diffusion0();
  const SquareMatrix& v0 = coeffs.v0();
  const SquareMatrix& ka = coeffs.drift_input0();  // K - V^2/2

  // Directional derivatives at the anchor; composite terms assemble by
  // inserting the inner results as directions. The drift argument carries
  // -C(Omega)/2 whose value vanishes at the anchor but whose slope does
  // not, so the A-derivatives pick up C' and C'' corrections.
  const SquareMatrix gp_g = coeffs.dpsi_inv_d1(v0, g0);            // Gamma' Gamma
  const SquareMatrix cp_g = (-0.5) * coeffs.c_coeff_d1(g0);
  const SquareMatrix cp_a = (-0.5) * coeffs.c_coeff_d1(a0);
  SquareMatrix ap_g = coeffs.dpsi_inv_d1(ka, g0);                  // A' Gamma
  ap_g += coeffs.apply_dpsi_inv_at0(cp_g);
  SquareMatrix ap_a = coeffs.dpsi_inv_d1(ka, a0);                  // A' A
  ap_a += coeffs.apply_dpsi_inv_at0(cp_a);
  SquareMatrix app_gg = coeffs.dpsi_inv_d2(ka, g0);                // A'' Gamma^2
  app_gg.add_scaled(2.0, coeffs.dpsi_inv_d1(cp_g, g0));
  app_gg += coeffs.apply_dpsi_inv_at0((-0.5) * coeffs.c_coeff_d2(g0));
  const SquareMatrix gp_a = coeffs.dpsi_inv_d1(v0, a0);            // Gamma' A
  const SquareMatrix gpp_gg = coeffs.dpsi_inv_d2(v0, g0);          // Gamma'' Gamma^2
  SquareMatrix gpg_p_g = gpp_gg;                                   // (Gamma' Gamma)' Gamma
  gpg_p_g += coeffs.dpsi_inv_d1(v0, gp_g);

  const double h = inc.dt;
  const double dw = inc.dW;
  const double dz = inc.dZ;

  SquareMatrix omega = a0 * h;
  omega.add_scaled(dw, g0);
  omega.add_scaled(0.5 * (dw * dw - h), gp_g);
  omega.add_scaled(dz, ap_g);
  omega.add_scaled(0.5 * h * h, ap_a);
  omega.add_scaled(0.25 * h * h, app_gg);
  omega.add_scaled(dw * h - dz, gp_a);
  omega.add_scaled(0.5 * (dw * h - dz), gpp_gg);
  omega.add_scaled(0.5 * (dw * dw / 3.0 - h) * dw, gpg_p_g);
  // Nonautonomous part of the L0 operator applied to A and Gamma; exactly
  // zero for time-independent coefficients.
  omega.add_scaled(0.5 * h * h, coeffs.drift_time_derivative0());
  omega.add_scaled(dw * h - dz, coeffs.diffusion_time_derivative0());
  return omega;
}

SquareMatrix step_gsrk15(const AlgebraCoefficients& coeffs, const NoiseIncrement& inc) {
  const double h = inc.dt;
  if (!(h > 0.0)) throw ZeroStepSize("step_gsrk15: dt must be positive");
  const double sqh = std::sqrt(h);
  const double dw = inc.dW;
  const double dz = inc.dZ;

  const double t0 = coeffs.anchor_time();
  const SquareMatrix& a1 = coeffs.drift0();      // A(H1), H1 = H3 = Omega_0
  const SquareMatrix& g1 = coeffs.diffusion0();  // Gamma(Ht1)

  // Stage times are the tableau row sums (internal consistency); the drift
  // rows of Ht3 and Ht4 carry the signs required by the strong-1.5 order
  // conditions for the printed beta weights.
  SquareMatrix h2 = a1 * (0.75 * h);
  h2.add_scaled(1.5 * dz / h, g1);
  const SquareMatrix a2 = coeffs.drift_at_time(h2, t0 + 0.75 * h);

  SquareMatrix ht2 = a1 * (h / 9.0);
  ht2.add_scaled(sqh / 3.0, g1);
  const SquareMatrix g2 = coeffs.diffusion_at_time(ht2, t0 + h / 9.0);

  SquareMatrix ht3 = a1 * (-5.0 * h / 9.0);
  ht3.add_scaled(h / 3.0, a2);
  ht3.add_scaled(-sqh / 3.0, g1);
  ht3.add_scaled(sqh, g2);
  const SquareMatrix g3 = coeffs.diffusion_at_time(ht3, t0 - 2.0 * h / 9.0);

  SquareMatrix ht4 = SquareMatrix(a1.dim());  // -A(H1) dt + A(H3) dt cancels
  ht4.add_scaled(h / 3.0, a2);
  ht4.add_scaled(sqh, g1);
  ht4.add_scaled(-sqh, g2);
  ht4.add_scaled(sqh, g3);
  const SquareMatrix g4 = coeffs.diffusion_at_time(ht4, t0 + h / 3.0);

  const double w1 = dw;
  const double w2 = (dw * dw - h) / (2.0 * sqh);
  const double w3 = dz / h;
  const double w4 = (dw * dw - 3.0 * h) * dw / (6.0 * h);

  SquareMatrix omega = a1 * (h / 3.0);
  omega.add_scaled(2.0 * h / 3.0, a2);
  omega.add_scaled(3.25 * w1 - 3.75 * w2 - 2.25 * w3 + 6.0 * w4, g1);
  omega.add_scaled(-2.25 * w1 + 3.75 * w2 + 2.25 * w3 - 9.0 * w4, g2);
  omega.add_scaled(-2.25 * w1 + 0.75 * w2 + 2.25 * w3, g3);
  omega.add_scaled(2.25 * w1 - 0.75 * w2 - 2.25 * w3 + 3.0 * w4, g4);
  return omega;
}

SquareMatrix scheme_step(Scheme scheme, const AlgebraCoefficients& coeffs,
                         const NoiseIncrement& inc) {
  switch (scheme) {
    case Scheme::GEM: return step_gem(coeffs, inc);
    case Scheme::GIT15: return step_git15(coeffs, inc);
    case Scheme::GSRK15: return step_gsrk15(coeffs, inc);
    case Scheme::FlatEM: break;
  }
  throw ConfigError("scheme_step: FlatEM has no algebra-level step");
}

SquareMatrix step_flat_em(const LieSDEModel& model, double t, const SquareMatrix& q,
                          const NoiseIncrement& inc) {
  const SquareMatrix k = model.K(t, q);
  const SquareMatrix v = model.V(t, q);
  SquareMatrix next = q;
  if (model.side == MultiplySide::Left) {
    next.add_scaled(inc.dt, q * k);
    next.add_scaled(inc.dW, q * v);
  } else {
    next.add_scaled(inc.dt, k * q);
    next.add_scaled(inc.dW, v * q);
  }
  return next;
}

double manifold_distance(const SquareMatrix& q, const GroupDescriptor& group) {
  if (group.kind == GroupKind::SOn) {
    SquareMatrix gram = q.transpose() * q;
    for (int i = 0; i < q.dim(); ++i) gram(i, i) -= 1.0;
    return frobenius_norm(gram);
  }
  double norm2 = 0.0;
  const int n = q.dim();
  for (int i = 0; i < n; ++i) {
    double yi = 0.0;
    for (int j = 0; j < n; ++j) yi += q(i, j) * group.carrier_y0[static_cast<std::size_t>(j)];
    norm2 += yi * yi;
  }
  return std::abs(std::sqrt(norm2) - 1.0);
}

namespace {

std::vector<double> carrier_vector(const SquareMatrix& q, const GroupDescriptor& group) {
  const int n = q.dim();
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      y[static_cast<std::size_t>(i)] += q(i, j) * group.carrier_y0[static_cast<std::size_t>(j)];
  return y;
}

template <typename Observer>
void run_path(const LieSDEModel& model, const SchemeConfig& cfg,
              std::span<const NoiseIncrement> increments, Observer&& observe) {
  cfg.validate();
  SquareMatrix q = SquareMatrix::identity(model.dim);
  observe(0, 0.0, q);
  double t = 0.0;
  for (std::size_t j = 0; j < increments.size(); ++j) {
    const NoiseIncrement& inc = increments[j];
    const auto context = [&](const char* what) {
      return "step " + std::to_string(j) + " (t=" + std::to_string(t) + "): " + what;
    };
    try {
      if (cfg.scheme == Scheme::FlatEM) {
        q = step_flat_em(model, t, q, inc);
      } else {
        const AlgebraCoefficients coeffs(model, cfg.param, t, q);
        const SquareMatrix omega = scheme_step(cfg.scheme, coeffs, inc);
        const SquareMatrix proj = psi_apply(cfg.param, omega);
        q = model.side == MultiplySide::Left ? q * proj : proj * q;
      }
    } catch (const SingularMatrix& e) {
      throw SingularMatrix(context(e.what()));
    } catch (const DomainError& e) {
      throw DomainError(context(e.what()));
    }
    if (!q.all_finite()) {
      throw NonFiniteState("non-finite state at step " + std::to_string(j) +
                           " (t=" + std::to_string(t) + ")");
    }
    t = inc.dt * static_cast<double>(j + 1);
    observe(j + 1, t, q);
  }
}

}  // namespace

Trajectory simulate_path(const LieSDEModel& model, const SchemeConfig& cfg, double T,
                         double dt, std::span<const NoiseIncrement> increments) {
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  if (std::abs(static_cast<double>(steps) * dt - T) > 1e-9 * std::max(1.0, T) ||
      steps != increments.size()) {
    throw ConfigError("simulate_path: T/dt must match the increment count");
  }
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.drift_series.reserve(steps + 1);
  const bool track_carrier = model.group.kind == GroupKind::UnitSphereCarrier;
  run_path(model, cfg, increments, [&](std::size_t, double t, const SquareMatrix& q) {
    traj.times.push_back(t);
    traj.states.push_back(q);
    traj.drift_series.push_back(manifold_distance(q, model.group));
    if (track_carrier) traj.carrier.push_back(carrier_vector(q, model.group));
  });
  return traj;
}

PathResult run_path_terminal(const LieSDEModel& model, const SchemeConfig& cfg,
                             std::span<const NoiseIncrement> increments) {
  PathResult result;
  result.terminal = SquareMatrix::identity(model.dim);
  run_path(model, cfg, increments, [&](std::size_t j, double, const SquareMatrix& q) {
    const double d = manifold_distance(q, model.group);
    if (d > result.max_drift) result.max_drift = d;
    if (j == increments.size()) result.terminal = q;
  });
  return result;
}

}  // namespace liesde
