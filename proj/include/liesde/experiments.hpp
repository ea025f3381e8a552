#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "liesde/integrators.hpp"

namespace liesde {

struct ConvergenceReport {
  std::vector<double> step_sizes;
  std::vector<double> mean_errors;
  double slope = 0.0;
  double intercept = 0.0;
  int n_paths = 0;
  double T = 0.0;
  double dt_ref = 0.0;
  uint64_t seed = 0;
  std::string scheme;
  std::string param;
  int truncation_q = 0;
  std::string reference_param;
};

struct ConvergenceSettings {
  double T = 1.0;
  std::vector<double> dt_list;  // power-of-2 multiples of dt_ref
  double dt_ref = 0.0;
  int n_paths = 200;
  uint64_t seed = 42;
  // The reference is the same scheme family run with psi = cay on the
  // finest grid; override to probe the reference bias.
  Parametrization reference_param = Parametrization::cayley();
  int threads = 1;
};

/// Coupled strong-convergence study: one Brownian resolution at dt_ref per
/// path, reference run on the fine grid, coarsened reruns per step size,
/// mean terminal Frobenius error, and a least-squares slope in log2-log2.
ConvergenceReport convergence_study(const LieSDEModel& model, const SchemeConfig& cfg,
                                    const ConvergenceSettings& settings);

/// Ordinary least squares through (log2 dt, log2 error) points.
std::pair<double, double> fit_slope(const std::vector<std::pair<double, double>>& points);

struct RigidBodyConfig {
  std::array<double, 3> inertia{2.0, 1.0, 2.0 / 3.0};
  std::array<double, 3> y0{std::sin(1.1), 0.0, std::cos(1.1)};
  double dt = 0.03;
  int steps = 200;
  uint64_t seed = 1;
  SchemeConfig scheme{Scheme::GEM, Parametrization::cayley()};
};

struct RigidBodyResult {
  Trajectory geometric;
  Trajectory flat;
};

/// Runs the geometric scheme and the flat Euler-Maruyama on the same noise.
RigidBodyResult rigid_body_run(const RigidBodyConfig& cfg);

struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<double> a;
  std::vector<double> b;
};

/// CSV with header `date,price_a,price_b`; strictly positive prices.
PriceSeries load_prices_csv(const std::string& path);

/// Correlated geometric Brownian motion pair as a stand-in for market data.
PriceSeries synthesize_gbm_pair(int days, double rho, uint64_t seed);

/// Pearson correlation of log-returns over trailing windows. Windows with
/// (numerically) zero variance yield NaN markers, which downstream density
/// estimation skips.
std::vector<double> rolling_correlation(const std::vector<double>& price_a,
                                        const std::vector<double>& price_b, int window = 30);

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> values;
  double bandwidth = 0.0;
  double mass() const;  // trapezoidal integral over the grid
};

std::vector<double> uniform_grid(double lo, double hi, int points);

/// Gaussian-kernel density estimate with Silverman's bandwidth
/// 0.9 min(sigma, IQR/1.34) N^{-1/5}. NaN samples are skipped; at least 10
/// finite samples required.
DensityEstimate kde(const std::vector<double>& samples, const std::vector<double>& grid);

/// Trapezoid-weighted L2 distance between densities on a common grid.
double density_l2_distance(const DensityEstimate& f, const DensityEstimate& g);

struct CorrelationFlowConfig {
  double c = 0.3;  // noise amplitude of V = c J
  double r0_offdiag = -0.0159;
  double T = 1.0;
  double dt = 1.0 / 256.0;
  int n_paths = 400;
  uint64_t seed = 7;
  SchemeConfig scheme{Scheme::GIT15, Parametrization::cayley()};
};

/// Terminal off-diagonal correlation samples of the SO(2) flow
/// R_t = Sigma^{-1} (Q^T P0 Q) Sigma^{-1} with P0 = R0.
std::vector<double> correlation_flow(const CorrelationFlowConfig& cfg);

struct CalibrationResult {
  double c = 0.0;
  double distance = 0.0;
  int evaluations = 0;
};

/// Golden-section search over the scalar noise amplitude, minimizing the L2
/// distance between kde(flow_factory(c)) on hist.grid and hist. Returns the
/// best probe within the evaluation budget.
CalibrationResult calibrate(const DensityEstimate& hist,
                            const std::function<std::vector<double>(double)>& flow_factory,
                            double lo, double hi, int budget);

// CSV emitters shared by the CLI (plain UTF-8, gnuplot friendly).
void write_convergence_csv(const std::string& path, const ConvergenceReport& report);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_drift_csv(const std::string& path, const Trajectory& geometric,
                     const Trajectory& flat);
void write_density_csv(const std::string& path, const DensityEstimate& hist,
                       const DensityEstimate& model);

}  // namespace liesde
