#include "liesde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace liesde {

namespace {

int64_t grid_factor(double dt, double dt_ref) {
  const double ratio = dt / dt_ref;
  const auto factor = static_cast<int64_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 ||
      (factor & (factor - 1)) != 0) {
    throw IncompatibleGrids("step size " + std::to_string(dt) +
                            " is not a power-of-2 multiple of dt_ref " +
                            std::to_string(dt_ref));
  }
  return factor;
}

void format_double(std::ofstream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

std::pair<double, double> fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw InsufficientPoints("fit_slope: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(points.size());
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

ConvergenceReport convergence_study(const LieSDEModel& model, const SchemeConfig& cfg,
                                    const ConvergenceSettings& settings) {
  cfg.validate();
  if (settings.n_paths < 2) throw ConfigError("convergence_study: need at least 2 paths");
  if (settings.dt_list.size() < 1) throw ConfigError("convergence_study: empty dt list");

  const auto n_fine = static_cast<int64_t>(std::llround(settings.T / settings.dt_ref));
  if (std::abs(static_cast<double>(n_fine) * settings.dt_ref - settings.T) >
      1e-9 * std::max(1.0, settings.T)) {
    throw IncompatibleGrids("convergence_study: T is not a multiple of dt_ref");
  }
  std::vector<int64_t> factors;
  for (double dt : settings.dt_list) {
    const int64_t f = grid_factor(dt, settings.dt_ref);
    if (n_fine % f != 0) {
      throw IncompatibleGrids("convergence_study: T/dt not integral for dt = " +
                              std::to_string(dt));
    }
    factors.push_back(f);
  }

  SchemeConfig ref_cfg = cfg;
  ref_cfg.param = settings.reference_param;
  if (ref_cfg.param.kind == MapKind::Exponential && cfg.param.kind == MapKind::Exponential) {
    ref_cfg.param.truncation_q = cfg.param.truncation_q;
  }
  ref_cfg.validate();

  const std::size_t n_dt = settings.dt_list.size();
  const auto n_paths = static_cast<std::size_t>(settings.n_paths);
  // Per-path error slots keep the final reduction independent of the number
  // of workers.
  std::vector<double> errors(n_paths * n_dt, 0.0);

  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int threads = std::max(1, settings.threads);
  auto worker = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t p = begin; p < end; ++p) {
        const auto fine_row =
            brownian_row(settings.seed, static_cast<uint64_t>(p), settings.dt_ref, n_fine);
        const SquareMatrix q_ref = run_path_terminal(model, ref_cfg, fine_row).terminal;
        for (std::size_t i = 0; i < n_dt; ++i) {
          const auto coarse = coarsen_row(fine_row, factors[i]);
          const SquareMatrix q_dt = run_path_terminal(model, cfg, coarse).terminal;
          errors[p * n_dt + i] = frobenius_norm(q_ref - q_dt);
        }
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads == 1) {
    worker(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + static_cast<std::size_t>(threads) - 1) /
                              static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n_paths, static_cast<std::size_t>(t) * chunk);
      const std::size_t end = std::min(n_paths, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ConvergenceReport report;
  report.step_sizes = settings.dt_list;
  report.mean_errors.assign(n_dt, 0.0);
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t i = 0; i < n_dt; ++i) report.mean_errors[i] += errors[p * n_dt + i];
  for (double& e : report.mean_errors) e /= static_cast<double>(n_paths);

  if (n_dt >= 2) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n_dt; ++i) {
      pts.emplace_back(std::log2(settings.dt_list[i]), std::log2(report.mean_errors[i]));
    }
    std::tie(report.slope, report.intercept) = fit_slope(pts);
  }
  report.n_paths = settings.n_paths;
  report.T = settings.T;
  report.dt_ref = settings.dt_ref;
  report.seed = settings.seed;
  report.scheme = scheme_name(cfg.scheme);
  report.param = cfg.param.name();
  report.truncation_q = cfg.param.truncation_q;
  report.reference_param = settings.reference_param.name();
  return report;
}

RigidBodyResult rigid_body_run(const RigidBodyConfig& cfg) {
  const LieSDEModel model = make_rigid_body_model(cfg.inertia, cfg.y0);
  const double T = cfg.dt * cfg.steps;
  const auto row = brownian_row(cfg.seed, 0, cfg.dt, cfg.steps);
  RigidBodyResult result;
  result.geometric = simulate_path(model, cfg.scheme, T, cfg.dt, row);
  SchemeConfig flat;
  flat.scheme = Scheme::FlatEM;
  result.flat = simulate_path(model, flat, T, cfg.dt, row);
  return result;
}

PriceSeries load_prices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedCsv("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedCsv(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,price_a,price_b") {
    throw MalformedCsv(path + ": expected header 'date,price_a,price_b', got '" + line + "'");
  }
  PriceSeries series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string date, pa, pb;
    if (!std::getline(ss, date, ',') || !std::getline(ss, pa, ',') || !std::getline(ss, pb)) {
      throw MalformedCsv(path + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    double va, vb;
    try {
      std::size_t used_a = 0, used_b = 0;
      va = std::stod(pa, &used_a);
      vb = std::stod(pb, &used_b);
      if (used_a != pa.size() || used_b != pb.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw MalformedCsv(path + ":" + std::to_string(line_no) + ": non-numeric price");
    }
    if (!(va > 0.0) || !(vb > 0.0)) {
      throw MalformedCsv(path + ":" + std::to_string(line_no) + ": prices must be positive");
    }
    series.dates.push_back(date);
    series.a.push_back(va);
    series.b.push_back(vb);
  }
  return series;
}

PriceSeries synthesize_gbm_pair(int days, double rho, uint64_t seed) {
  if (days < 2) throw ConfigError("synthesize_gbm_pair: need at least 2 days");
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("synthesize_gbm_pair: rho in (-1,1)");
  constexpr double mu = 0.05, vol_a = 0.2, vol_b = 0.25, dt = 1.0 / 252.0;
  NormalStream stream(seed, 0);
  PriceSeries series;
  double pa = 100.0, pb = 50.0;
  const double orth = std::sqrt(1.0 - rho * rho);
  for (int d = 0; d < days; ++d) {
    if (d > 0) {
      const double z1 = stream.next();
      const double z2 = rho * z1 + orth * stream.next();
      pa *= std::exp((mu - 0.5 * vol_a * vol_a) * dt + vol_a * std::sqrt(dt) * z1);
      pb *= std::exp((mu - 0.5 * vol_b * vol_b) * dt + vol_b * std::sqrt(dt) * z2);
    }
    char date[16];
    std::snprintf(date, sizeof(date), "day-%04d", d);
    series.dates.emplace_back(date);
    series.a.push_back(pa);
    series.b.push_back(pb);
  }
  return series;
}

std::vector<double> rolling_correlation(const std::vector<double>& price_a,
                                        const std::vector<double>& price_b, int window) {
  if (window < 2) throw ConfigError("rolling_correlation: window must be >= 2");
  if (price_a.size() != price_b.size()) {
    throw MalformedCsv("rolling_correlation: series lengths differ");
  }
  if (price_a.size() < static_cast<std::size_t>(window) + 1) {
    throw MalformedCsv("rolling_correlation: need at least window+1 rows");
  }
  const std::size_t n_ret = price_a.size() - 1;
  std::vector<double> ra(n_ret), rb(n_ret);
  for (std::size_t i = 0; i < n_ret; ++i) {
    ra[i] = std::log(price_a[i + 1] / price_a[i]);
    rb[i] = std::log(price_b[i + 1] / price_b[i]);
  }
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> out;
  out.reserve(n_ret - w + 1);
  for (std::size_t start = 0; start + w <= n_ret; ++start) {
    double ma = 0, mb = 0;
    for (std::size_t k = 0; k < w; ++k) {
      ma += ra[start + k];
      mb += rb[start + k];
    }
    ma /= static_cast<double>(w);
    mb /= static_cast<double>(w);
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t k = 0; k < w; ++k) {
      const double da = ra[start + k] - ma;
      const double db = rb[start + k] - mb;
      saa += da * da;
      sbb += db * db;
      sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());  // degenerate window
    } else {
      out.push_back(std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0));
    }
  }
  return out;
}

double DensityEstimate::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    m += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
  }
  return m;
}

std::vector<double> uniform_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw ConfigError("uniform_grid: bad range");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  return g;
}

namespace {

double interpolated_quantile(std::vector<double> sorted, double p) {
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DensityEstimate kde(const std::vector<double>& samples, const std::vector<double>& grid) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (double s : samples) {
    if (std::isfinite(s)) xs.push_back(s);
  }
  if (xs.size() < 10) throw TooFewSamples("kde: need at least 10 finite samples");

  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
  const double sigma = std::sqrt(var);

  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = interpolated_quantile(sorted, 0.75) - interpolated_quantile(sorted, 0.25);

  double spread = std::min(sigma, iqr / 1.34);
  if (spread <= 0.0) spread = std::max(sigma, iqr / 1.34);
  if (spread <= 0.0) spread = 1.0;  // all samples identical
  const double h = 0.9 * spread * std::pow(n, -0.2);

  DensityEstimate est;
  est.grid = grid;
  est.bandwidth = h;
  est.values.assign(grid.size(), 0.0);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = 0.0;
    for (double x : xs) {
      const double u = (grid[i] - x) / h;
      acc += std::exp(-0.5 * u * u);
    }
    est.values[i] = acc * norm;
  }
  return est;
}

double density_l2_distance(const DensityEstimate& f, const DensityEstimate& g) {
  if (f.grid.size() != g.grid.size()) {
    throw ConfigError("density_l2_distance: grids differ in size");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < f.grid.size(); ++i) {
    const double d0 = f.values[i] - g.values[i];
    const double d1 = f.values[i + 1] - g.values[i + 1];
    acc += 0.5 * (d0 * d0 + d1 * d1) * (f.grid[i + 1] - f.grid[i]);
  }
  return std::sqrt(acc);
}

std::vector<double> correlation_flow(const CorrelationFlowConfig& cfg) {
  if (!(cfg.r0_offdiag > -1.0 && cfg.r0_offdiag < 1.0)) {
    throw ConfigError("correlation_flow: off-diagonal of R0 must lie in (-1,1)");
  }
  cfg.scheme.validate();
  const LieSDEModel model = make_so2_correlation_model(cfg.c);
  const auto steps = static_cast<int64_t>(std::llround(cfg.T / cfg.dt));
  if (std::abs(static_cast<double>(steps) * cfg.dt - cfg.T) > 1e-9 * std::max(1.0, cfg.T)) {
    throw ConfigError("correlation_flow: T/dt must be integral");
  }
  // P0 = R0: unit variances make the correlation transform exact at t = 0.
  const SquareMatrix p0(2, {1.0, cfg.r0_offdiag, cfg.r0_offdiag, 1.0});

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.n_paths));
  for (int path = 0; path < cfg.n_paths; ++path) {
    const auto row = brownian_row(cfg.seed, static_cast<uint64_t>(path), cfg.dt, steps);
    const SquareMatrix q = run_path_terminal(model, cfg.scheme, row).terminal;
    const SquareMatrix p = q.transpose() * p0 * q;
    const double s0 = std::sqrt(p(0, 0));
    const double s1 = std::sqrt(p(1, 1));
    out.push_back(p(0, 1) / (s0 * s1));
  }
  return out;
}

CalibrationResult calibrate(const DensityEstimate& hist,
                            const std::function<std::vector<double>(double)>& flow_factory,
                            double lo, double hi, int budget) {
  CalibrationResult best;
  best.distance = std::numeric_limits<double>::infinity();
  if (budget < 1 || !(hi > lo)) return best;

  auto objective = [&](double c) {
    const DensityEstimate est = kde(flow_factory(c), hist.grid);
    const double d = density_l2_distance(est, hist);
    ++best.evaluations;
    if (d < best.distance) {
      best.distance = d;
      best.c = c;
    }
    return d;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = objective(x1);
  if (best.evaluations >= budget) return best;
  double f2 = objective(x2);
  while (best.evaluations < budget) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }
  return best;
}

void write_convergence_csv(const std::string& path, const ConvergenceReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "dt,mean_error\n";
  for (std::size_t i = 0; i < report.step_sizes.size(); ++i) {
    format_double(out, report.step_sizes[i]);
    out << ',';
    format_double(out, report.mean_errors[i]);
    out << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  const int n = traj.states.empty() ? 0 : traj.states.front().dim();
  out << 't';
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) out << ",Q" << i << j;
  const bool carrier = !traj.carrier.empty();
  if (carrier) {
    for (std::size_t i = 1; i <= traj.carrier.front().size(); ++i) out << ",y" << i;
  }
  out << ",drift\n";
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    format_double(out, traj.times[r]);
    const SquareMatrix& q = traj.states[r];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out << ',';
        format_double(out, q(i, j));
      }
    if (carrier) {
      for (double y : traj.carrier[r]) {
        out << ',';
        format_double(out, y);
      }
    }
    out << ',';
    format_double(out, traj.drift_series[r]);
    out << '\n';
  }
}

void write_drift_csv(const std::string& path, const Trajectory& geometric,
                     const Trajectory& flat) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "t,dist_geometric,dist_flat,log10_geometric,log10_flat\n";
  const double floor10 = 1e-18;
  for (std::size_t r = 0; r < geometric.times.size(); ++r) {
    format_double(out, geometric.times[r]);
    out << ',';
    format_double(out, geometric.drift_series[r]);
    out << ',';
    format_double(out, flat.drift_series[r]);
    out << ',';
    format_double(out, std::log10(std::max(geometric.drift_series[r], floor10)));
    out << ',';
    format_double(out, std::log10(std::max(flat.drift_series[r], floor10)));
    out << '\n';
  }
}

void write_density_csv(const std::string& path, const DensityEstimate& hist,
                       const DensityEstimate& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "x,hist,model\n";
  for (std::size_t i = 0; i < hist.grid.size(); ++i) {
    format_double(out, hist.grid[i]);
    out << ',';
    format_double(out, hist.values[i]);
    out << ',';
    format_double(out, model.values[i]);
    out << '\n';
  }
}

}  // namespace liesde
