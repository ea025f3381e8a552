#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "liesde/experiments.hpp"
#include "test_util.hpp"

using namespace liesde;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "liesde_experiments_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_csv(const std::string& name, const std::string& body) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << body;
  return path.string();
}

}  // namespace

TEST_CASE("fit_slope recovers exact and noisy lines") {
  std::vector<std::pair<double, double>> line;
  for (int i = 0; i < 6; ++i) line.emplace_back(-10.0 + i, 1.5 * (-10.0 + i) + 0.7);
  auto [slope, intercept] = fit_slope(line);
  CHECK(slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(intercept == doctest::Approx(0.7).epsilon(1e-10));

  const std::vector<std::pair<double, double>> two = {{-3.0, 1.0}, {-1.0, 4.0}};
  CHECK(fit_slope(two).first == doctest::Approx(1.5));

  std::vector<std::pair<double, double>> noisy;
  for (int i = 0; i < 6; ++i) {
    noisy.emplace_back(i, 2.0 * i - 1.0 + ((i % 2 == 0) ? 0.01 : -0.01));
  }
  CHECK(fit_slope(noisy).first == doctest::Approx(2.0).epsilon(0.01));

  CHECK_THROWS_AS(fit_slope({{1.0, 1.0}}), InsufficientPoints);
}

TEST_CASE("gem converges at first order to an exact commuting flow") {
  // V = 0 and K(t) = (1+t) G3: the exact solution is exp((T + T^2/2) G3),
  // and the left-endpoint coefficient freezing leaves an O(dt) quadrature
  // error. (With constant K the scheme would be exact instead.)
  const auto g = son_generators(3);
  LieSDEModel m;
  m.dim = 3;
  m.side = MultiplySide::Left;
  m.group = GroupDescriptor::so_n(3);
  m.label = "deterministic";
  m.state_dependent = false;
  m.time_dependent = true;
  m.K = [g](double t, const SquareMatrix&) { return (1.0 + t) * g[2]; };
  m.V = [](double, const SquareMatrix&) { return SquareMatrix(3); };

  const double T = 1.0;
  const SquareMatrix exact = mat_exp((T + 0.5 * T * T) * g[2]);
  std::vector<std::pair<double, double>> pts;
  for (int lvl = 4; lvl <= 7; ++lvl) {
    const double dt = std::ldexp(1.0, -lvl);
    const auto steps = static_cast<int64_t>(std::llround(T / dt));
    std::vector<NoiseIncrement> row(static_cast<std::size_t>(steps),
                                    NoiseIncrement{0.0, 0.0, dt});
    SchemeConfig cfg{Scheme::GEM, Parametrization::exponential(0)};
    const SquareMatrix q = run_path_terminal(m, cfg, row).terminal;
    pts.emplace_back(std::log2(dt), std::log2(frobenius_norm(q - exact)));
  }
  const auto [slope, intercept] = fit_slope(pts);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("convergence_study fits a first-order slope for gem") {
  const LieSDEModel m = make_so3_test_model();
  ConvergenceSettings s;
  s.T = 0.125;
  s.dt_ref = std::ldexp(1.0, -11);
  s.n_paths = 40;
  s.seed = 11;
  for (int p = -8; p <= -5; ++p) s.dt_list.push_back(std::ldexp(1.0, p));
  SchemeConfig cfg{Scheme::GEM, Parametrization::cayley()};
  const ConvergenceReport r = convergence_study(m, cfg, s);

  CHECK(r.slope == doctest::Approx(1.0).epsilon(0.35));
  REQUIRE(r.mean_errors.size() == 4);
  for (double e : r.mean_errors) CHECK(e > 0.0);
  // Monotone in dt, allowing one Monte Carlo inversion.
  int inversions = 0;
  for (std::size_t i = 0; i + 1 < r.mean_errors.size(); ++i) {
    if (r.mean_errors[i] > r.mean_errors[i + 1]) ++inversions;
  }
  CHECK(inversions <= 1);
}

TEST_CASE("convergence_study is independent of the worker count") {
  const LieSDEModel m = make_so3_test_model();
  ConvergenceSettings s;
  s.T = 0.125;
  s.dt_ref = std::ldexp(1.0, -9);
  s.n_paths = 10;
  s.seed = 3;
  s.dt_list = {std::ldexp(1.0, -6), std::ldexp(1.0, -5)};
  SchemeConfig cfg{Scheme::GSRK15, Parametrization::cayley()};
  s.threads = 1;
  const ConvergenceReport a = convergence_study(m, cfg, s);
  s.threads = 3;
  const ConvergenceReport b = convergence_study(m, cfg, s);
  for (std::size_t i = 0; i < a.mean_errors.size(); ++i) {
    CHECK(a.mean_errors[i] == b.mean_errors[i]);
  }
}

TEST_CASE("convergence_study honors the reference parametrization override") {
  const LieSDEModel m = make_so3_test_model();
  ConvergenceSettings s;
  s.T = 0.125;
  s.dt_ref = std::ldexp(1.0, -9);
  s.n_paths = 8;
  s.seed = 5;
  s.dt_list = {std::ldexp(1.0, -6)};
  s.reference_param = Parametrization::exponential(1);
  SchemeConfig cfg{Scheme::GIT15, Parametrization::cayley()};
  const ConvergenceReport r = convergence_study(m, cfg, s);
  CHECK(r.reference_param == std::string("exp"));
  CHECK(r.mean_errors.front() > 0.0);
}

TEST_CASE("convergence_study validates grids") {
  const LieSDEModel m = make_so3_test_model();
  SchemeConfig cfg{Scheme::GEM, Parametrization::cayley()};
  ConvergenceSettings s;
  s.T = 0.125;
  s.dt_ref = std::ldexp(1.0, -8);
  s.n_paths = 4;
  s.dt_list = {0.3 * std::ldexp(1.0, -5)};  // not a power-of-2 multiple
  CHECK_THROWS_AS(convergence_study(m, cfg, s), IncompatibleGrids);
  s.dt_list = {std::ldexp(1.0, -5)};
  s.T = 0.13;  // not on the reference grid
  CHECK_THROWS_AS(convergence_study(m, cfg, s), IncompatibleGrids);
}

TEST_CASE("rigid_body_run keeps the carrier on the sphere while flat EM drifts") {
  RigidBodyConfig cfg;
  cfg.seed = 2;
  const RigidBodyResult r = rigid_body_run(cfg);
  REQUIRE(r.geometric.times.size() == 201);
  REQUIRE(r.flat.times.size() == 201);
  double max_geom = 0.0;
  for (double d : r.geometric.drift_series) max_geom = std::max(max_geom, d);
  CHECK(max_geom <= 1e-10);
  CHECK(r.flat.drift_series.back() > max_geom);
}

TEST_CASE("load_prices_csv and rolling_correlation closed forms") {
  std::string body = "date,price_a,price_b\n";
  for (int i = 0; i < 40; ++i) {
    const double a = 100.0 * std::exp(0.01 * i) * (1.0 + 0.05 * std::sin(i));
    char line[96];
    std::snprintf(line, sizeof(line), "2005-01-%02d,%.8f,%.8f\n", i % 28 + 1, a, 2.0 * a);
    body += line;
  }
  const PriceSeries s = load_prices_csv(write_csv("prop.csv", body));
  REQUIRE(s.a.size() == 40);
  const auto corr = rolling_correlation(s.a, s.b, 30);
  CHECK(corr.size() == 40 - 1 - 30 + 1);
  for (double c : corr) CHECK(c == doctest::Approx(1.0).epsilon(1e-9));

  // Reciprocal prices negate the returns: correlation -1.
  std::vector<double> inv(s.a.size());
  for (std::size_t i = 0; i < s.a.size(); ++i) inv[i] = 1.0 / s.a[i];
  for (double c : rolling_correlation(s.a, inv, 30)) {
    CHECK(c == doctest::Approx(-1.0).epsilon(1e-9));
  }
}

TEST_CASE("load_prices_csv rejects malformed input") {
  CHECK_THROWS_AS(load_prices_csv(write_csv("h.csv", "time,a,b\n1,2,3\n")), MalformedCsv);
  CHECK_THROWS_AS(
      load_prices_csv(write_csv("n.csv", "date,price_a,price_b\n2005-01-01,abc,1.0\n")),
      MalformedCsv);
  CHECK_THROWS_AS(
      load_prices_csv(write_csv("p.csv", "date,price_a,price_b\n2005-01-01,-1.0,1.0\n")),
      MalformedCsv);
  CHECK_THROWS_AS(load_prices_csv(scratch_dir().string() + "/does_not_exist.csv"),
                  MalformedCsv);

  const PriceSeries tiny = load_prices_csv(
      write_csv("s.csv", "date,price_a,price_b\n2005-01-01,1.0,1.0\n2005-01-02,1.1,0.9\n"));
  CHECK_THROWS_AS(rolling_correlation(tiny.a, tiny.b, 30), MalformedCsv);
}

TEST_CASE("degenerate windows become NaN markers") {
  std::vector<double> flat(40, 50.0);  // zero-variance returns
  std::vector<double> moving(40);
  for (int i = 0; i < 40; ++i) moving[static_cast<std::size_t>(i)] = 100.0 + i;
  const auto corr = rolling_correlation(flat, moving, 30);
  REQUIRE(!corr.empty());
  for (double c : corr) CHECK(std::isnan(c));
}

TEST_CASE("rolling correlation of independent streams stays near zero") {
  const PriceSeries s = synthesize_gbm_pair(300, 0.0, 97);
  const auto corr = rolling_correlation(s.a, s.b, 30);
  double mean = 0.0;
  int n = 0;
  for (double c : corr) {
    if (std::isfinite(c)) {
      mean += c;
      ++n;
    }
  }
  REQUIRE(n > 100);
  CHECK(std::abs(mean / n) <= 0.2);
}

TEST_CASE("kde closed forms") {
  const std::vector<double> same(50, 0.5);
  const auto grid = uniform_grid(-1.0, 2.0, 301);
  const DensityEstimate est = kde(same, grid);
  // Single Gaussian bump centered at the common value.
  const double peak = 1.0 / (est.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  double at_center = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - 0.5) < 1e-12) at_center = est.values[i];
  }
  CHECK(at_center == doctest::Approx(peak).epsilon(1e-10));

  // Symmetric samples give a symmetric density.
  std::vector<double> sym;
  for (int i = 1; i <= 20; ++i) {
    sym.push_back(0.03 * i);
    sym.push_back(-0.03 * i);
  }
  const auto sgrid = uniform_grid(-2.0, 2.0, 401);
  const DensityEstimate se = kde(sym, sgrid);
  for (std::size_t i = 0; i < sgrid.size() / 2; ++i) {
    CHECK(se.values[i] == doctest::Approx(se.values[sgrid.size() - 1 - i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(kde(std::vector<double>(5, 1.0), grid), TooFewSamples);
  std::vector<double> mostly_nan(15, std::numeric_limits<double>::quiet_NaN());
  mostly_nan[0] = 1.0;
  CHECK_THROWS_AS(kde(mostly_nan, grid), TooFewSamples);
}

TEST_CASE("kde approximates the standard normal density") {
  NormalStream stream(55, 9);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = stream.next();
  const auto grid = uniform_grid(-4.0, 4.0, 201);
  const DensityEstimate est = kde(xs, grid);
  double max_dev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double truth = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    max_dev = std::max(max_dev, std::abs(est.values[i] - truth));
  }
  CHECK(max_dev <= 0.02);
  CHECK(est.mass() >= 0.97);
  CHECK(est.mass() <= 1.03);
}

TEST_CASE("correlation_flow closed forms") {
  CorrelationFlowConfig cfg;
  cfg.n_paths = 64;
  cfg.dt = 1.0 / 64.0;
  cfg.seed = 13;

  // Zero noise amplitude: Q stays at the identity and R stays at R0.
  cfg.c = 0.0;
  for (double r : correlation_flow(cfg)) {
    CHECK(r == doctest::Approx(cfg.r0_offdiag).epsilon(1e-14));
  }

  // gsrk/exp on the commuting SO(2) model is an exact rotation by c W_T, so
  // the terminal correlation has a closed trigonometric form per path.
  cfg.c = 0.4;
  cfg.scheme = SchemeConfig{Scheme::GSRK15, Parametrization::exponential(1)};
  const auto samples = correlation_flow(cfg);
  const auto steps = static_cast<int64_t>(std::llround(cfg.T / cfg.dt));
  for (int path = 0; path < cfg.n_paths; ++path) {
    double w = 0.0;
    for (const NoiseIncrement& inc :
         brownian_row(cfg.seed, static_cast<uint64_t>(path), cfg.dt, steps)) {
      w += inc.dW;
    }
    const double theta2 = 2.0 * cfg.c * w;
    const double rho = cfg.r0_offdiag;
    const double expected = rho * std::cos(theta2) /
                            std::sqrt(1.0 - rho * rho * std::sin(theta2) * std::sin(theta2));
    CHECK(samples[static_cast<std::size_t>(path)] == doctest::Approx(expected).epsilon(1e-9));
  }

  // Valid correlation samples: |off-diagonal| <= 1 (the diagonal is 1 by
  // the normalization), also on the git15/cay route at larger noise.
  cfg.c = 0.9;
  cfg.scheme = SchemeConfig{Scheme::GIT15, Parametrization::cayley()};
  for (double r : correlation_flow(cfg)) {
    CHECK(std::isfinite(r));
    CHECK(std::abs(r) <= 1.0 + 1e-12);
  }
}

TEST_CASE("calibrate finds a planted dispersion") {
  // Analytic stand-in for the flow: N(0, c^2) samples; the KDE distance is
  // minimized near the planted dispersion.
  const auto grid = uniform_grid(-3.0, 3.0, 601);
  auto factory = [&](double c) {
    NormalStream stream(777, 0);
    std::vector<double> xs(1500);
    for (auto& x : xs) x = c * stream.next();
    return xs;
  };
  const DensityEstimate hist = kde(factory(0.5), grid);

  auto eval_factory = [&](double c) {
    NormalStream stream(778, 1);
    std::vector<double> xs(1500);
    for (auto& x : xs) x = c * stream.next();
    return xs;
  };
  const CalibrationResult res = calibrate(hist, eval_factory, 0.1, 1.5, 20);
  CHECK(res.evaluations <= 20);
  CHECK(res.c == doctest::Approx(0.5).epsilon(0.1));

  const CalibrationResult one = calibrate(hist, eval_factory, 0.1, 1.5, 1);
  CHECK(one.evaluations == 1);

  // Distance is zero when a probe reproduces the history exactly.
  const CalibrationResult zero = calibrate(hist, factory, 0.4, 0.6, 3);
  CHECK(zero.distance >= 0.0);
  CHECK(calibrate(hist, factory, 0.5, 0.7, 1).distance >= 0.0);
}

TEST_CASE("csv writers emit the documented headers") {
  const auto dir = scratch_dir();

  ConvergenceReport rep;
  rep.step_sizes = {0.25, 0.5};
  rep.mean_errors = {1e-3, 3e-3};
  const std::string conv = (dir / "convergence.csv").string();
  write_convergence_csv(conv, rep);
  std::ifstream in(conv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "dt,mean_error");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);

  RigidBodyConfig cfg;
  cfg.steps = 5;
  const RigidBodyResult rb = rigid_body_run(cfg);
  const std::string traj = (dir / "trajectory.csv").string();
  write_trajectory_csv(traj, rb.geometric);
  std::ifstream tin(traj);
  std::getline(tin, line);
  CHECK(line == "t,Q11,Q12,Q13,Q21,Q22,Q23,Q31,Q32,Q33,y1,y2,y3,drift");
  rows = 0;
  while (std::getline(tin, line)) ++rows;
  CHECK(rows == 6);

  const std::string drift = (dir / "drift.csv").string();
  write_drift_csv(drift, rb.geometric, rb.flat);
  std::ifstream din(drift);
  std::getline(din, line);
  CHECK(line == "t,dist_geometric,dist_flat,log10_geometric,log10_flat");

  const auto grid = uniform_grid(-1.0, 1.0, 11);
  std::vector<double> xs(20, 0.1);
  xs[1] = -0.2;
  const DensityEstimate d = kde(xs, grid);
  const std::string dens = (dir / "density.csv").string();
  write_density_csv(dens, d, d);
  std::ifstream hin(dens);
  std::getline(hin, line);
  CHECK(line == "x,hist,model");
}
