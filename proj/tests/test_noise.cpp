#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "liesde/noise.hpp"

using namespace liesde;

TEST_CASE("increment recipe closed forms") {
  const NoiseIncrement zero = increment_from_normals(0.0, 0.0, 0.5);
  CHECK(zero.dW == 0.0);
  CHECK(zero.dZ == 0.0);

  const NoiseIncrement one = increment_from_normals(1.0, 0.0, 1.0);
  CHECK(one.dW == doctest::Approx(1.0));
  CHECK(one.dZ == doctest::Approx(0.5));
}

TEST_CASE("sample_increment moments over 1e5 draws") {
  const double dt = 0.01;
  const int n = 100000;
  NormalStream stream(7, 0);
  double sw = 0, sww = 0, szz = 0, szw = 0;
  for (int i = 0; i < n; ++i) {
    const NoiseIncrement inc = sample_increment(stream, dt);
    sw += inc.dW;
    sww += inc.dW * inc.dW;
    szz += inc.dZ * inc.dZ;
    szw += inc.dZ * inc.dW;
  }
  const double inv_n = 1.0 / n;
  const double root_n = std::sqrt(static_cast<double>(n));
  // 5 standard errors around (0, dt, dt^3/3, dt^2/2).
  CHECK(std::abs(sw * inv_n) <= 5.0 * std::sqrt(dt) / root_n);
  CHECK(std::abs(sww * inv_n - dt) <= 5.0 * std::sqrt(2.0) * dt / root_n);
  const double var_z = dt * dt * dt / 3.0;
  CHECK(std::abs(szz * inv_n - var_z) <= 5.0 * std::sqrt(2.0) * var_z / root_n);
  // var(dZ dW) = Var_z Var_w + Cov^2 for a joint Gaussian pair.
  const double var_zw = var_z * dt + std::pow(dt * dt / 2.0, 2);
  CHECK(std::abs(szw * inv_n - dt * dt / 2.0) <= 5.0 * std::sqrt(var_zw) / root_n);
}

TEST_CASE("aggregate closed forms") {
  const NoiseIncrement a{0.0, 0.0, 0.25};
  const NoiseIncrement b{0.0, 0.0, 0.25};
  const NoiseIncrement ab = aggregate(a, b);
  CHECK(ab.dW == 0.0);
  CHECK(ab.dZ == 0.0);
  CHECK(ab.dt == doctest::Approx(0.5));

  const NoiseIncrement c{0.7, 0.1, 0.25};
  const NoiseIncrement cb = aggregate(c, b);
  CHECK(cb.dW == doctest::Approx(0.7));
  CHECK(cb.dZ == doctest::Approx(0.1 + 0.25 * 0.7));
}

TEST_CASE("aggregate reproduces the joint law at the doubled step") {
  const double h = 0.02;
  const int n = 100000;
  NormalStream stream(11, 3);
  double szz = 0, szw = 0;
  for (int i = 0; i < n; ++i) {
    const NoiseIncrement first = sample_increment(stream, h);
    const NoiseIncrement second = sample_increment(stream, h);
    const NoiseIncrement both = aggregate(first, second);
    szz += both.dZ * both.dZ;
    szw += both.dZ * both.dW;
  }
  const double hh = 2.0 * h;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double var_z = hh * hh * hh / 3.0;
  CHECK(std::abs(szz / n - var_z) <= 5.0 * std::sqrt(2.0) * var_z / root_n);
  const double var_zw = var_z * hh + std::pow(hh * hh / 2.0, 2);
  CHECK(std::abs(szw / n - hh * hh / 2.0) <= 5.0 * std::sqrt(var_zw) / root_n);
}

TEST_CASE("tables are reproducible and rows match brownian_row") {
  const BrownianTable t1 = build_table(99, 0.125, 16, 4);
  const BrownianTable t2 = build_table(99, 0.125, 16, 4);
  REQUIRE(t1.increments.size() == t2.increments.size());
  for (std::size_t i = 0; i < t1.increments.size(); ++i) {
    CHECK(t1.increments[i].dW == t2.increments[i].dW);
    CHECK(t1.increments[i].dZ == t2.increments[i].dZ);
  }
  const auto row2 = brownian_row(99, 2, 0.125, 16);
  const auto table_row = t1.row(2);
  for (std::size_t i = 0; i < row2.size(); ++i) {
    CHECK(row2[i].dW == table_row[i].dW);
    CHECK(row2[i].dZ == table_row[i].dZ);
  }
  // Distinct paths see distinct sub-streams.
  CHECK(t1.row(0)[0].dW != t1.row(1)[0].dW);
}

TEST_CASE("coarsen identities") {
  const BrownianTable t = build_table(5, 0.0625, 32, 3);
  const BrownianTable same = coarsen(t, 1);
  CHECK(same.increments[7].dW == t.increments[7].dW);

  const BrownianTable twice = coarsen(coarsen(t, 2), 2);
  const BrownianTable once = coarsen(t, 4);
  REQUIRE(twice.increments.size() == once.increments.size());
  for (std::size_t i = 0; i < once.increments.size(); ++i) {
    CHECK(twice.increments[i].dW == once.increments[i].dW);
    CHECK(twice.increments[i].dZ == doctest::Approx(once.increments[i].dZ).epsilon(1e-15));
    CHECK(twice.increments[i].dt == doctest::Approx(once.increments[i].dt));
  }

  // Telescoping: the coarse total dW equals the fine total exactly.
  double fine_total = 0, coarse_total = 0;
  for (int64_t s = 0; s < t.n_steps; ++s) fine_total += t.row(1)[static_cast<std::size_t>(s)].dW;
  const BrownianTable c8 = coarsen(t, 8);
  for (int64_t s = 0; s < c8.n_steps; ++s)
    coarse_total += c8.row(1)[static_cast<std::size_t>(s)].dW;
  CHECK(fine_total == doctest::Approx(coarse_total).epsilon(1e-15));

  CHECK_THROWS_AS(coarsen(t, 3), IndivisibleSteps);
  CHECK_THROWS_AS(coarsen(t, 64), IndivisibleSteps);
}

TEST_CASE("normalized increments pass a Kolmogorov-Smirnov check") {
  const int n = 10000;
  const double dt = 0.3;
  NormalStream stream(123, 1);
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = sample_increment(stream, dt).dW / std::sqrt(dt);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 0.5 * std::erfc(-xs[static_cast<std::size_t>(i)] / std::numbers::sqrt2);
    d = std::max(d, std::abs(cdf - (i + 1.0) / n));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  CHECK(d <= 1.628 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST_CASE("inverse_normal_cdf round trips the normal CDF") {
  for (double u : {1e-9, 1e-4, 0.02425, 0.3, 0.5, 0.77, 0.97575, 1.0 - 1e-6}) {
    const double x = inverse_normal_cdf(u);
    const double back = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    CHECK(back == doctest::Approx(u).epsilon(1e-10));
  }
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(inverse_normal_cdf(0.1) == doctest::Approx(-inverse_normal_cdf(0.9)).epsilon(1e-12));
}

TEST_CASE("table dump/load round trip is bitwise") {
  const BrownianTable t = build_table(424242, 0.03125, 8, 3);
  std::stringstream buffer;
  dump_table(t, buffer);
  const BrownianTable back = load_table(buffer);
  CHECK(back.seed == t.seed);
  CHECK(back.dt_fine == t.dt_fine);
  CHECK(back.n_steps == t.n_steps);
  CHECK(back.n_paths == t.n_paths);
  REQUIRE(back.increments.size() == t.increments.size());
  for (std::size_t i = 0; i < t.increments.size(); ++i) {
    CHECK(back.increments[i].dW == t.increments[i].dW);
    CHECK(back.increments[i].dZ == t.increments[i].dZ);
    CHECK(back.increments[i].dt == t.increments[i].dt);
  }

  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(load_table(bad), Error);
}
