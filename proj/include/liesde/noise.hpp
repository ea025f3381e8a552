#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "liesde/errors.hpp"

namespace liesde {

/// Joint Brownian increments over one step: dW = W(t+dt) - W(t) and the
/// iterated integral dZ = int_t^{t+dt} (W_s - W_t) ds, with
/// E[dZ^2] = dt^3/3 and E[dZ dW] = dt^2/2.
struct NoiseIncrement {
  double dW = 0.0;
  double dZ = 0.0;
  double dt = 0.0;
};

/// Counter-based Philox4x32-10 block cipher; stateless, so streams are
/// splittable by (seed, stream) and reproducible across platforms.
struct Philox4x32 {
  static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& counter,
                                       const std::array<uint32_t, 2>& key);
};

/// Standard-normal draws from a (seed, stream) pair via 53-bit uniforms and
/// the inverse normal CDF. Each Philox block yields two normals.
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

  double next();
  /// Jump directly to draw index `idx` (counter semantics; no sequencing cost).
  double at(uint64_t idx) const;

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t next_idx_ = 0;
};

/// Inverse standard normal CDF (rational approximation plus one Halley
/// refinement; accurate to near machine precision for u in (0,1)).
double inverse_normal_cdf(double u);

/// The sampling recipe: dW = u1 sqrt(dt), dZ = (dt/2)(dW + u2 sqrt(dt/3)).
NoiseIncrement increment_from_normals(double u1, double u2, double dt);

/// Draw (u1, u2) from the stream and apply the recipe.
NoiseIncrement sample_increment(NormalStream& stream, double dt);

/// Law-preserving concatenation of two contiguous increments:
/// (dW1+dW2, dZ1+dZ2+h2*dW1, h1+h2).
NoiseIncrement aggregate(const NoiseIncrement& first, const NoiseIncrement& second);

/// Per-path, per-step increments at a fixed fine resolution. Path rows are
/// generated from disjoint counter sub-streams, so any row can be rebuilt
/// in isolation with brownian_row().
struct BrownianTable {
  uint64_t seed = 0;
  double dt_fine = 0.0;
  int64_t n_steps = 0;
  int64_t n_paths = 0;
  std::vector<NoiseIncrement> increments;  // row-major [path][step]

  std::span<const NoiseIncrement> row(int64_t path) const {
    return {increments.data() + path * n_steps, static_cast<std::size_t>(n_steps)};
  }
};

/// The row that build_table materializes for `path`, computed standalone.
std::vector<NoiseIncrement> brownian_row(uint64_t seed, uint64_t path, double dt_fine,
                                         int64_t n_steps);

BrownianTable build_table(uint64_t seed, double dt_fine, int64_t n_steps, int64_t n_paths);

/// Fold consecutive increments by `factor` (a divisor of the row length).
std::vector<NoiseIncrement> coarsen_row(std::span<const NoiseIncrement> row, int64_t factor);
BrownianTable coarsen(const BrownianTable& table, int64_t factor);

/// Binary dump/load: magic "LSDE", version u32, seed u64, dt_fine f64,
/// n_steps u64, n_paths u64, then per-increment (dW, dZ) little-endian f64.
void dump_table(const BrownianTable& table, std::ostream& out);
void dump_table(const BrownianTable& table, const std::string& path);
BrownianTable load_table(std::istream& in);
BrownianTable load_table(const std::string& path);

}  // namespace liesde
