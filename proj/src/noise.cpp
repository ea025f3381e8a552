#include "liesde/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <ostream>

namespace liesde {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

inline std::array<uint32_t, 4> philox_round(const std::array<uint32_t, 4>& c,
                                            const std::array<uint32_t, 2>& k) {
  uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kPhiloxM0, c[0], hi0, lo0);
  mulhilo(kPhiloxM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double uniform53(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
  // 53 bits plus a half-ulp offset keeps the result strictly inside (0,1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

std::array<uint32_t, 4> Philox4x32::block(const std::array<uint32_t, 4>& counter,
                                          const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> c = counter;
  std::array<uint32_t, 2> k = key;
  for (int round = 0; round < 9; ++round) {
    c = philox_round(c, k);
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return philox_round(c, k);
}

double inverse_normal_cdf(double u) {
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  const double step = err / density;
  return x - step / (1.0 + 0.5 * x * step);
}

double NormalStream::at(uint64_t idx) const {
  const uint64_t block_idx = idx >> 1;
  const std::array<uint32_t, 4> counter = {
      static_cast<uint32_t>(block_idx), static_cast<uint32_t>(block_idx >> 32),
      static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_),
                                       static_cast<uint32_t>(seed_ >> 32)};
  const std::array<uint32_t, 4> out = Philox4x32::block(counter, key);
  const int lane = static_cast<int>(idx & 1);
  return inverse_normal_cdf(uniform53(out[2 * lane], out[2 * lane + 1]));
}

double NormalStream::next() { return at(next_idx_++); }

NoiseIncrement increment_from_normals(double u1, double u2, double dt) {
  NoiseIncrement inc;
  inc.dt = dt;
  inc.dW = u1 * std::sqrt(dt);
  inc.dZ = 0.5 * dt * (inc.dW + u2 * std::sqrt(dt / 3.0));
  return inc;
}

NoiseIncrement sample_increment(NormalStream& stream, double dt) {
  if (!(dt > 0.0)) throw ZeroStepSize("sample_increment: dt must be positive");
  const double u1 = stream.next();
  const double u2 = stream.next();
  return increment_from_normals(u1, u2, dt);
}

NoiseIncrement aggregate(const NoiseIncrement& first, const NoiseIncrement& second) {
  NoiseIncrement out;
  out.dW = first.dW + second.dW;
  out.dZ = first.dZ + second.dZ + second.dt * first.dW;
  out.dt = first.dt + second.dt;
  return out;
}

std::vector<NoiseIncrement> brownian_row(uint64_t seed, uint64_t path, double dt_fine,
                                         int64_t n_steps) {
  NormalStream stream(seed, path);
  std::vector<NoiseIncrement> row;
  row.reserve(static_cast<std::size_t>(n_steps));
  for (int64_t s = 0; s < n_steps; ++s) row.push_back(sample_increment(stream, dt_fine));
  return row;
}

BrownianTable build_table(uint64_t seed, double dt_fine, int64_t n_steps, int64_t n_paths) {
  BrownianTable t;
  t.seed = seed;
  t.dt_fine = dt_fine;
  t.n_steps = n_steps;
  t.n_paths = n_paths;
  t.increments.reserve(static_cast<std::size_t>(n_steps * n_paths));
  for (int64_t p = 0; p < n_paths; ++p) {
    auto row = brownian_row(seed, static_cast<uint64_t>(p), dt_fine, n_steps);
    t.increments.insert(t.increments.end(), row.begin(), row.end());
  }
  return t;
}

std::vector<NoiseIncrement> coarsen_row(std::span<const NoiseIncrement> row, int64_t factor) {
  if (factor < 1 || (factor & (factor - 1)) != 0) {
    throw IndivisibleSteps("coarsen: factor must be a positive power of 2");
  }
  const int64_t n = static_cast<int64_t>(row.size());
  if (n % factor != 0) {
    throw IndivisibleSteps("coarsen: " + std::to_string(n) + " steps not divisible by " +
                           std::to_string(factor));
  }
  // Repeated pairwise folding, so that coarsening by 4 is bit-identical to
  // coarsening twice by 2.
  std::vector<NoiseIncrement> out(row.begin(), row.end());
  for (int64_t f = factor; f > 1; f /= 2) {
    std::vector<NoiseIncrement> folded;
    folded.reserve(out.size() / 2);
    for (std::size_t i = 0; i + 1 < out.size(); i += 2) {
      folded.push_back(aggregate(out[i], out[i + 1]));
    }
    out = std::move(folded);
  }
  return out;
}

BrownianTable coarsen(const BrownianTable& table, int64_t factor) {
  if (factor == 1) return table;
  BrownianTable t;
  t.seed = table.seed;
  t.dt_fine = table.dt_fine * static_cast<double>(factor);
  t.n_steps = table.n_steps / factor;
  t.n_paths = table.n_paths;
  t.increments.reserve(static_cast<std::size_t>(t.n_steps * t.n_paths));
  for (int64_t p = 0; p < table.n_paths; ++p) {
    auto row = coarsen_row(table.row(p), factor);
    t.increments.insert(t.increments.end(), row.begin(), row.end());
  }
  return t;
}

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr uint32_t kTableVersion = 1;

}  // namespace

void dump_table(const BrownianTable& table, std::ostream& out) {
  out.write("LSDE", 4);
  put_u32(out, kTableVersion);
  put_u64(out, table.seed);
  put_f64(out, table.dt_fine);
  put_u64(out, static_cast<uint64_t>(table.n_steps));
  put_u64(out, static_cast<uint64_t>(table.n_paths));
  for (const NoiseIncrement& inc : table.increments) {
    put_f64(out, inc.dW);
    put_f64(out, inc.dZ);
  }
}

void dump_table(const BrownianTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dump_table: cannot open " + path);
  dump_table(table, out);
}

BrownianTable load_table(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LSDE", 4) != 0) throw Error("load_table: bad magic");
  const uint32_t version = get_u32(in);
  if (version != kTableVersion) {
    throw Error("load_table: unsupported version " + std::to_string(version));
  }
  BrownianTable t;
  t.seed = get_u64(in);
  t.dt_fine = get_f64(in);
  t.n_steps = static_cast<int64_t>(get_u64(in));
  t.n_paths = static_cast<int64_t>(get_u64(in));
  t.increments.resize(static_cast<std::size_t>(t.n_steps * t.n_paths));
  for (NoiseIncrement& inc : t.increments) {
    inc.dW = get_f64(in);
    inc.dZ = get_f64(in);
    inc.dt = t.dt_fine;
  }
  if (!in) throw Error("load_table: truncated stream");
  return t;
}

BrownianTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_table: cannot open " + path);
  return load_table(in);
}

}  // namespace liesde
