#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "liesde/errors.hpp"

namespace liesde {

/// Dense real n-by-n matrix, row major. The dimension is a runtime value so
/// one code path serves SO(2), SO(3) and larger test matrices. Matrices up
/// to 4x4 live entirely on the stack, which keeps the per-step temporaries
/// of the integrators allocation-free.
class SquareMatrix {
 public:
  SquareMatrix() = default;  // 0x0 placeholder, only assignable

  explicit SquareMatrix(int dim);  // zero matrix
  SquareMatrix(int dim, std::initializer_list<double> entries);
  SquareMatrix(int dim, const std::vector<double>& entries);

  SquareMatrix(const SquareMatrix& other);
  SquareMatrix(SquareMatrix&& other) noexcept;
  SquareMatrix& operator=(const SquareMatrix& other);
  SquareMatrix& operator=(SquareMatrix&& other) noexcept;
  ~SquareMatrix() = default;

  static SquareMatrix identity(int dim);
  static SquareMatrix zero(int dim) { return SquareMatrix(dim); }

  int dim() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  double& operator()(int i, int j) { return data()[i * n_ + j]; }
  double operator()(int i, int j) const { return data()[i * n_ + j]; }

  double* data() { return heap_ ? heap_.get() : inline_.data(); }
  const double* data() const { return heap_ ? heap_.get() : inline_.data(); }
  std::span<const double> entries() const { return {data(), size()}; }

  SquareMatrix transpose() const;
  double trace() const;
  double max_abs() const;
  bool all_finite() const;

  SquareMatrix& operator+=(const SquareMatrix& rhs);
  SquareMatrix& operator-=(const SquareMatrix& rhs);
  SquareMatrix& operator*=(double s);
  /// *this += s * rhs without a temporary.
  SquareMatrix& add_scaled(double s, const SquareMatrix& rhs);

 private:
  static constexpr std::size_t kInlineCap = 16;

  void allocate(int dim);

  int n_ = 0;
  std::array<double, kInlineCap> inline_{};
  std::unique_ptr<double[]> heap_;
};

SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b);
SquareMatrix operator-(const SquareMatrix& a, const SquareMatrix& b);
SquareMatrix operator-(const SquareMatrix& a);
SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b);
SquareMatrix operator*(double s, const SquareMatrix& a);
SquareMatrix operator*(const SquareMatrix& a, double s);

double frobenius_norm(const SquareMatrix& m);

/// Inverse by partially pivoted Gauss-Jordan elimination. Throws
/// SingularMatrix when a pivot falls below 1e-12 times the largest
/// initial pivot candidate.
SquareMatrix mat_inverse(const SquareMatrix& m);

/// Determinant via partially pivoted LU (used for SO(n) membership).
double determinant(const SquareMatrix& m);

/// Matrix exponential by scaling-and-squaring with a fixed-order Taylor
/// series on the scaled matrix; relative accuracy about 1e-13.
SquareMatrix mat_exp(const SquareMatrix& m);

/// [A, B] = AB - BA.
SquareMatrix commutator(const SquareMatrix& a, const SquareMatrix& b);

/// ad_Omega^k(H): k nested commutators, ad^0 = H.
SquareMatrix adjoint_power(const SquareMatrix& omega, const SquareMatrix& h, int k);

namespace detail {
void require_same_dim(const SquareMatrix& a, const SquareMatrix& b, const char* op);
}

inline constexpr double kTolExp = 1e-13;
inline constexpr double kTolInv = 1e-10;

}  // namespace liesde
