#include "liesde/matops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace liesde {

void detail::require_same_dim(const SquareMatrix& a, const SquareMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(op) + ": dimensions " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
  }
}

void SquareMatrix::allocate(int dim) {
  if (dim < 1) throw DimensionMismatch("SquareMatrix: dim must be >= 1");
  n_ = dim;
  if (size() > kInlineCap) heap_ = std::make_unique<double[]>(size());
  std::fill(data(), data() + size(), 0.0);
}

SquareMatrix::SquareMatrix(int dim) { allocate(dim); }

SquareMatrix::SquareMatrix(int dim, std::initializer_list<double> entries) {
  allocate(dim);
  if (entries.size() != size()) {
    throw DimensionMismatch("SquareMatrix: got " + std::to_string(entries.size()) +
                            " entries, expected " + std::to_string(size()));
  }
  std::copy(entries.begin(), entries.end(), data());
  if (!all_finite()) throw DomainError("SquareMatrix: non-finite entry");
}

SquareMatrix::SquareMatrix(int dim, const std::vector<double>& entries) {
  allocate(dim);
  if (entries.size() != size()) {
    throw DimensionMismatch("SquareMatrix: got " + std::to_string(entries.size()) +
                            " entries, expected " + std::to_string(size()));
  }
  std::copy(entries.begin(), entries.end(), data());
  if (!all_finite()) throw DomainError("SquareMatrix: non-finite entry");
}

SquareMatrix::SquareMatrix(const SquareMatrix& other) : n_(other.n_), inline_(other.inline_) {
  if (other.heap_) {
    heap_ = std::make_unique<double[]>(size());
    std::copy(other.heap_.get(), other.heap_.get() + size(), heap_.get());
  }
}

SquareMatrix::SquareMatrix(SquareMatrix&& other) noexcept
    : n_(other.n_), inline_(other.inline_), heap_(std::move(other.heap_)) {
  other.n_ = 0;
}

SquareMatrix& SquareMatrix::operator=(const SquareMatrix& other) {
  if (this != &other) {
    SquareMatrix tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

SquareMatrix& SquareMatrix::operator=(SquareMatrix&& other) noexcept {
  n_ = other.n_;
  inline_ = other.inline_;
  heap_ = std::move(other.heap_);
  other.n_ = 0;
  return *this;
}

SquareMatrix SquareMatrix::identity(int dim) {
  SquareMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix SquareMatrix::transpose() const {
  SquareMatrix t(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double SquareMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double SquareMatrix::max_abs() const {
  double m = 0.0;
  const double* p = data();
  for (std::size_t k = 0; k < size(); ++k) m = std::max(m, std::abs(p[k]));
  return m;
}

bool SquareMatrix::all_finite() const {
  const double* p = data();
  for (std::size_t k = 0; k < size(); ++k)
    if (!std::isfinite(p[k])) return false;
  return true;
}

SquareMatrix& SquareMatrix::operator+=(const SquareMatrix& rhs) {
  detail::require_same_dim(*this, rhs, "operator+=");
  double* a = data();
  const double* b = rhs.data();
  for (std::size_t k = 0; k < size(); ++k) a[k] += b[k];
  return *this;
}

SquareMatrix& SquareMatrix::operator-=(const SquareMatrix& rhs) {
  detail::require_same_dim(*this, rhs, "operator-=");
  double* a = data();
  const double* b = rhs.data();
  for (std::size_t k = 0; k < size(); ++k) a[k] -= b[k];
  return *this;
}

SquareMatrix& SquareMatrix::operator*=(double s) {
  double* a = data();
  for (std::size_t k = 0; k < size(); ++k) a[k] *= s;
  return *this;
}

SquareMatrix& SquareMatrix::add_scaled(double s, const SquareMatrix& rhs) {
  detail::require_same_dim(*this, rhs, "add_scaled");
  double* a = data();
  const double* b = rhs.data();
  for (std::size_t k = 0; k < size(); ++k) a[k] += s * b[k];
  return *this;
}

SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
  SquareMatrix r(a);
  r += b;
  return r;
}

SquareMatrix operator-(const SquareMatrix& a, const SquareMatrix& b) {
  SquareMatrix r(a);
  r -= b;
  return r;
}

SquareMatrix operator-(const SquareMatrix& a) {
  SquareMatrix r(a);
  r *= -1.0;
  return r;
}

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
  detail::require_same_dim(a, b, "operator*");
  const int n = a.dim();
  SquareMatrix r(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
    }
  }
  return r;
}

SquareMatrix operator*(double s, const SquareMatrix& a) {
  SquareMatrix r(a);
  r *= s;
  return r;
}

SquareMatrix operator*(const SquareMatrix& a, double s) { return s * a; }

double frobenius_norm(const SquareMatrix& m) {
  double s = 0.0;
  const double* p = m.data();
  for (std::size_t k = 0; k < m.size(); ++k) s += p[k] * p[k];
  return std::sqrt(s);
}

namespace {

// Partially pivoted elimination on a working copy; shared by inverse and
// determinant. Returns false (with *det = 0) when a pivot degenerates.
struct LuResult {
  SquareMatrix inv;
  double det = 0.0;
  bool ok = false;
};

LuResult eliminate(const SquareMatrix& m, bool want_inverse) {
  const int n = m.dim();
  LuResult out;
  SquareMatrix a(m);
  SquareMatrix inv = SquareMatrix::identity(n);

  const double pivot_floor = 1e-12 * m.max_abs();
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) <= pivot_floor) {
      out.det = 0.0;
      return out;
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
      det = -det;
    }
    const double p = a(col, col);
    det *= p;
    const double pinv = 1.0 / p;
    for (int j = 0; j < n; ++j) {
      a(col, j) *= pinv;
      inv(col, j) *= pinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  out.det = det;
  out.ok = true;
  if (want_inverse) out.inv = std::move(inv);
  return out;
}

}  // namespace

SquareMatrix mat_inverse(const SquareMatrix& m) {
  LuResult r = eliminate(m, true);
  if (!r.ok) throw SingularMatrix("mat_inverse: pivot below threshold");
  return std::move(r.inv);
}

double determinant(const SquareMatrix& m) {
  LuResult r = eliminate(m, false);
  return r.ok ? r.det : 0.0;
}

SquareMatrix mat_exp(const SquareMatrix& m) {
  const int n = m.dim();
  // Scale until the Frobenius norm is at most 1/4, run a fixed-order
  // Taylor series, square back up.
  const double norm = frobenius_norm(m);
  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  }
  SquareMatrix scaled(m);
  scaled *= std::ldexp(1.0, -squarings);

  constexpr int kOrder = 16;
  SquareMatrix result = SquareMatrix::identity(n);
  SquareMatrix term = SquareMatrix::identity(n);
  for (int k = 1; k <= kOrder; ++k) {
    term = term * scaled;
    term *= 1.0 / k;
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

SquareMatrix commutator(const SquareMatrix& a, const SquareMatrix& b) {
  detail::require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

SquareMatrix adjoint_power(const SquareMatrix& omega, const SquareMatrix& h, int k) {
  detail::require_same_dim(omega, h, "adjoint_power");
  SquareMatrix r(h);
  for (int i = 0; i < k; ++i) r = commutator(omega, r);
  return r;
}

}  // namespace liesde
