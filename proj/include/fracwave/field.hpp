#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracwave/errors.hpp"
#include "fracwave/grid.hpp"

namespace fracwave {

using Complex = std::complex<double>;

namespace detail {

template <typename T>
bool is_finite(const T& v) {
  if constexpr (std::is_same_v<T, Complex>)
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  else
    return std::isfinite(v);
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw ShapeError(std::string(what) + ": grid mismatch");
}

}  // namespace detail

/// Values of a field on the grid points, or its Fourier coefficients.
///
/// Construction does not check finiteness; the transforms do, so every
/// spectral operation sees a non-finite value as a BlowUpError.
template <typename T>
class GridFunction {
 public:
  using value_type = T;

  explicit GridFunction(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}

  GridFunction(Grid grid, std::vector<T> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw ShapeError("value count " + std::to_string(values_.size()) +
                       " does not match grid size " + std::to_string(grid_.size()));
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }

  T operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }

  /// Index of the first non-finite entry, or size() if there is none.
  std::size_t first_non_finite() const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!detail::is_finite(values_[i])) return i;
    return values_.size();
  }

  void check_finite(const std::string& context) const {
    const std::size_t bad = first_non_finite();
    if (bad != values_.size()) throw BlowUpError(bad, context);
  }

  GridFunction& operator+=(const GridFunction& o) {
    detail::require_same_grid(grid_, o.grid_, "field addition");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    detail::require_same_grid(grid_, o.grid_, "field subtraction");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double a) {
    for (auto& v : values_) v *= a;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }
  friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

  friend bool operator==(const GridFunction& a, const GridFunction& b) {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

 private:
  Grid grid_;
  std::vector<T> values_;
};

/// Samples u(x_j) on the grid.
using RealField = GridFunction<double>;

/// Coefficients in the convention u(x_j) = sum_k c_k exp(i k x_j), stored
/// in the ascending signed layout described on Grid.
using SpectralField = GridFunction<Complex>;

inline RealField sample(const Grid& grid, const std::function<double(double)>& f) {
  RealField u(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) u[j] = f(grid.x(j));
  return u;
}

inline RealField constant_field(const Grid& grid, double c) {
  return RealField(grid, std::vector<double>(grid.size(), c));
}

/// Pointwise product.
inline RealField multiply(const RealField& a, const RealField& b) {
  detail::require_same_grid(a.grid(), b.grid(), "pointwise product");
  RealField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline double max_abs(const RealField& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_difference(const RealField& a, const RealField& b) {
  detail::require_same_grid(a.grid(), b.grid(), "field difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fracwave
