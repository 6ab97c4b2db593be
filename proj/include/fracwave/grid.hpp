#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <vector>

#include "fracwave/errors.hpp"

namespace fracwave {

/// Uniform periodic grid on [0, L) with an even number of points.
///
/// Coefficient storage everywhere in the library uses the ascending signed
/// layout: position p holds the mode with index j = p - N/2, so the first
/// entry is the Nyquist mode j = -N/2 and position N/2 is the mean.
/// Copies are cheap; the wavenumber table is shared.
class Grid {
 public:
  static constexpr std::size_t kMinPoints = 8;

  Grid(double length, std::size_t n_points) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw ParameterError("grid length must be positive and finite");
    if (n_points < kMinPoints || n_points % 2 != 0)
      throw ParameterError("grid point count must be even and >= 8");
    auto data = std::make_shared<Data>();
    data->length = length;
    data->n = n_points;
    data->wavenumbers.resize(n_points);
    const double base = 2.0 * std::numbers::pi / length;
    for (std::size_t p = 0; p < n_points; ++p)
      data->wavenumbers[p] = base * static_cast<double>(index_of(p, n_points));
    data_ = std::move(data);
  }

  double length() const { return data_->length; }
  std::size_t size() const { return data_->n; }
  double spacing() const { return data_->length / static_cast<double>(data_->n); }

  double x(std::size_t j) const {
    return static_cast<double>(j) * data_->length / static_cast<double>(data_->n);
  }

  /// Signed mode index at storage position p.
  long mode_index(std::size_t p) const { return index_of(p, data_->n); }
  /// Storage position of signed mode index j, j in [-N/2, N/2).
  std::size_t position(long j) const {
    return static_cast<std::size_t>(j + static_cast<long>(data_->n / 2));
  }

  /// Physical wavenumbers 2*pi*j/L in storage order.
  const std::vector<double>& wavenumbers() const { return data_->wavenumbers; }
  double wavenumber(std::size_t p) const { return data_->wavenumbers[p]; }

  /// Largest |j| retained by the 2/3 truncation rule.
  long dealias_cutoff() const { return static_cast<long>(data_->n / 3); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.data_ == b.data_ ||
           (a.data_->n == b.data_->n && a.data_->length == b.data_->length);
  }

 private:
  struct Data {
    double length = 0.0;
    std::size_t n = 0;
    std::vector<double> wavenumbers;
  };

  static long index_of(std::size_t p, std::size_t n) {
    return static_cast<long>(p) - static_cast<long>(n / 2);
  }

  std::shared_ptr<const Data> data_;
};

}  // namespace fracwave
