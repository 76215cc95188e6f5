#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "cavityband/error.hpp"
#include "cavityband/numerics/fft.hpp"

namespace cavityband::wavepacket {

/// Uniform periodic grid x_j = x_min + j dx, j = 0..N-1, dx = (x_max - x_min) / N.
///
/// Momentum bins follow FFT ordering: k_m = m dk for m < N/2 and (m - N) dk
/// otherwise, dk = 2 pi / (x_max - x_min).
struct SpatialGrid {
  std::size_t n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  double dx = 0.0;
  double dk = 0.0;

  double length() const { return x_max - x_min; }
  double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
  double k(std::size_t m) const {
    const auto half = n_points / 2;
    return m < half ? static_cast<double>(m) * dk
                    : (static_cast<double>(m) - static_cast<double>(n_points)) * dk;
  }
  double k_nyquist() const { return std::numbers::pi / dx; }

  /// FFT bin whose momentum is nearest to kk (wrapping outside the band).
  std::size_t bin_of(double kk) const {
    const long long n = static_cast<long long>(n_points);
    long long m = std::llround(kk / dk) % n;
    if (m < 0) m += n;
    return static_cast<std::size_t>(m);
  }
};

inline SpatialGrid make_grid(std::size_t n_points, double x_min, double x_max) {
  if (!numerics::is_power_of_two(n_points))
    throw Error(Errc::BadExtent, "grid size " + std::to_string(n_points) + " is not a power of two");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
    throw Error(Errc::BadExtent, "grid requires finite x_max > x_min");
  SpatialGrid g;
  g.n_points = n_points;
  g.x_min = x_min;
  g.x_max = x_max;
  g.dx = (x_max - x_min) / static_cast<double>(n_points);
  g.dk = 2.0 * std::numbers::pi / (x_max - x_min);
  return g;
}

}  // namespace cavityband::wavepacket
