#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/numerics/tridiag.hpp"

namespace cavityband::numerics {

/// Condition estimate of the normal matrix above which a fit is refused.
inline constexpr double kPolyfitConditionLimit = 1e14;

/// Evaluate sum_j coeffs[j] x^j (Horner).
inline double polyval(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * x + coeffs[j];
  return acc;
}

/// Least-squares polynomial fit; returns monomial coefficients in ascending
/// powers. The abscissae are mapped to [-1, 1] and the scaled Vandermonde
/// system is solved by Householder QR, so the normal equations are never
/// formed.
inline std::vector<double> polyfit_least_squares(std::span<const double> x,
                                                 std::span<const double> y, int degree) {
  if (degree < 0) throw Error(Errc::InvalidArgument, "negative polynomial degree");
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "x and y differ in length");
  const std::size_t m = x.size();
  const std::size_t p = static_cast<std::size_t>(degree) + 1;
  if (m < p)
    throw Error(Errc::UnderdeterminedFit,
                std::to_string(m) + " points for degree " + std::to_string(degree));
  for (std::size_t i = 0; i < m; ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw Error(Errc::InvalidArgument, "non-finite sample");

  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double center = 0.5 * (*lo + *hi);
  double half = 0.5 * (*hi - *lo);
  if (half == 0.0) {
    if (degree > 0) throw Error(Errc::IllConditioned, "all abscissae coincide");
    half = 1.0;
  }

  RealMatrix a(m, p);
  std::vector<double> b(y.begin(), y.end());
  for (std::size_t i = 0; i < m; ++i) {
    const double u = (x[i] - center) / half;
    double pw = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      a(i, j) = pw;
      pw *= u;
    }
  }

  // Householder QR, applying reflectors to b as we go.
  for (std::size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm = std::hypot(norm, a(i, j));
    if (norm == 0.0) continue;
    const double alpha = a(j, j) > 0.0 ? -norm : norm;
    std::vector<double> v(m - j);
    for (std::size_t i = j; i < m; ++i) v[i - j] = a(i, j);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 == 0.0) continue;
    for (std::size_t c = j; c < p; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < m; ++i) dot += v[i - j] * a(i, c);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < m; ++i) a(i, c) -= f * v[i - j];
    }
    double dot = 0.0;
    for (std::size_t i = j; i < m; ++i) dot += v[i - j] * b[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = j; i < m; ++i) b[i] -= f * v[i - j];
  }

  double rmax = 0.0;
  double rmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p; ++j) {
    rmax = std::max(rmax, std::abs(a(j, j)));
    rmin = std::min(rmin, std::abs(a(j, j)));
  }
  if (rmin == 0.0 || (rmax / rmin) * (rmax / rmin) > kPolyfitConditionLimit)
    throw Error(Errc::IllConditioned, "normal-matrix condition estimate exceeds limit");

  std::vector<double> scaled(p);
  for (std::size_t j = p; j-- > 0;) {
    double s = b[j];
    for (std::size_t c = j + 1; c < p; ++c) s -= a(j, c) * scaled[c];
    scaled[j] = s / a(j, j);
  }

  // sum_j s_j ((x - c)/h)^j expanded into powers of x.
  std::vector<double> coeffs(p, 0.0);
  std::vector<double> basis(p, 0.0);  // coefficients of ((x - c)/h)^j
  basis[0] = 1.0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t t = 0; t <= j; ++t) coeffs[t] += scaled[j] * basis[t];
    if (j + 1 < p) {
      std::vector<double> next(p, 0.0);
      for (std::size_t t = 0; t <= j; ++t) {
        next[t + 1] += basis[t] / half;
        next[t] -= basis[t] * center / half;
      }
      basis.swap(next);
    }
  }
  return coeffs;
}

}  // namespace cavityband::numerics
