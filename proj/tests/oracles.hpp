#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracles {

/// Number of eigenvalues of the symmetric tridiagonal matrix below x
/// (Sturm sequence count on the LDL^T pivots).
inline int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double pivot = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    pivot = d[i] - x - (i == 0 ? 0.0 : off / pivot);
    if (pivot == 0.0) pivot = -1e-300;
    if (pivot < 0.0) ++count;
  }
  return count;
}

/// All eigenvalues by bisection on the Sturm count, ascending.
inline std::vector<double> bisection_eigenvalues(const std::vector<double>& d,
                                                 const std::vector<double>& e) {
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < d.size()) r += std::abs(e[i]);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  lo -= 1.0;
  hi += 1.0;
  std::vector<double> out;
  for (int j = 0; j < static_cast<int>(d.size()); ++j) {
    double a = lo;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      if (sturm_count(d, e, mid) > j)
        b = mid;
      else
        a = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

/// Naive O(N^2) DFT with the forward convention exp(-2 pi i j m / N).
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * m) % n) / n;
      acc += x[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[m] = acc;
  }
  return out;
}

/// Least squares through the normal equations with Gaussian elimination.
inline std::vector<double> normal_equations_fit(const std::vector<double>& x,
                                                const std::vector<double>& y, int degree) {
  const int p = degree + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> pw(2 * p, 1.0);
    for (int t = 1; t < 2 * p; ++t) pw[t] = pw[t - 1] * x[i];
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) a[r][c] += pw[r + c];
      a[r][p] += pw[r] * y[i];
    }
  }
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = c + 1; r < p; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int t = c; t <= p; ++t) a[r][t] -= f * a[c][t];
    }
  }
  std::vector<double> coef(p);
  for (int r = p - 1; r >= 0; --r) {
    double s = a[r][p];
    for (int c = r + 1; c < p; ++c) s -= a[r][c] * coef[c];
    coef[r] = s / a[r][r];
  }
  return coef;
}

}  // namespace oracles
