#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cavityband/error.hpp"

namespace cavityband::numerics {

/// Dense column-major real matrix. Only what the eigensolver and the least
/// squares code need.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static RealMatrix identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Real symmetric tridiagonal matrix: diag has n entries, offdiag n-1.
struct SymTridiag {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t size() const noexcept { return diag.size(); }

  void validate() const {
    if (diag.empty()) throw Error(Errc::InvalidArgument, "tridiagonal matrix must have n >= 1");
    if (offdiag.size() + 1 != diag.size())
      throw Error(Errc::InvalidArgument, "offdiag length must be n - 1");
    for (double d : diag)
      if (!std::isfinite(d)) throw Error(Errc::InvalidArgument, "non-finite diagonal entry");
    for (double e : offdiag)
      if (!std::isfinite(e)) throw Error(Errc::InvalidArgument, "non-finite off-diagonal entry");
  }

  /// Infinity norm (max absolute row sum).
  double norm_inf() const {
    const std::size_t n = size();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = std::abs(diag[i]);
      if (i > 0) s += std::abs(offdiag[i - 1]);
      if (i + 1 < n) s += std::abs(offdiag[i]);
      best = std::max(best, s);
    }
    return best;
  }

  /// y = A x
  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += offdiag[i - 1] * x[i - 1];
      if (i + 1 < n) s += offdiag[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }
};

/// values ascending; column j of vectors pairs with values[j].
struct EigenDecomposition {
  std::vector<double> values;
  RealMatrix vectors;
};

namespace detail {

inline void fix_sign(std::span<double> v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  // First component within round-off of the peak decides, so symmetric pairs
  // (|v_i| == |v_j|) resolve the same way on every platform.
  for (double x : v) {
    if (std::abs(x) >= peak * (1.0 - 1e-10)) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

// Implicit QL with Wilkinson-type shifts (tql1/tql2). On return d holds the
// unsorted eigenvalues; when z is non-null its columns hold the eigenvectors.
inline void implicit_ql(std::vector<double>& d, std::vector<double>& e, RealMatrix* z) {
  const std::size_t n = d.size();

  constexpr int kMaxIterations = 60;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t mm;
    do {
      for (mm = l; mm + 1 < n; ++mm) {
        const double dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
        if (std::abs(e[mm]) <= eps * dd) break;
      }
      if (mm != l) {
        if (iter++ == kMaxIterations)
          throw Error(Errc::NonConvergence,
                      "eigenvalue " + std::to_string(l) + " did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[mm] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        std::size_t i = mm;
        bool underflow = false;
        while (i-- > l) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[mm] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z != nullptr) {
            auto zi = z->column(i);
            auto zi1 = z->column(i + 1);
            for (std::size_t k = 0; k < n; ++k) {
              f = zi1[k];
              zi1[k] = s * zi[k] + c * f;
              zi[k] = c * zi[k] - s * f;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[mm] = 0.0;
      }
    } while (mm != l);
  }
}

}  // namespace detail

/// Full eigen-decomposition of a symmetric tridiagonal matrix. Each
/// eigenvector is normalised with its largest-magnitude component positive.
inline EigenDecomposition eig_sym_tridiag(const SymTridiag& m) {
  m.validate();
  const std::size_t n = m.size();
  std::vector<double> d = m.diag;
  std::vector<double> e(n, 0.0);
  std::copy(m.offdiag.begin(), m.offdiag.end(), e.begin());
  RealMatrix z = RealMatrix::identity(n);
  detail::implicit_ql(d, e, &z);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = RealMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = d[order[j]];
    auto src = z.column(order[j]);
    auto dst = out.vectors.column(j);
    std::copy(src.begin(), src.end(), dst.begin());
    detail::fix_sign(dst);
  }
  return out;
}

/// Eigenvalues only, ascending. O(n^2) since no rotations are accumulated.
inline std::vector<double> eigvals_sym_tridiag(const SymTridiag& m) {
  m.validate();
  std::vector<double> d = m.diag;
  std::vector<double> e(m.size(), 0.0);
  std::copy(m.offdiag.begin(), m.offdiag.end(), e.begin());
  detail::implicit_ql(d, e, nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace cavityband::numerics
