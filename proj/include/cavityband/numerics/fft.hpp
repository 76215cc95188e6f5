#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cavityband/error.hpp"

namespace cavityband::numerics {

using Complex = std::complex<double>;
using ComplexArray = std::vector<Complex>;

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && std::has_single_bit(n); }

/// Radix-2 FFT plan for one length.
///
/// Normalisation convention used everywhere in the project:
///   forward  X_m = sum_j x_j exp(-2 pi i j m / N)         (unnormalised)
///   inverse  x_j = (1/N) sum_m X_m exp(+2 pi i j m / N)
/// so inverse(forward(x)) == x and sum|x|^2 == (1/N) sum|X|^2.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (!is_power_of_two(n))
      throw Error(Errc::LengthNotPowerOfTwo, "FFT length " + std::to_string(n));
    const unsigned bits = static_cast<unsigned>(std::countr_zero(n));
    bitrev_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (unsigned b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
    // Stage tables stored back to back: stage with half-length h starts at h-1.
    twiddle_.resize(n > 1 ? n - 1 : 0);
    for (std::size_t h = 1; h < n; h <<= 1) {
      for (std::size_t j = 0; j < h; ++j) {
        const double angle = -std::numbers::pi * static_cast<double>(j) / static_cast<double>(h);
        twiddle_[h - 1 + j] = {std::cos(angle), std::sin(angle)};
      }
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<Complex> x) const { transform(x, false); }

  void inverse(std::span<Complex> x) const {
    transform(x, true);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : x) v *= scale;
  }

  /// Inverse transform without the 1/N factor, for callers that fold it into
  /// a later multiplication.
  void inverse_unscaled(std::span<Complex> x) const { transform(x, true); }

 private:
  void transform(std::span<Complex> x, bool conjugate) const {
    if (x.size() != n_)
      throw Error(Errc::InvalidArgument, "FFT plan length mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t r = bitrev_[i];
      if (r > i) std::swap(x[i], x[r]);
    }
    const double sign = conjugate ? -1.0 : 1.0;
    double* data = reinterpret_cast<double*>(x.data());
    for (std::size_t h = 1; h < n_; h <<= 1) {
      const Complex* w = twiddle_.data() + (h - 1);
      for (std::size_t start = 0; start < n_; start += 2 * h) {
        for (std::size_t j = 0; j < h; ++j) {
          const double wr = w[j].real();
          const double wi = sign * w[j].imag();
          double* a = data + 2 * (start + j);
          double* b = data + 2 * (start + j + h);
          const double tr = wr * b[0] - wi * b[1];
          const double ti = wr * b[1] + wi * b[0];
          b[0] = a[0] - tr;
          b[1] = a[1] - ti;
          a[0] += tr;
          a[1] += ti;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddle_;
};

inline ComplexArray fft_forward(ComplexArray x) {
  FftPlan(x.size()).forward(x);
  return x;
}

inline ComplexArray fft_inverse(ComplexArray x) {
  FftPlan(x.size()).inverse(x);
  return x;
}

}  // namespace cavityband::numerics
