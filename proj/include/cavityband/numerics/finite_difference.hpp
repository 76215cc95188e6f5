#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cavityband/error.hpp"

namespace cavityband::numerics {

enum class Extrapolation { None, Richardson };

/// Central-difference derivative at the middle sample of an odd-length,
/// uniformly spaced stencil. Order 1 or 2; O(h^2), or O(h^4) with one
/// Richardson step (needs 5 samples).
inline double central_difference(std::span<const double> f, double h, int order,
                                 Extrapolation extrapolation = Extrapolation::None) {
  if (order != 1 && order != 2) throw Error(Errc::InvalidArgument, "order must be 1 or 2");
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "step must be positive");
  const std::size_t need = extrapolation == Extrapolation::Richardson ? 5 : 3;
  if (f.size() < need || f.size() % 2 == 0)
    throw Error(Errc::InsufficientSamples,
                "need an odd stencil of at least " + std::to_string(need) + " samples");
  const std::size_t c = f.size() / 2;
  auto stencil = [&](std::size_t s, double step) {
    if (order == 1) return (f[c + s] - f[c - s]) / (2.0 * step);
    return (f[c + s] - 2.0 * f[c] + f[c - s]) / (step * step);
  };
  const double d1 = stencil(1, h);
  if (extrapolation == Extrapolation::None) return d1;
  const double d2 = stencil(2, 2.0 * h);
  return (4.0 * d1 - d2) / 3.0;
}

/// Samples fn on the stencil around x and differentiates.
template <class Fn>
double derivative(Fn&& fn, double x, double h, int order,
                  Extrapolation extrapolation = Extrapolation::Richardson) {
  const int half = extrapolation == Extrapolation::Richardson ? 2 : 1;
  std::vector<double> samples;
  samples.reserve(2 * half + 1);
  for (int j = -half; j <= half; ++j) samples.push_back(fn(x + j * h));
  return central_difference(samples, h, order, extrapolation);
}

}  // namespace cavityband::numerics
