#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/numerics/polyfit.hpp"
#include "cavityband/wavepacket/propagator.hpp"

namespace cavityband::wavepacket {

enum class PositionSource { Total, Lower };
enum class VelocityMethod { LeastSquares, TwoPoint };

struct TimeWindow {
  double t_start = -std::numeric_limits<double>::infinity();
  double t_end = std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::vector<std::size_t> samples_in(const ObservableSeries& s, const TimeWindow& w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.times[i] >= w.t_start && s.times[i] <= w.t_end) idx.push_back(i);
  return idx;
}

}  // namespace detail

/// Slope of <x>(t) over the window: least squares by default, or the
/// endpoint difference (<x_f> - <x_0>) / t_f.
inline double extract_group_velocity(const ObservableSeries& s, const TimeWindow& w = {},
                                     PositionSource source = PositionSource::Total,
                                     VelocityMethod method = VelocityMethod::LeastSquares) {
  const auto idx = detail::samples_in(s, w);
  if (idx.size() < 2) throw Error(Errc::InsufficientSamples, "need two samples in the window");
  const auto& xs = source == PositionSource::Total ? s.mean_x_total : s.mean_x_lower;
  if (method == VelocityMethod::TwoPoint)
    return (xs[idx.back()] - xs[idx.front()]) / (s.times[idx.back()] - s.times[idx.front()]);
  std::vector<double> t, x;
  for (auto i : idx) {
    t.push_back(s.times[i]);
    x.push_back(xs[i]);
  }
  return numerics::polyfit_least_squares(t, x, 1)[1];
}

struct MassFit {
  double m2 = 0.0;
  double t_eff = 0.0;
  double intercept = 0.0;  ///< fitted var_x at t = t_eff offset origin
};

/// Fits Delta_x^2(t) = a + (delta_k / m2)^2 (t_eff + t)^2 with t measured from
/// the first sample in the window. With fit_teff = false t_eff is pinned to
/// zero and var_x is fitted linearly in t^2.
inline MassFit extract_m2(const ObservableSeries& s, double delta_k, bool fit_teff,
                          const TimeWindow& w = {}, PositionSource source = PositionSource::Total) {
  if (!(delta_k > 0.0)) throw Error(Errc::InvalidArgument, "delta_k must be positive");
  const auto idx = detail::samples_in(s, w);
  const auto& vs = source == PositionSource::Total ? s.var_x_total : s.var_x_lower;
  if (idx.size() < (fit_teff ? 3u : 2u))
    throw Error(Errc::InsufficientSamples, "too few samples for the broadening fit");
  std::vector<double> t, v;
  const double origin = s.times[idx.front()];
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto i : idx) {
    const double tt = s.times[i] - origin;
    t.push_back(fit_teff ? tt : tt * tt);
    v.push_back(vs[i]);
    lo = std::min(lo, vs[i]);
    hi = std::max(hi, vs[i]);
  }
  if (hi - lo <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(hi), 1.0))
    throw Error(Errc::FitDegenerate, "variance is constant");
  MassFit fit;
  double c = 0.0;
  if (fit_teff) {
    const auto coef = numerics::polyfit_least_squares(t, v, 2);
    c = coef[2];
    if (!(c > 0.0)) throw Error(Errc::FitDegenerate, "broadening is not convex in t");
    fit.t_eff = coef[1] / (2.0 * c);
    fit.intercept = coef[0] - c * fit.t_eff * fit.t_eff;
  } else {
    const auto coef = numerics::polyfit_least_squares(t, v, 1);
    c = coef[1];
    if (!(c > 0.0)) throw Error(Errc::FitDegenerate, "variance does not grow");
    fit.intercept = coef[0];
  }
  fit.m2 = delta_k / std::sqrt(c);
  return fit;
}

/// Mean period of the inversion from same-direction zero crossings, located by
/// linear interpolation between samples.
inline double rabi_period(std::span<const double> times, std::span<const double> inversion) {
  if (times.size() != inversion.size()) throw Error(Errc::InvalidArgument, "length mismatch");
  std::vector<double> up, down;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double a = inversion[i - 1], b = inversion[i];
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
      if (a == b) continue;
      const double tc = times[i - 1] + (times[i] - times[i - 1]) * a / (a - b);
      (a < 0.0 ? up : down).push_back(tc);
    }
  }
  if (up.size() + down.size() < 4 || up.size() < 2 || down.size() < 2)
    throw Error(Errc::TooFewOscillations, "fewer than two full inversion oscillations");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto* v : {&up, &down})
    for (std::size_t i = 1; i < v->size(); ++i) {
      sum += (*v)[i] - (*v)[i - 1];
      ++count;
    }
  return sum / static_cast<double>(count);
}

inline double rabi_period(const ObservableSeries& s) { return rabi_period(s.times, s.inversion); }

}  // namespace cavityband::wavepacket
