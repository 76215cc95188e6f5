#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cavityband/error.hpp"
#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/model.hpp"

namespace cavityband::floquet {

struct ContinuedFractionResult {
  double energy = 0.0;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

// g^2 / (E - e(mu1) - g^2 / (E - e(mu2) - ...)), depth levels walking away
// from the centre in direction step (+1 or -1).
inline double fraction_tail(double energy, double k, const ModelParams& p, int center_mu, int depth,
                            int step) {
  const double g2 = p.g_eff() * p.g_eff();
  double denom = energy - bare_energy(center_mu + step * depth, k, p);
  for (int level = depth - 1; level >= 1; --level)
    denom = energy - bare_energy(center_mu + step * level, k, p) - g2 / denom;
  return g2 / denom;
}

}  // namespace detail

/// Fixed-point iteration of the continued-fraction eigenvalue equation,
/// truncated symmetrically `depth` levels on each side of center_mu (the
/// same truncation as an n = 2 depth + 1 matrix). Stops early once
/// successive iterates differ by less than 1e-12.
inline ContinuedFractionResult continued_fraction_energy(double k, const ModelParams& p,
                                                         int center_mu, int depth,
                                                         double e_start, int iters) {
  p.validate();
  if (depth < 1) throw Error(Errc::InvalidArgument, "depth must be >= 1");
  if (iters < 1) throw Error(Errc::InvalidArgument, "iters must be >= 1");

  const double bare = bare_energy(center_mu, k, p);
  if (p.g_eff() == 0.0) return {bare, true, 0};

  double scale = std::abs(bare);
  for (int level = 1; level <= depth; ++level)
    scale = std::max({scale, std::abs(bare_energy(center_mu + level, k, p)),
                      std::abs(bare_energy(center_mu - level, k, p))});
  const double bound = 1e6 * (1.0 + scale + p.g_eff());

  ContinuedFractionResult r{e_start, false, 0};
  for (int it = 1; it <= iters; ++it) {
    const double next = bare + detail::fraction_tail(r.energy, k, p, center_mu, depth, -1) +
                        detail::fraction_tail(r.energy, k, p, center_mu, depth, +1);
    if (!std::isfinite(next) || std::abs(next) > bound)
      throw Error(Errc::Diverged, "continued fraction left the bounded region at iteration " +
                                      std::to_string(it));
    const double change = std::abs(next - r.energy);
    r.energy = next;
    r.iterations = it;
    if (change < 1e-12) {
      r.converged = true;
      break;
    }
  }
  return r;
}

/// Low-momentum expansion of the lowest band through g^4 and k^2.
///
/// The k^0 g^4 term uses the denominator q^2 (q^2 + 2 Delta)^3 from
/// fourth-order perturbation theory (dimensionally consistent; equal to the
/// commonly printed q^2 (q^2 + 2 Delta) form at Delta = 0, q = 1).
inline double perturbative_energy_band1(double k, const ModelParams& p) {
  p.validate();
  const double q2 = p.q * p.q;
  const double d = p.delta;
  const double pole = q2 + 2.0 * d;
  if (std::abs(pole) < 1e-6 * q2)
    throw Error(Errc::ExpansionPole, "q^2 + 2 Delta vanishes");
  const double g2 = p.g_eff() * p.g_eff();
  const double g4 = g2 * g2;
  const double constant = -0.5 * d - 4.0 * g2 / pole +
                          4.0 * (7.0 * q2 - 2.0 * d) * g4 / (q2 * pole * pole * pole);
  const double curvature =
      0.5 - 16.0 * q2 * g2 / (pole * pole * pole) +
      4.0 * (111.0 * q2 * q2 * q2 - 46.0 * d * q2 * q2 - 28.0 * d * d * q2 - 8.0 * d * d * d) *
          g4 / (q2 * q2 * std::pow(pole, 5));
  return constant + curvature * k * k;
}

/// |E_1(n_ref) - E_1(n_small)| at quasi-momentum k.
inline double truncation_error(const ModelParams& p, double k, int n_small, int n_ref = 201) {
  const double small = band_energy(k, 1, p, TruncationSpec{n_small});
  const double ref = band_energy(k, 1, p, TruncationSpec{n_ref});
  return std::abs(ref - small);
}

}  // namespace cavityband::floquet
