#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/numerics/finite_difference.hpp"

namespace cavityband::floquet {

/// Taylor-expansion mass parameters of band `band` about k0.
///
/// m0 (phase mass) depends on the zero of energy and is reported only for
/// completeness; m0 and m1 are absent at k0 = 0, and m1 is also absent when
/// the group velocity vanishes (band edges).
struct EffectiveMasses {
  double k0 = 0.0;
  int band = 1;
  double e0 = 0.0;       ///< E(k = 0)
  double energy = 0.0;   ///< E(k0)
  double v_g = 0.0;
  double curvature = 0.0;  ///< E''(k0)
  std::optional<double> m0;
  std::optional<double> m1;
  std::optional<double> m2;
  static constexpr bool m0_nonphysical = true;
};

/// Default finite-difference step, in units of q.
inline constexpr double kDefaultFdStep = 1e-3;

inline EffectiveMasses effective_masses(const ModelParams& p, const TruncationSpec& t, double k0,
                                        int band, double fd_step = kDefaultFdStep) {
  p.validate();
  t.validate();
  if (band < 1 || band > t.n_states) throw Error(Errc::InvalidArgument, "band out of range");
  if (!(fd_step > 0.0)) throw Error(Errc::InvalidArgument, "fd_step must be positive");
  const double h = fd_step * p.q;
  auto energy = [&](double k) { return band_energy(k, band, p, t); };

  EffectiveMasses m;
  m.k0 = k0;
  m.band = band;
  m.e0 = energy(0.0);
  m.energy = energy(k0);
  m.v_g = numerics::derivative(energy, k0, h, 1);
  m.curvature = numerics::derivative(energy, k0, h, 2);
  if (m.curvature != 0.0) m.m2 = 1.0 / m.curvature;
  // Eigenvalues carry absolute noise ~ eps * ||A||; below the resulting
  // derivative noise the velocity is indistinguishable from zero.
  const double noise_floor = std::max(
      1e-14, 64.0 * std::numeric_limits<double>::epsilon() * build_matrix(k0, p, t).norm_inf() / h);
  if (k0 != 0.0) {
    if (std::abs(m.v_g) >= noise_floor) m.m1 = k0 / m.v_g;
    if (m.energy != m.e0) m.m0 = k0 * k0 / (2.0 * (m.energy - m.e0));
  }
  return m;
}

}  // namespace cavityband::floquet
