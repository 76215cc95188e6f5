#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "cavityband/error.hpp"
#include "cavityband/numerics/tridiag.hpp"

namespace cavityband::floquet {

/// Scaled model parameters (recoil units: length 1/q~, time m/(hbar q~^2)).
struct ModelParams {
  double g0 = 0.0;      ///< coupling amplitude; off-diagonal of the Floquet matrix
  double delta = 0.0;   ///< atom-cavity detuning
  double q = 1.0;       ///< photon wave number
  int n_photons = 1;    ///< photon number of the excitation sector

  /// Matrix off-diagonal element g0*sqrt(n).
  double g_eff() const { return g0 * std::sqrt(static_cast<double>(n_photons)); }

  void validate() const {
    if (!(q > 0.0) || !std::isfinite(q)) throw Error(Errc::InvalidArgument, "q must be > 0");
    if (n_photons < 1) throw Error(Errc::InvalidArgument, "n_photons must be >= 1");
    if (!(g0 >= 0.0) || !std::isfinite(g0)) throw Error(Errc::InvalidArgument, "g0 must be >= 0");
    if (!std::isfinite(delta)) throw Error(Errc::InvalidArgument, "delta must be finite");
  }
};

/// Window of bare indices mu in [-(n-1)/2, (n-1)/2]; n must be odd so the
/// window couples the same number of states on either side of mu = 0.
struct TruncationSpec {
  int n_states = 201;

  void validate() const {
    if (n_states < 1 || n_states % 2 == 0)
      throw Error(Errc::InvalidArgument,
                  "n_states must be odd and positive, got " + std::to_string(n_states));
  }
  int mu_min() const { return -(n_states - 1) / 2; }
  int mu_max() const { return (n_states - 1) / 2; }
  int mu_at(int row) const { return mu_min() + row; }
  int row_of(int mu) const { return mu - mu_min(); }
  bool contains(int mu) const { return mu >= mu_min() && mu <= mu_max(); }
};

/// Bare state |k + mu q>|-> (mu even) or |k + mu q>|+> (mu odd).
constexpr bool is_upper_component(int mu) noexcept { return (mu % 2) != 0; }

/// (k + mu q)^2 / 2 - (-1)^mu Delta / 2
inline double bare_energy(int mu, double k, const ModelParams& p) {
  const double momentum = k + mu * p.q;
  const double sign = is_upper_component(mu) ? -1.0 : 1.0;
  return 0.5 * momentum * momentum - sign * 0.5 * p.delta;
}

/// Truncated Floquet matrix at quasi-momentum k; row j is bare index mu_min + j.
inline numerics::SymTridiag build_matrix(double k, const ModelParams& p, const TruncationSpec& t) {
  p.validate();
  t.validate();
  numerics::SymTridiag m;
  m.diag.resize(static_cast<std::size_t>(t.n_states));
  m.offdiag.assign(static_cast<std::size_t>(t.n_states - 1), p.g_eff());
  for (int row = 0; row < t.n_states; ++row) m.diag[static_cast<std::size_t>(row)] = bare_energy(t.mu_at(row), k, p);
  return m;
}

/// Wavelength and atomic mass fixing the scale; X_s = 1/q~, T_s = m X_s^2 / hbar.
struct PhysicalUnits {
  double wavelength = 1e-6;         ///< metres
  double atomic_mass = 1.66053906660e-25;  ///< kg (100 a.m.u.)

  static constexpr double kHbar = 1.054571817e-34;
  static constexpr double kAtomicMassUnit = 1.66053906660e-27;

  void validate() const {
    if (!(wavelength > 0.0) || !(atomic_mass > 0.0))
      throw Error(Errc::InvalidArgument, "physical units must be positive");
  }
  double length_scale() const { return wavelength / (2.0 * std::numbers::pi); }
  double time_scale() const {
    const double xs = length_scale();
    return atomic_mass * xs * xs / kHbar;
  }
};

enum class QuantityKind { Energy, Time, Length };

/// Energies (and rates) come out as angular frequencies in s^-1, times in s,
/// lengths in m. Note the often-quoted T_s ~ 0.4 us for lambda = 1000 nm and
/// m = 100 amu does not follow from the definition, which gives ~40 us.
inline double to_physical(const ModelParams& p, const PhysicalUnits& u, double scaled_value,
                          QuantityKind kind) {
  p.validate();
  u.validate();
  switch (kind) {
    case QuantityKind::Energy: return scaled_value / u.time_scale();
    case QuantityKind::Time: return scaled_value * u.time_scale();
    case QuantityKind::Length: return scaled_value * u.length_scale();
  }
  return scaled_value;
}

}  // namespace cavityband::floquet
