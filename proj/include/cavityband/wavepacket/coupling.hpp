#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "cavityband/error.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/numerics/fft.hpp"

namespace cavityband::wavepacket {

using numerics::Complex;

enum class CouplingKind { Uniform, Enveloped };
enum class RampShape { SinSquared, Linear };

struct Ramp {
  RampShape shape = RampShape::SinSquared;
  double t_ramp = 0.0;  ///< 0 means an instantaneous switch-on

  /// Fraction of the final coupling reached at time t.
  double factor(double t) const {
    if (t_ramp <= 0.0 || t >= t_ramp) return 1.0;
    if (t <= 0.0) return 0.0;
    const double s = t / t_ramp;
    if (shape == RampShape::Linear) return s;
    const double v = std::sin(0.5 * std::numbers::pi * s);
    return v * v;
  }
};

/// Spatial shape of the coupling, 2 g_eff cos(q x) gbar(x) r(t). The
/// amplitude g0, photon number and q come from ModelParams.
struct CouplingProfile {
  CouplingKind kind = CouplingKind::Uniform;
  double x_l = 0.0;  ///< cavity half length
  double x_e = 1.0;  ///< edge width
  std::optional<Ramp> ramp;

  void validate() const {
    if (kind == CouplingKind::Enveloped && (!(x_l > 0.0) || !(x_e > 0.0)))
      throw Error(Errc::InvalidArgument, "envelope needs x_l > 0 and x_e > 0");
    if (ramp && !(ramp->t_ramp >= 0.0))
      throw Error(Errc::InvalidArgument, "ramp duration must be >= 0");
  }

  /// gbar(x) = (tanh((x + x_l)/x_e) - tanh((x - x_l)/x_e)) / 2, or 1 when uniform.
  double envelope(double x) const {
    if (kind == CouplingKind::Uniform) return 1.0;
    return 0.5 * (std::tanh((x + x_l) / x_e) - std::tanh((x - x_l) / x_e));
  }

  double ramp_factor(double t) const { return ramp ? ramp->factor(t) : 1.0; }
  bool time_dependent() const { return ramp && ramp->t_ramp > 0.0; }

  static CouplingProfile uniform() { return {}; }
  static CouplingProfile enveloped(double x_l, double x_e) {
    return {CouplingKind::Enveloped, x_l, x_e, std::nullopt};
  }
};

/// Local off-diagonal coupling G(x, t) in the (|+>, |->) basis.
inline double local_coupling(const CouplingProfile& c, const floquet::ModelParams& p, double x,
                             double t) {
  return 2.0 * p.g_eff() * std::cos(p.q * x) * c.envelope(x) * c.ramp_factor(t);
}

/// Row-major 2x2 complex matrix acting on (psi_plus, psi_minus).
using Mat2 = std::array<Complex, 4>;

/// exp(-i dt (Delta/2 sigma_3 + G sigma_1)) in closed form.
inline Mat2 potential_step_matrix(double dt, double g, double delta) {
  const double half = 0.5 * delta;
  const double omega = std::sqrt(half * half + g * g);
  const double phase = omega * dt;
  double c, s;  // cos(Omega dt), sin(Omega dt) / Omega
  if (phase < 1e-8) {
    const double p2 = phase * phase;
    c = 1.0 - 0.5 * p2;
    s = dt * (1.0 - p2 / 6.0);
  } else {
    c = std::cos(phase);
    s = std::sin(phase) / omega;
  }
  const Complex i{0.0, 1.0};
  return {Complex{c, -s * half}, -i * s * g, -i * s * g, Complex{c, s * half}};
}

}  // namespace cavityband::wavepacket
