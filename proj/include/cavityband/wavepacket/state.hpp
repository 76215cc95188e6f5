#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/numerics/fft.hpp"
#include "cavityband/numerics/tridiag.hpp"
#include "cavityband/wavepacket/grid.hpp"

namespace cavityband::wavepacket {

using numerics::Complex;
using numerics::ComplexArray;

enum class Component { Plus, Minus };

/// Two-component wave function; psi_plus is |+> = |up, n-1>, psi_minus is
/// |-> = |down, n>.
struct SpinorField {
  ComplexArray psi_plus;
  ComplexArray psi_minus;
  double time = 0.0;

  ComplexArray& component(Component c) { return c == Component::Plus ? psi_plus : psi_minus; }
  const ComplexArray& component(Component c) const {
    return c == Component::Plus ? psi_plus : psi_minus;
  }
};

inline Component component_of(int mu) {
  return floquet::is_upper_component(mu) ? Component::Plus : Component::Minus;
}

inline double norm(const SpinorField& s, const SpatialGrid& g) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j)
    acc += std::norm(s.psi_plus[j]) + std::norm(s.psi_minus[j]);
  return acc * g.dx;
}

inline void normalize(SpinorField& s, const SpatialGrid& g) {
  const double n = norm(s, g);
  if (!(n > 0.0)) throw Error(Errc::InvalidArgument, "cannot normalise a zero state");
  const double f = 1.0 / std::sqrt(n);
  for (auto& v : s.psi_plus) v *= f;
  for (auto& v : s.psi_minus) v *= f;
}

/// <a|b> = sum conj(a) b dx over both components.
inline Complex overlap(const SpinorField& a, const SpinorField& b, const SpatialGrid& g) {
  Complex acc{0.0, 0.0};
  for (std::size_t j = 0; j < g.n_points; ++j)
    acc += std::conj(a.psi_plus[j]) * b.psi_plus[j] + std::conj(a.psi_minus[j]) * b.psi_minus[j];
  return acc * g.dx;
}

/// Which part of the grid enters a moment.
enum class WindowKind {
  None,
  OutsideCut,  ///< drop |x| > width
  PeakWindow,  ///< drop |x - x_peak| > width, x_peak the maximum of the selected density
};

struct Exclusion {
  WindowKind kind = WindowKind::None;
  double width = 0.0;
};

struct MeasureOptions {
  Component conditional = Component::Minus;
  Exclusion exclusion;
  /// When false an empty conditional component yields NaN moments instead
  /// of EmptySelection.
  bool strict = true;
};

/// Moments of one snapshot. Total moments use |psi_+|^2 + |psi_-|^2; the
/// conditional ones renormalise within the selected component.
struct Moments {
  double norm = 0.0;
  double p_plus = 0.0;
  double p_minus = 0.0;
  double inversion = 0.0;
  double mean_x_total = 0.0;
  double var_x_total = 0.0;
  double mean_x_cond = 0.0;
  double var_x_cond = 0.0;
  double excess_kurtosis_total = 0.0;
};

namespace detail {

struct WeightedMoments {
  double weight = 0.0;
  double mean = 0.0;
  double var = 0.0;
  double excess_kurtosis = 0.0;
};

template <class Density>
WeightedMoments windowed_moments(const SpatialGrid& g, Density&& density, const Exclusion& ex) {
  double center = 0.0;
  if (ex.kind == WindowKind::PeakWindow) {
    double best = -1.0;
    for (std::size_t j = 0; j < g.n_points; ++j) {
      const double d = density(j);
      if (d > best) {
        best = d;
        center = g.x(j);
      }
    }
  }
  auto keep = [&](double x) {
    switch (ex.kind) {
      case WindowKind::None: return true;
      case WindowKind::OutsideCut: return std::abs(x) <= ex.width;
      case WindowKind::PeakWindow: return std::abs(x - center) <= ex.width;
    }
    return true;
  };
  // Two passes: the mean first, then central moments (avoids cancellation for
  // packets far from the origin).
  double w = 0.0, s1 = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    if (!keep(x)) continue;
    const double d = density(j);
    w += d;
    s1 += d * x;
  }
  WeightedMoments m;
  m.weight = w * g.dx;
  if (!(w > 0.0)) return m;
  m.mean = s1 / w;
  double s2 = 0.0, s4 = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    if (!keep(x)) continue;
    const double d = density(j);
    const double u = (x - m.mean) * (x - m.mean);
    s2 += d * u;
    s4 += d * u * u;
  }
  m.var = s2 / w;
  m.excess_kurtosis = m.var > 0.0 ? (s4 / w) / (m.var * m.var) - 3.0 : 0.0;
  return m;
}

}  // namespace detail

inline Moments measure(const SpinorField& s, const SpatialGrid& g, const MeasureOptions& opt = {}) {
  Moments r;
  double pp = 0.0, pm = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    pp += std::norm(s.psi_plus[j]);
    pm += std::norm(s.psi_minus[j]);
  }
  r.p_plus = pp * g.dx;
  r.p_minus = pm * g.dx;
  r.norm = r.p_plus + r.p_minus;
  if (!(r.norm > 0.0)) throw Error(Errc::EmptySelection, "state has zero norm");
  r.inversion = (r.p_plus - r.p_minus) / r.norm;

  const auto total = detail::windowed_moments(
      g, [&](std::size_t j) { return std::norm(s.psi_plus[j]) + std::norm(s.psi_minus[j]); },
      opt.exclusion);
  if (total.weight < 1e-12) throw Error(Errc::EmptySelection, "exclusion window removes the packet");
  r.mean_x_total = total.mean;
  r.var_x_total = total.var;
  r.excess_kurtosis_total = total.excess_kurtosis;

  const ComplexArray& c = s.component(opt.conditional);
  const auto cond =
      detail::windowed_moments(g, [&](std::size_t j) { return std::norm(c[j]); }, opt.exclusion);
  if (cond.weight < 1e-12) {
    if (opt.strict) throw Error(Errc::EmptySelection, "conditional component norm below 1e-12");
    r.mean_x_cond = r.var_x_cond = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.mean_x_cond = cond.mean;
    r.var_x_cond = cond.var;
  }
  return r;
}

/// Momentum densities on the grid's momentum bins, sorted by ascending k.
/// Normalised so sum (p_plus + p_minus) dk equals the state norm.
struct MomentumDensity {
  std::vector<double> k;
  std::vector<double> p_plus;
  std::vector<double> p_minus;
  double dk = 0.0;
};

/// phi(k_m) = dx / sqrt(2 pi) exp(-i k_m x_min) X_m for one component.
inline ComplexArray momentum_amplitude(const ComplexArray& psi, const SpatialGrid& g,
                                       const numerics::FftPlan& plan) {
  ComplexArray a = psi;
  plan.forward(a);
  const double scale = g.dx / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t m = 0; m < g.n_points; ++m)
    a[m] *= scale * std::polar(1.0, -g.k(m) * g.x_min);
  return a;
}

inline MomentumDensity momentum_density(const SpinorField& s, const SpatialGrid& g) {
  const numerics::FftPlan plan(g.n_points);
  const auto ap = momentum_amplitude(s.psi_plus, g, plan);
  const auto am = momentum_amplitude(s.psi_minus, g, plan);
  MomentumDensity d;
  d.dk = g.dk;
  const std::size_t n = g.n_points, half = n / 2;
  d.k.reserve(n);
  d.p_plus.reserve(n);
  d.p_minus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = (i + half) % n;
    d.k.push_back(g.k(m));
    d.p_plus.push_back(std::norm(ap[m]));
    d.p_minus.push_back(std::norm(am[m]));
  }
  return d;
}

/// Gaussian momentum profile (2 pi dk^2)^(-1/4) exp(-(k - k0)^2 / (4 dk^2)).
inline double gaussian_amplitude(double k, double k0, double delta_k) {
  const double u = (k - k0) / delta_k;
  return std::pow(2.0 * std::numbers::pi * delta_k * delta_k, -0.25) * std::exp(-0.25 * u * u);
}

namespace detail {

inline void check_packet_fits(const SpatialGrid& g, double k0, double delta_k, double x0) {
  if (!(delta_k > 0.0) || !std::isfinite(delta_k))
    throw Error(Errc::InvalidArgument, "delta_k must be positive");
  const double dx_pos = 0.5 / delta_k;
  const double outside_x = 0.5 * std::erfc((x0 - g.x_min) / (std::numbers::sqrt2 * dx_pos)) +
                           0.5 * std::erfc((g.x_max - x0) / (std::numbers::sqrt2 * dx_pos));
  if (outside_x > 1e-8)
    throw Error(Errc::PacketTooWide, "packet tails beyond the grid carry " +
                                         std::to_string(outside_x) + " probability");
  const double kn = g.k_nyquist();
  const double outside_k = 0.5 * std::erfc((kn - k0) / (std::numbers::sqrt2 * delta_k)) +
                           0.5 * std::erfc((k0 + kn) / (std::numbers::sqrt2 * delta_k));
  if (outside_k > 1e-8)
    throw Error(Errc::PacketTooWide, "momentum spread exceeds the grid's Nyquist momentum");
}

}  // namespace detail

/// Minimum-uncertainty Gaussian (Delta_x = 1 / (2 delta_k)) centred at x0
/// with mean momentum k0, in one internal component.
inline SpinorField init_bare_gaussian(const SpatialGrid& g, double k0, double delta_k, double x0,
                                      Component component) {
  detail::check_packet_fits(g, k0, delta_k, x0);
  const double width = 0.5 / delta_k;
  SpinorField s;
  s.psi_plus.assign(g.n_points, Complex{});
  s.psi_minus.assign(g.n_points, Complex{});
  ComplexArray& target = s.component(component);
  const double amp = std::pow(2.0 * std::numbers::pi * width * width, -0.25);
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double u = (g.x(j) - x0) / width;
    target[j] = amp * std::exp(-0.25 * u * u) * std::polar(1.0, k0 * (g.x(j) - x0));
  }
  normalize(s, g);
  return s;
}

namespace detail {

/// Dressed states of one band at the given quasi-momenta, signs aligned so
/// the coefficient vectors vary continuously with k (the solver's own sign
/// rule can flip between neighbouring k).
inline std::vector<std::vector<double>> aligned_coefficients(const std::vector<double>& ks,
                                                             const floquet::ModelParams& p,
                                                             const floquet::TruncationSpec& t,
                                                             int band, std::size_t anchor) {
  std::vector<std::vector<double>> out(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i)
    out[i] = std::move(floquet::dressed_states(ks[i], p, t, band).back().coeffs);
  auto align = [&](std::size_t i, std::size_t ref) {
    double dot = 0.0;
    for (std::size_t r = 0; r < out[i].size(); ++r) dot += out[i][r] * out[ref][r];
    if (dot < 0.0)
      for (double& v : out[i]) v = -v;
  };
  for (std::size_t i = anchor + 1; i < ks.size(); ++i) align(i, i - 1);
  for (std::size_t i = anchor; i-- > 0;) align(i, i + 1);
  return out;
}

}  // namespace detail

/// Gaussian superposition of band-`band` dressed states,
///   psi = sum_k phi(k) exp(-i k x0) sum_mu c_mu(k) |k + mu q>|component(mu)>,
/// synthesised exactly on the grid's momentum bins inside (-q, q].
inline SpinorField init_dressed_gaussian(const SpatialGrid& g, const floquet::ModelParams& p,
                                         const floquet::TruncationSpec& t, int band, double k0,
                                         double delta_k, double x0 = 0.0) {
  p.validate();
  t.validate();
  detail::check_packet_fits(g, k0, delta_k, x0);
  const double q = p.q;
  const double outside = 0.5 * std::erfc((q - k0) / (std::numbers::sqrt2 * delta_k)) +
                         0.5 * std::erfc((k0 + q) / (std::numbers::sqrt2 * delta_k));
  if (outside > 1e-6)
    throw Error(Errc::ZoneBoundaryOverlap,
                "momentum distribution has " + std::to_string(outside) + " weight outside (-q, q]");

  std::vector<std::size_t> bins;
  for (std::size_t m = 0; m < g.n_points; ++m) {
    const double k = g.k(m);
    if (k > -q && k <= q && std::abs(k - k0) <= 12.0 * delta_k) bins.push_back(m);
  }
  std::sort(bins.begin(), bins.end(), [&](auto a, auto b) { return g.k(a) < g.k(b); });
  if (bins.empty()) throw Error(Errc::BadExtent, "grid has no momentum bins under the packet");
  std::vector<double> ks;
  for (auto m : bins) ks.push_back(g.k(m));
  const std::size_t anchor = static_cast<std::size_t>(
      std::min_element(ks.begin(), ks.end(),
                       [&](double a, double b) { return std::abs(a - k0) < std::abs(b - k0); }) -
      ks.begin());
  const auto coeffs = detail::aligned_coefficients(ks, p, t, band, anchor);

  SpinorField s;
  s.psi_plus.assign(g.n_points, Complex{});
  s.psi_minus.assign(g.n_points, Complex{});
  const numerics::FftPlan plan(g.n_points);
  const double scale = static_cast<double>(g.n_points) * g.dk / std::sqrt(2.0 * std::numbers::pi);
  ComplexArray work(g.n_points);
  for (int row = 0; row < t.n_states; ++row) {
    const int mu = t.mu_at(row);
    double peak = 0.0;
    for (const auto& c : coeffs) peak = std::max(peak, std::abs(c[static_cast<std::size_t>(row)]));
    if (peak < 1e-14) continue;
    // Components the grid cannot represent are dropped as long as they carry
    // less than 1e-8 probability.
    if (std::abs(k0 + mu * q) + 12.0 * delta_k >= g.k_nyquist()) {
      if (peak > 1e-4)
        throw Error(Errc::BadExtent, "grid does not resolve bare momentum k + " +
                                         std::to_string(mu) + " q");
      continue;
    }
    std::fill(work.begin(), work.end(), Complex{});
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const double k = ks[i];
      work[bins[i]] = scale * gaussian_amplitude(k, k0, delta_k) *
                      coeffs[i][static_cast<std::size_t>(row)] *
                      std::polar(1.0, -k * (x0 - g.x_min));
    }
    plan.inverse(work);
    ComplexArray& target = s.component(component_of(mu));
    for (std::size_t j = 0; j < g.n_points; ++j)
      target[j] += work[j] * std::polar(1.0, mu * q * g.x(j));
  }
  normalize(s, g);
  return s;
}

/// Amplitudes a_nu(k) = <phi_nu(k)|psi> on the momentum bins inside (-q, q].
struct BandDecomposition {
  std::vector<double> k;
  std::vector<std::vector<Complex>> amplitude;  ///< amplitude[nu - 1][i]
  double dk = 0.0;
  double total_norm = 0.0;

  /// Fraction of the state's norm in band nu.
  double population(int nu) const {
    double acc = 0.0;
    for (const auto& a : amplitude[static_cast<std::size_t>(nu - 1)]) acc += std::norm(a);
    return acc * dk / total_norm;
  }
};

/// Projects onto the dressed bands 1..num_bands. Only bare indices whose whole
/// zone fits below the grid's Nyquist momentum take part.
inline BandDecomposition band_decomposition(const SpinorField& s, const SpatialGrid& g,
                                            const floquet::ModelParams& p,
                                            const floquet::TruncationSpec& t, int num_bands) {
  p.validate();
  t.validate();
  if (num_bands < 1 || num_bands > t.n_states)
    throw Error(Errc::InvalidArgument, "num_bands must be in [1, n_states]");
  const double q = p.q;
  const numerics::FftPlan plan(g.n_points);

  std::vector<std::size_t> bins;
  for (std::size_t m = 0; m < g.n_points; ++m)
    if (g.k(m) > -q && g.k(m) <= q) bins.push_back(m);
  std::sort(bins.begin(), bins.end(), [&](auto a, auto b) { return g.k(a) < g.k(b); });

  // demod[row][i]: amplitude of bare momentum k_i + mu q in component(mu).
  std::vector<std::vector<Complex>> demod(static_cast<std::size_t>(t.n_states));
  ComplexArray work(g.n_points);
  for (int row = 0; row < t.n_states; ++row) {
    const int mu = t.mu_at(row);
    if (std::abs(mu) * q + q > g.k_nyquist()) continue;
    const ComplexArray& src = s.component(component_of(mu));
    for (std::size_t j = 0; j < g.n_points; ++j)
      work[j] = src[j] * std::polar(1.0, -mu * q * g.x(j));
    const auto amp = momentum_amplitude(work, g, plan);
    auto& out = demod[static_cast<std::size_t>(row)];
    out.reserve(bins.size());
    for (auto m : bins) out.push_back(amp[m]);
  }

  BandDecomposition d;
  d.dk = g.dk;
  d.total_norm = norm(s, g);
  d.amplitude.assign(static_cast<std::size_t>(num_bands), std::vector<Complex>(bins.size()));
  double peak = 0.0;
  std::vector<double> weight(bins.size(), 0.0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (const auto& row : demod)
      if (!row.empty()) weight[i] += std::norm(row[i]);
    peak = std::max(peak, weight[i]);
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    d.k.push_back(g.k(bins[i]));
    if (weight[i] <= 1e-16 * peak) continue;
    const auto eig = numerics::eig_sym_tridiag(floquet::build_matrix(d.k.back(), p, t));
    for (int b = 0; b < num_bands; ++b) {
      Complex acc{};
      for (std::size_t row = 0; row < demod.size(); ++row)
        if (!demod[row].empty()) acc += eig.vectors(row, static_cast<std::size_t>(b)) * demod[row][i];
      d.amplitude[static_cast<std::size_t>(b)][i] = acc;
    }
  }
  return d;
}

inline std::vector<double> band_populations(const SpinorField& s, const SpatialGrid& g,
                                            const floquet::ModelParams& p,
                                            const floquet::TruncationSpec& t, int num_bands) {
  const auto d = band_decomposition(s, g, p, t, num_bands);
  std::vector<double> out;
  for (int b = 1; b <= num_bands; ++b) out.push_back(d.population(b));
  return out;
}

}  // namespace cavityband::wavepacket
