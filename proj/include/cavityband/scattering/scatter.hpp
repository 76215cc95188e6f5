#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/masses.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/wavepacket/coupling.hpp"
#include "cavityband/wavepacket/grid.hpp"
#include "cavityband/wavepacket/propagator.hpp"
#include "cavityband/wavepacket/state.hpp"

namespace cavityband::scattering {

using wavepacket::Component;
using wavepacket::MomentumDensity;
using wavepacket::SpatialGrid;
using wavepacket::SpinorField;

/// An atom launched from outside an enveloped cavity.
struct ScatterScenario {
  floquet::ModelParams params;
  wavepacket::CouplingProfile profile = wavepacket::CouplingProfile::enveloped(1500.0, 50.0);
  double k0 = 0.5;
  double delta_k = 0.01;
  double x0 = -2500.0;
  Component initial = Component::Minus;
  SpatialGrid grid = wavepacket::make_grid(1u << 14, -8192.0, 8192.0);
  double dt = 0.05;
  double t_max = 12000.0;  ///< time budget
  std::size_t sample_stride = 20;
  std::size_t momentum_stride = 0;  ///< momentum snapshot every this many samples; 0 disables
  double residual_tolerance = 1e-3;
  std::optional<double> region_margin;  ///< overrides x_b

  /// Classification margin x_b = x_l + 5 x_e.
  double x_b() const {
    return region_margin ? *region_margin : profile.x_l + 5.0 * profile.x_e;
  }

  void validate() const {
    params.validate();
    profile.validate();
    if (profile.kind != wavepacket::CouplingKind::Enveloped)
      throw Error(Errc::InvalidArgument, "scattering needs an enveloped cavity");
    if (!(dt > 0.0) || !(t_max > 0.0) || sample_stride == 0)
      throw Error(Errc::InvalidArgument, "dt, t_max and sample_stride must be positive");
    if (!(std::abs(x0) > profile.x_l + 5.0 * profile.x_e))
      throw Error(Errc::InvalidArgument, "x0 must lie outside x_l + 5 x_e");
    const double width = 0.5 / delta_k;
    const double xb = x_b();
    const double inside = 0.5 * std::abs(std::erf((xb - x0) / (std::numbers::sqrt2 * width)) -
                                          std::erf((-xb - x0) / (std::numbers::sqrt2 * width)));
    if (inside > 1e-8)
      throw Error(Errc::InvalidArgument, "initial packet overlaps the cavity region");
  }
};

/// Probabilities in x < -x_b (reflected), x > x_b (transmitted) and between.
struct RegionPopulations {
  double reflected_plus = 0.0;
  double reflected_minus = 0.0;
  double transmitted_plus = 0.0;
  double transmitted_minus = 0.0;
  double residual = 0.0;
  double reflected_mean_abs_x = 0.0;
  double transmitted_mean_abs_x = 0.0;

  double reflected() const { return reflected_plus + reflected_minus; }
  double transmitted() const { return transmitted_plus + transmitted_minus; }
};

inline RegionPopulations region_populations(const SpinorField& s, const SpatialGrid& g, double x_b) {
  RegionPopulations r;
  double rx = 0.0, tx = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    const double a = std::norm(s.psi_plus[j]) * g.dx;
    const double b = std::norm(s.psi_minus[j]) * g.dx;
    if (x < -x_b) {
      r.reflected_plus += a;
      r.reflected_minus += b;
      rx += (a + b) * -x;
    } else if (x > x_b) {
      r.transmitted_plus += a;
      r.transmitted_minus += b;
      tx += (a + b) * x;
    } else {
      r.residual += a + b;
    }
  }
  if (r.reflected() > 0.0) r.reflected_mean_abs_x = rx / r.reflected();
  if (r.transmitted() > 0.0) r.transmitted_mean_abs_x = tx / r.transmitted();
  return r;
}

struct TransparencyMetrics {
  double min_initial_population = 1.0;  ///< minimum over samples of the starting component
  double initial_p_plus = 0.0;
  double initial_p_minus = 0.0;
  double final_p_plus = 0.0;
  double final_p_minus = 0.0;
  double max_population_change = 0.0;
  double momentum_fidelity = 0.0;  ///< sum_c sum_k sqrt(p_final p_initial) dk
  std::optional<double> transit_time;  ///< <x> from -x_l to +x_l
  double free_transit_time = 0.0;      ///< 2 x_l / k0
  std::optional<double> transit_ratio;
  /// Quasi-momentum inside the cavity with the incident energy, and the
  /// transit ratio k0 / v_g it implies (m1 when k_inside = k0).
  std::optional<double> k_inside;
  std::optional<double> predicted_transit_ratio;
};

struct ScatterReport {
  double R_total = 0.0;
  double T_total = 0.0;
  double residual = 0.0;
  double R_plus = 0.0;
  double R_minus = 0.0;
  double T_plus = 0.0;
  double T_minus = 0.0;
  double initial_inversion = 0.0;
  double final_inversion = 0.0;
  double reflected_inversion = std::numeric_limits<double>::quiet_NaN();
  double transmitted_inversion = std::numeric_limits<double>::quiet_NaN();
  double reflected_momentum_centroid = std::numeric_limits<double>::quiet_NaN();
  double transmitted_momentum_centroid = std::numeric_limits<double>::quiet_NaN();
  double final_time = 0.0;
  bool cleared = false;
  std::string warning;
  Component initial = Component::Minus;
  double x_b = 0.0;

  MomentumDensity incident_momentum;     ///< initial state
  MomentumDensity final_momentum;        ///< whole final state
  MomentumDensity transmitted_momentum;  ///< final state restricted to x > x_b
  MomentumDensity reflected_momentum;    ///< final state restricted to x < -x_b
  wavepacket::ObservableSeries series;
  std::vector<double> region_times;
  std::vector<double> region_reflected;
  std::vector<double> region_transmitted;
  std::vector<double> region_residual;
  SpinorField final_state;
  std::optional<TransparencyMetrics> transparency;
};

namespace detail {

inline SpinorField masked(const SpinorField& s, const SpatialGrid& g, double lo, double hi) {
  SpinorField out = s;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    if (x < lo || x > hi) out.psi_plus[j] = out.psi_minus[j] = {};
  }
  return out;
}

inline double centroid(const MomentumDensity& d) {
  double w = 0.0, m = 0.0;
  for (std::size_t i = 0; i < d.k.size(); ++i) {
    const double p = d.p_plus[i] + d.p_minus[i];
    w += p;
    m += p * d.k[i];
  }
  return w > 0.0 ? m / w : std::numeric_limits<double>::quiet_NaN();
}

inline double crossing_time(const std::vector<double>& t, const std::vector<double>& x, double level) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (x[i - 1] < level && x[i] >= level)
      return t[i - 1] + (t[i] - t[i - 1]) * (level - x[i - 1]) / (x[i] - x[i - 1]);
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Runs until the packet has entered the cavity region (residual above one
/// half at some sample), then left it (residual below residual_tolerance)
/// with the dominant outgoing part beyond 0.8 |x0|; otherwise until t_max,
/// in which case the report carries a NotCleared warning.
inline ScatterReport run_scatter(const ScatterScenario& s) {
  s.validate();
  const auto& g = s.grid;
  const double xb = s.x_b();
  SpinorField state = wavepacket::init_bare_gaussian(g, s.k0, s.delta_k, s.x0, s.initial);

  ScatterReport rep;
  rep.initial = s.initial;
  rep.x_b = xb;
  rep.incident_momentum = wavepacket::momentum_density(state, g);
  rep.initial_inversion = wavepacket::measure(state, g, {Component::Minus, {}, false}).inversion;

  wavepacket::EvolveOptions opt;
  opt.dt = s.dt;
  opt.sample_stride = s.sample_stride;
  opt.momentum_stride = s.momentum_stride;
  opt.measure.strict = false;
  wavepacket::ObservableRecorder rec(g, opt, wavepacket::norm(state, g));
  wavepacket::Propagator prop(g, s.profile, s.params, s.dt);

  const std::size_t budget = static_cast<std::size_t>(std::ceil(s.t_max / s.dt - 1e-9));
  double peak_residual = 0.0;
  RegionPopulations regions;
  auto sample = [&] {
    rec.sample(state, rep.series);
    regions = region_populations(state, g, xb);
    rep.region_times.push_back(state.time);
    rep.region_reflected.push_back(regions.reflected());
    rep.region_transmitted.push_back(regions.transmitted());
    rep.region_residual.push_back(regions.residual);
    peak_residual = std::max(peak_residual, regions.residual);
  };
  sample();
  std::size_t done = 0;
  while (done < budget) {
    const std::size_t chunk = std::min(s.sample_stride, budget - done);
    prop.advance(state, chunk);
    done += chunk;
    sample();
    const double outgoing = regions.reflected() >= regions.transmitted()
                                ? regions.reflected_mean_abs_x
                                : regions.transmitted_mean_abs_x;
    if (peak_residual >= 0.5 && regions.residual < s.residual_tolerance &&
        outgoing > 0.8 * std::abs(s.x0)) {
      rep.cleared = true;
      break;
    }
  }
  if (!rep.cleared)
    rep.warning = std::string(to_string(Errc::NotCleared)) + ": residual " +
                  std::to_string(regions.residual) + " in the cavity region at t = " +
                  std::to_string(state.time);
  if (rep.series.boundary_warning) {
    if (!rep.warning.empty()) rep.warning += "; ";
    rep.warning += "probability reached the periodic boundary";
  }

  rep.final_time = state.time;
  rep.R_plus = regions.reflected_plus;
  rep.R_minus = regions.reflected_minus;
  rep.T_plus = regions.transmitted_plus;
  rep.T_minus = regions.transmitted_minus;
  rep.R_total = regions.reflected();
  rep.T_total = regions.transmitted();
  rep.residual = regions.residual;
  rep.final_inversion = rep.series.inversion.back();
  if (rep.R_total > 1e-12) rep.reflected_inversion = (rep.R_plus - rep.R_minus) / rep.R_total;
  if (rep.T_total > 1e-12) rep.transmitted_inversion = (rep.T_plus - rep.T_minus) / rep.T_total;

  const double inf = std::numeric_limits<double>::infinity();
  rep.final_momentum = wavepacket::momentum_density(state, g);
  rep.reflected_momentum = wavepacket::momentum_density(detail::masked(state, g, -inf, -xb), g);
  rep.transmitted_momentum = wavepacket::momentum_density(detail::masked(state, g, xb, inf), g);
  if (rep.R_total > 1e-12) rep.reflected_momentum_centroid = detail::centroid(rep.reflected_momentum);
  if (rep.T_total > 1e-12)
    rep.transmitted_momentum_centroid = detail::centroid(rep.transmitted_momentum);
  rep.final_state = std::move(state);
  return rep;
}

/// Predicted outcome of reflection against the gap at k = m q / 2.
struct ReflectionPrediction {
  int gap_order = 0;  ///< m; odd m are Doppleron-type gaps, even m Bragg-type
  double k_out = 0.0;
  bool flip = false;
};

/// k_in within tolerance of m q / 2 (m != 0) reflects to k_in - m q, flipping
/// the internal state for odd m only.
inline ReflectionPrediction reflection_state_map(double k_in, double q = 1.0,
                                                 double tolerance = 0.05) {
  if (!(q > 0.0)) throw Error(Errc::InvalidArgument, "q must be positive");
  const int m = static_cast<int>(std::lround(2.0 * k_in / q));
  if (m == 0 || std::abs(k_in - 0.5 * m * q) > tolerance * q)
    throw Error(Errc::NotAGap, "k = " + std::to_string(k_in) + " is not at a band gap");
  return {m, k_in - m * q, (m % 2) != 0};
}

struct HoleEstimate {
  double center = 0.0;
  double width = 0.0;
  double k_lo = 0.0;
  double k_hi = 0.0;
  double min_ratio = 0.0;
};

/// Density searched for the hole: the part beyond x_b, or the whole final
/// state, which also counts slow components still inside the cavity.
enum class HoleSource { Transmitted, Final };

struct HoleOptions {
  HoleSource source = HoleSource::Transmitted;
  double threshold = 0.1;      ///< fraction of the incident density
  double gap_center = 0.5;     ///< in units of q
  double search_halfwidth = 0.25;
  double significance = 1e-3;  ///< ignore k where the incident density is below this fraction of its peak
};

/// Interval near gap_center q where the transmitted density of the initial
/// component drops below threshold times the incident density.
inline HoleEstimate momentum_hole(const ScatterReport& r, double q = 1.0, const HoleOptions& o = {}) {
  const auto& inc = r.initial == Component::Plus ? r.incident_momentum.p_plus
                                                 : r.incident_momentum.p_minus;
  const MomentumDensity& searched =
      o.source == HoleSource::Transmitted ? r.transmitted_momentum : r.final_momentum;
  const auto& out = r.initial == Component::Plus ? searched.p_plus : searched.p_minus;
  const auto& k = r.incident_momentum.k;
  if (k.empty() || searched.k.size() != k.size())
    throw Error(Errc::NoHoleDetected, "report has no momentum data");
  const double peak = *std::max_element(inc.begin(), inc.end());
  const double center = o.gap_center * q;
  auto significant = [&](std::size_t i) { return inc[i] >= o.significance * peak; };
  auto ratio = [&](std::size_t i) { return out[i] / inc[i]; };

  std::size_t best = k.size();
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (std::abs(k[i] - center) > o.search_halfwidth * q || !significant(i)) continue;
    if (best == k.size() || ratio(i) < ratio(best)) best = i;
  }
  if (best == k.size() || ratio(best) >= o.threshold)
    throw Error(Errc::NoHoleDetected, "outgoing density never drops below the threshold");

  // Walk out from the deepest bin and interpolate the threshold crossings.
  auto edge = [&](int dir) {
    std::size_t i = best;
    while (true) {
      const long long next = static_cast<long long>(i) + dir;
      if (next < 0 || next >= static_cast<long long>(k.size())) return k[i];
      const auto n = static_cast<std::size_t>(next);
      if (!significant(n)) return k[i];
      if (ratio(n) >= o.threshold) {
        const double a = ratio(i), b = ratio(n);
        return k[i] + (k[n] - k[i]) * (o.threshold - a) / (b - a);
      }
      i = n;
    }
  };
  HoleEstimate h;
  h.k_lo = edge(-1);
  h.k_hi = edge(+1);
  h.center = 0.5 * (h.k_lo + h.k_hi);
  h.width = h.k_hi - h.k_lo;
  h.min_ratio = ratio(best);
  return h;
}

/// Free momenta of a |-> atom whose energy k^2/2 - Delta/2 falls in the gap
/// between bands lower_band and lower_band + 1 at k = q/2.
inline HoleEstimate predicted_hole(const floquet::ModelParams& p, const floquet::TruncationSpec& t,
                                   int lower_band = 1) {
  const auto e = floquet::band_energies(0.5 * p.q, p, t, lower_band + 1);
  HoleEstimate h;
  h.k_lo = std::sqrt(std::max(0.0, 2.0 * e[static_cast<std::size_t>(lower_band - 1)] + p.delta));
  h.k_hi = std::sqrt(std::max(0.0, 2.0 * e[static_cast<std::size_t>(lower_band)] + p.delta));
  h.center = 0.5 * (h.k_lo + h.k_hi);
  h.width = h.k_hi - h.k_lo;
  return h;
}

/// Bare momentum k_phys in component c written as (quasi-momentum, mu) with
/// the quasi-momentum in (-q, q] and mu of the parity fixed by c.
inline std::pair<double, int> bare_label(double k_phys, Component c, double q) {
  const int parity = c == Component::Plus ? 1 : 0;
  // k_phys = k + mu q with mu = parity (mod 2); pick mu so k lands in (-q, q].
  int mu = static_cast<int>(std::floor((k_phys + q) / (2.0 * q))) * 2 + parity;
  double k = k_phys - mu * q;
  while (k <= -q) {
    mu -= 2;
    k += 2.0 * q;
  }
  while (k > q) {
    mu += 2;
    k -= 2.0 * q;
  }
  return {k, mu};
}

/// Scattering with k0 inside an allowed band, plus the metrics that show the
/// cavity being crossed without lasting change.
inline ScatterReport transparency_run(const ScatterScenario& s, const floquet::TruncationSpec& t = {}) {
  const auto [kq, mu] = bare_label(s.k0, s.initial, s.params.q);
  const int band = floquet::dominant_band(s.params, t, kq, mu);
  const double fid = floquet::fidelity(band, mu, kq, s.params, t);
  if (fid < 0.9)
    throw Error(Errc::InvalidArgument, "k0 is not inside an allowed band (fidelity " +
                                           std::to_string(fid) + ")");
  ScatterReport rep = run_scatter(s);
  TransparencyMetrics m;
  const auto& inv = rep.series.inversion;
  for (double v : inv) {
    const double lower = 0.5 * (1.0 - v);
    m.min_initial_population =
        std::min(m.min_initial_population, s.initial == Component::Minus ? lower : 1.0 - lower);
  }
  m.initial_p_plus = 0.5 * (1.0 + inv.front());
  m.initial_p_minus = 0.5 * (1.0 - inv.front());
  m.final_p_plus = 0.5 * (1.0 + inv.back());
  m.final_p_minus = 0.5 * (1.0 - inv.back());
  m.max_population_change = std::max(std::abs(m.final_p_plus - m.initial_p_plus),
                                     std::abs(m.final_p_minus - m.initial_p_minus));
  const auto& a = rep.incident_momentum;
  const auto& b = rep.final_momentum;
  for (std::size_t i = 0; i < a.k.size(); ++i)
    m.momentum_fidelity +=
        (std::sqrt(a.p_plus[i] * b.p_plus[i]) + std::sqrt(a.p_minus[i] * b.p_minus[i])) * a.dk;
  const double xl = s.profile.x_l;
  m.free_transit_time = 2.0 * xl / std::abs(s.k0);
  const double t_in = detail::crossing_time(rep.series.times, rep.series.mean_x_total, -xl);
  const double t_out = detail::crossing_time(rep.series.times, rep.series.mean_x_total, xl);
  if (std::isfinite(t_in) && std::isfinite(t_out)) {
    m.transit_time = t_out - t_in;
    m.transit_ratio = *m.transit_time / m.free_transit_time;
  }
  // Newton on E_band(k) = incident energy, starting from the bare label.
  const double e_in = floquet::bare_energy(mu, kq, s.params);
  double k = kq;
  for (int it = 0; it < 50; ++it) {
    const auto em = floquet::effective_masses(s.params, t, k, band);
    if (em.v_g == 0.0) break;
    const double step = (em.energy - e_in) / em.v_g;
    k -= step;
    if (std::abs(step) < 1e-12) {
      const double v = floquet::effective_masses(s.params, t, k, band).v_g;
      m.k_inside = k;
      if (v != 0.0) m.predicted_transit_ratio = std::abs(s.k0 / v);
      break;
    }
  }
  rep.transparency = m;
  return rep;
}

enum class SternGerlachMode {
  Atom,    ///< (a|up> + b|down>)|0>: the |up> part couples
  Photon,  ///< |down>(a|0> + b|1>) with a and b relabelled so a is the |1> part
};

struct SectorAmplitudes {
  std::complex<double> a{1.0, 0.0};  ///< coupled sector
  std::complex<double> b{0.0, 0.0};  ///< uncoupled sector
};

struct BranchSummary {
  double probability = 0.0;
  double mean_x = 0.0;
  double mean_k = 0.0;
  double inversion = 0.0;
  double reflected = 0.0;
  double transmitted = 0.0;
};

struct JointOutcome {
  SternGerlachMode mode = SternGerlachMode::Atom;
  BranchSummary coupled;
  BranchSummary free;
  double p_reflected = 0.0;
  double p_transmitted = 0.0;
  double p_flipped = 0.0;  ///< probability the coupled sector left its starting component
  double branch_overlap = 0.0;
  double distinguishability = 0.0;
  std::optional<ReflectionPrediction> predicted;
};

/// Joint state a |coupled run> + b |free run>. The two sectors never mix, so
/// each branch is simulated on its own; the overlap uses normalised branch
/// shapes, so distinguishability does not depend on a and b.
inline JointOutcome compose_sectors(const SectorAmplitudes& amp, const ScatterScenario& s,
                                    const ScatterReport& coupled, SternGerlachMode mode) {
  const double pa = std::norm(amp.a), pb = std::norm(amp.b);
  if (std::abs(pa + pb - 1.0) > 1e-9)
    throw Error(Errc::InvalidArgument, "|a|^2 + |b|^2 must equal 1");
  const Component start = mode == SternGerlachMode::Atom ? Component::Plus : Component::Minus;
  if (coupled.initial != start)
    throw Error(Errc::InvalidArgument, "coupled run starts in the wrong internal state for this mode");
  const auto& g = s.grid;

  const SpinorField free = wavepacket::free_evolve(
      wavepacket::init_bare_gaussian(g, s.k0, s.delta_k, s.x0, Component::Minus), g,
      coupled.final_time);

  JointOutcome o;
  o.mode = mode;
  const auto cm = wavepacket::measure(coupled.final_state, g, {Component::Minus, {}, false});
  o.coupled = {pa, cm.mean_x_total, detail::centroid(coupled.final_momentum), cm.inversion,
               coupled.R_total, coupled.T_total};
  const auto fm = wavepacket::measure(free, g);
  const auto fr = region_populations(free, g, coupled.x_b);
  o.free = {pb, fm.mean_x_total, detail::centroid(wavepacket::momentum_density(free, g)),
            fm.inversion, 0.0, fr.transmitted() + fr.residual};
  o.p_reflected = pa * coupled.R_total;
  o.p_transmitted = pa * coupled.T_total + pb * o.free.transmitted;
  const double stay = start == Component::Plus ? 0.5 * (1.0 + cm.inversion) : 0.5 * (1.0 - cm.inversion);
  o.p_flipped = pa * (1.0 - stay);

  const double na = wavepacket::norm(coupled.final_state, g), nb = wavepacket::norm(free, g);
  double ov = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double ra = std::norm(coupled.final_state.psi_plus[j]) +
                      std::norm(coupled.final_state.psi_minus[j]);
    const double rb = std::norm(free.psi_plus[j]) + std::norm(free.psi_minus[j]);
    ov += std::sqrt(ra * rb);
  }
  o.branch_overlap = ov * g.dx / std::sqrt(na * nb);
  o.distinguishability = 1.0 - o.branch_overlap;
  try {
    o.predicted = reflection_state_map(s.k0, s.params.q);
  } catch (const Error&) {
  }
  return o;
}

}  // namespace cavityband::scattering
