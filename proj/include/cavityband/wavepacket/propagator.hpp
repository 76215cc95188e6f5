#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/numerics/fft.hpp"
#include "cavityband/wavepacket/coupling.hpp"
#include "cavityband/wavepacket/grid.hpp"
#include "cavityband/wavepacket/state.hpp"

namespace cavityband::wavepacket {

enum class Splitting {
  Strang,  ///< K/2 V K/2, second order
  Lie,     ///< V then K, first order
};

/// Split-operator stepper for H = k^2/2 + V(x, t) on a periodic grid.
///
/// Strang steps are fused: n steps cost n + 1 kinetic transforms per
/// component because adjacent half kinetic steps are merged.
class Propagator {
 public:
  Propagator(const SpatialGrid& grid, const CouplingProfile& profile, const floquet::ModelParams& p,
             double dt, Splitting splitting = Splitting::Strang)
      : grid_(grid), profile_(profile), p_(p), dt_(dt), splitting_(splitting), plan_(grid.n_points) {
    p.validate();
    profile.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::InvalidArgument, "dt must be positive");
    const std::size_t n = grid.n_points;
    const double inv_n = 1.0 / static_cast<double>(n);
    kin_full_.resize(n);
    kin_half_.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double e = 0.5 * grid.k(m) * grid.k(m);
      kin_full_[m] = std::polar(inv_n, -e * dt);
      kin_half_[m] = std::polar(inv_n, -0.5 * e * dt);
    }
    base_coupling_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double x = grid.x(j);
      base_coupling_[j] = 2.0 * p.g_eff() * std::cos(p.q * x) * profile.envelope(x);
    }
    if (!profile.time_dependent()) fill_potential(1.0);
  }

  double dt() const { return dt_; }
  const SpatialGrid& grid() const { return grid_; }

  /// Advances s by n_steps, updating s.time.
  void advance(SpinorField& s, std::size_t n_steps) {
    if (n_steps == 0) return;
    if (s.psi_plus.size() != grid_.n_points || s.psi_minus.size() != grid_.n_points)
      throw Error(Errc::InvalidArgument, "state does not match the grid");
    if (splitting_ == Splitting::Lie) {
      for (std::size_t i = 0; i < n_steps; ++i) {
        potential(s, s.time + 0.5 * dt_);
        kinetic(s, kin_full_);
        s.time += dt_;
      }
      return;
    }
    kinetic(s, kin_half_);
    for (std::size_t i = 0; i < n_steps; ++i) {
      potential(s, s.time + 0.5 * dt_);
      s.time += dt_;
      kinetic(s, i + 1 < n_steps ? kin_full_ : kin_half_);
    }
  }

 private:
  void fill_potential(double ramp) {
    const std::size_t n = grid_.n_points;
    u_diag_plus_.resize(n);
    u_diag_minus_.resize(n);
    u_off_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Mat2 u = potential_step_matrix(dt_, base_coupling_[j] * ramp, p_.delta);
      u_diag_plus_[j] = u[0];
      u_off_[j] = u[1];
      u_diag_minus_[j] = u[3];
    }
    current_ramp_ = ramp;
  }

  void potential(SpinorField& s, double t_mid) {
    if (profile_.time_dependent()) {
      const double r = profile_.ramp_factor(t_mid);
      if (r != current_ramp_) fill_potential(r);
    }
    Complex* a = s.psi_plus.data();
    Complex* b = s.psi_minus.data();
    for (std::size_t j = 0; j < grid_.n_points; ++j) {
      const Complex pa = a[j], pb = b[j];
      a[j] = u_diag_plus_[j] * pa + u_off_[j] * pb;
      b[j] = u_off_[j] * pa + u_diag_minus_[j] * pb;
    }
  }

  void kinetic(SpinorField& s, const std::vector<Complex>& phase) {
    for (ComplexArray* c : {&s.psi_plus, &s.psi_minus}) {
      plan_.forward(*c);
      Complex* v = c->data();
      for (std::size_t m = 0; m < grid_.n_points; ++m) v[m] *= phase[m];
      plan_.inverse_unscaled(*c);
    }
  }

  SpatialGrid grid_;
  CouplingProfile profile_;
  floquet::ModelParams p_;
  double dt_;
  Splitting splitting_;
  numerics::FftPlan plan_;
  std::vector<Complex> kin_full_, kin_half_;
  std::vector<double> base_coupling_;
  std::vector<Complex> u_diag_plus_, u_diag_minus_, u_off_;
  double current_ramp_ = -1.0;
};

struct MomentumSnapshot {
  double t = 0.0;
  MomentumDensity density;
};

/// Observables sampled along a run. *_lower fields are conditional on the
/// component selected in MeasureOptions (|-> by default).
struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> norm;
  std::vector<double> inversion;
  std::vector<double> mean_x_total;
  std::vector<double> mean_x_lower;
  std::vector<double> var_x_total;
  std::vector<double> var_x_lower;
  std::vector<double> excess_kurtosis;
  std::vector<MomentumSnapshot> momentum;
  bool boundary_warning = false;

  std::size_t size() const { return times.size(); }

  void record(double t, const Moments& m) {
    times.push_back(t);
    norm.push_back(m.norm);
    inversion.push_back(m.inversion);
    mean_x_total.push_back(m.mean_x_total);
    mean_x_lower.push_back(m.mean_x_cond);
    var_x_total.push_back(m.var_x_total);
    var_x_lower.push_back(m.var_x_cond);
    excess_kurtosis.push_back(m.excess_kurtosis_total);
  }
};

struct EvolveOptions {
  double dt = 0.05;
  std::size_t n_steps = 0;
  std::size_t sample_stride = 20;
  Splitting splitting = Splitting::Strang;
  MeasureOptions measure;
  std::size_t momentum_stride = 0;  ///< every this many samples; 0 disables
  double norm_tolerance = 1e-8;
};

struct EvolveResult {
  SpinorField state;
  ObservableSeries series;
};

/// Probability in the two cells adjacent to the periodic seam.
inline double boundary_probability(const SpinorField& s, const SpatialGrid& g) {
  const std::size_t last = g.n_points - 1;
  return (std::norm(s.psi_plus[0]) + std::norm(s.psi_minus[0]) + std::norm(s.psi_plus[last]) +
          std::norm(s.psi_minus[last])) *
         g.dx;
}

class ObservableRecorder {
 public:
  ObservableRecorder(const SpatialGrid& g, const EvolveOptions& opt, double reference_norm)
      : grid_(g), opt_(opt), reference_(reference_norm) {}

  void sample(const SpinorField& s, ObservableSeries& out) {
    const Moments m = measure(s, grid_, opt_.measure);
    if (std::abs(m.norm / reference_ - 1.0) > opt_.norm_tolerance)
      throw Error(Errc::NormDrift, "norm drifted to " + std::to_string(m.norm) + " at t = " +
                                       std::to_string(s.time));
    out.record(s.time, m);
    if (boundary_probability(s, grid_) > 1e-8) out.boundary_warning = true;
    if (opt_.momentum_stride > 0 && count_ % opt_.momentum_stride == 0)
      out.momentum.push_back({s.time, momentum_density(s, grid_)});
    ++count_;
  }

 private:
  const SpatialGrid& grid_;
  const EvolveOptions& opt_;
  double reference_;
  std::size_t count_ = 0;
};

/// Evolves for opt.n_steps, sampling at the start, every sample_stride steps
/// and at the end.
inline EvolveResult evolve(SpinorField state, const SpatialGrid& grid, const CouplingProfile& profile,
                           const floquet::ModelParams& p, const EvolveOptions& opt) {
  if (opt.sample_stride == 0) throw Error(Errc::InvalidArgument, "sample_stride must be >= 1");
  Propagator prop(grid, profile, p, opt.dt, opt.splitting);
  EvolveResult r;
  ObservableRecorder rec(grid, opt, norm(state, grid));
  rec.sample(state, r.series);
  std::size_t done = 0;
  while (done < opt.n_steps) {
    const std::size_t chunk = std::min(opt.sample_stride, opt.n_steps - done);
    prop.advance(state, chunk);
    done += chunk;
    rec.sample(state, r.series);
  }
  r.state = std::move(state);
  return r;
}

/// Exact free evolution over duration t (kinetic phase only).
inline SpinorField free_evolve(SpinorField s, const SpatialGrid& g, double t) {
  const numerics::FftPlan plan(g.n_points);
  for (ComplexArray* c : {&s.psi_plus, &s.psi_minus}) {
    plan.forward(*c);
    for (std::size_t m = 0; m < g.n_points; ++m) (*c)[m] *= std::polar(1.0, -0.5 * g.k(m) * g.k(m) * t);
    plan.inverse(*c);
  }
  s.time += t;
  return s;
}

struct RampResult {
  SpinorField state;
  double t_ramp = 0.0;
  std::vector<double> band_populations;  ///< bands 1..4 at the final coupling
};

/// Switches the coupling on along profile.ramp, starting from the state's
/// current time. With g0 = 0 there is nothing to prepare and the state is
/// returned as is.
inline RampResult prepare_by_adiabatic_ramp(SpinorField state, const SpatialGrid& grid,
                                            const CouplingProfile& profile,
                                            const floquet::ModelParams& p,
                                            const floquet::TruncationSpec& t, double dt,
                                            int num_bands = 4) {
  if (profile.kind != CouplingKind::Uniform)
    throw Error(Errc::InvalidArgument, "adiabatic preparation needs uniform coupling");
  RampResult r;
  r.t_ramp = profile.ramp ? profile.ramp->t_ramp : 0.0;
  if (p.g_eff() > 0.0 && r.t_ramp > 0.0) {
    const double t0 = state.time;
    state.time = 0.0;
    Propagator prop(grid, profile, p, dt);
    prop.advance(state, static_cast<std::size_t>(std::ceil(r.t_ramp / dt)));
    state.time += t0;
  }
  r.band_populations = band_populations(state, grid, p, t, num_bands);
  r.state = std::move(state);
  return r;
}

}  // namespace cavityband::wavepacket
