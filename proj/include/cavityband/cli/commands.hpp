#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cavityband/cli/run_config.hpp"
#include "cavityband/error.hpp"
#include "cavityband/floquet/approximations.hpp"
#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/masses.hpp"
#include "cavityband/io/config.hpp"
#include "cavityband/io/csv.hpp"
#include "cavityband/io/svg.hpp"
#include "cavityband/scattering/scatter.hpp"
#include "cavityband/wavepacket/extraction.hpp"
#include "cavityband/wavepacket/propagator.hpp"
#include "cavityband/wavepacket/state.hpp"

namespace cavityband::cli {

inline constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

/// Everything one command produces, held in memory until written.
struct Bundle {
  std::string command;
  json derived = json::object();
  std::map<std::string, std::string> csv;
  std::map<std::string, std::string> svg;
  std::map<std::string, json> extra_json;  ///< e.g. masses.json, report.json
};

inline json summary_of(const RunConfig& c, const Bundle& b) {
  json s;
  s["command"] = b.command;
  s["config"] = io::tree_to_json(c.tree);
  s["derived"] = b.derived;
  s["provenance"] = {{"version", kVersion},
                     {"determinism",
                      "no random numbers are used; identical configs give identical outputs"}};
  return s;
}

/// Writes the bundle under c.output.dir according to output.formats.
inline void write_bundle(const RunConfig& c, const Bundle& b) {
  const std::filesystem::path dir(c.output.dir);
  if (c.output.csv)
    for (const auto& [name, text] : b.csv) io::write_file(dir / name, text);
  if (c.output.svg)
    for (const auto& [name, text] : b.svg) io::write_file(dir / name, text);
  if (c.output.json) {
    for (const auto& [name, j] : b.extra_json) io::write_file(dir / name, j.dump(2) + "\n");
    io::write_file(dir / "summary.json", summary_of(c, b).dump(2) + "\n");
  }
}

namespace detail {

/// Runs f, reporting invariant violations found while preparing a run as
/// configuration errors.
template <class F>
auto preparing(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
}

inline json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::vector<double> linspace(double lo, double hi, int n) { return MapSpec::axis(lo, hi, n); }

inline std::string momentum_csv(const wavepacket::MomentumDensity& d) {
  io::CsvTable t({"k", "p_plus", "p_minus"});
  for (std::size_t i = 0; i < d.k.size(); ++i) t.row({d.k[i], d.p_plus[i], d.p_minus[i]});
  return t.text();
}

inline std::string series_csv(const wavepacket::ObservableSeries& s) {
  io::CsvTable t({"t", "norm", "inversion", "mean_x_total", "mean_x_lower", "var_x_total", "var_x_lower"});
  for (std::size_t i = 0; i < s.size(); ++i)
    t.row({s.times[i], s.norm[i], s.inversion[i], s.mean_x_total[i], s.mean_x_lower[i], s.var_x_total[i],
           s.var_x_lower[i]});
  return t.text();
}

/// Momentum densities restricted to the bins where either exceeds 1e-12 of
/// the peak, so the plotted range follows the packet.
inline io::LinePlot momentum_plot(const std::string& title,
                                  const std::vector<std::pair<std::string, const wavepacket::MomentumDensity*>>& ds) {
  io::LinePlot p{title, "k", "density", {}, std::nullopt};
  double peak = 0.0;
  for (const auto& [name, d] : ds)
    for (std::size_t i = 0; i < d->k.size(); ++i) peak = std::max({peak, d->p_plus[i], d->p_minus[i]});
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [name, d] : ds)
    for (std::size_t i = 0; i < d->k.size(); ++i)
      if (std::max(d->p_plus[i], d->p_minus[i]) > 1e-4 * peak) {
        lo = std::min(lo, d->k[i]);
        hi = std::max(hi, d->k[i]);
      }
  for (const auto& [name, d] : ds) {
    io::PlotSeries plus{name + " |+>", {}, {}, io::Marker::Line};
    io::PlotSeries minus{name + " |->", {}, {}, io::Marker::Line};
    for (std::size_t i = 0; i < d->k.size(); ++i) {
      if (d->k[i] < lo || d->k[i] > hi) continue;
      plus.x.push_back(d->k[i]);
      plus.y.push_back(d->p_plus[i]);
      minus.x.push_back(d->k[i]);
      minus.y.push_back(d->p_minus[i]);
    }
    p.series.push_back(std::move(plus));
    p.series.push_back(std::move(minus));
  }
  return p;
}

/// Momentum snapshots as CSV rows (bins below 1e-10 of the overall peak are
/// skipped) and a lower-state density heatmap over (k, t).
inline void add_snapshots(Bundle& b, const std::vector<wavepacket::MomentumSnapshot>& snaps) {
  double peak = 0.0;
  for (const auto& s : snaps)
    for (std::size_t i = 0; i < s.density.k.size(); ++i)
      peak = std::max({peak, s.density.p_plus[i], s.density.p_minus[i]});
  io::CsvTable t({"t", "k", "p_plus", "p_minus"});
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : snaps)
    for (std::size_t i = 0; i < s.density.k.size(); ++i) {
      if (std::max(s.density.p_plus[i], s.density.p_minus[i]) <= 1e-10 * peak) continue;
      t.row({s.t, s.density.k[i], s.density.p_plus[i], s.density.p_minus[i]});
      if (s.density.p_minus[i] > 1e-3 * peak) {
        lo = std::min(lo, s.density.k[i]);
        hi = std::max(hi, s.density.k[i]);
      }
    }
  b.csv["momentum_snapshots.csv"] = t.text();
  if (!(lo < hi)) return;
  constexpr std::size_t kBins = 200;
  io::Heatmap h{"lower-state momentum density", "k", "t", {}, {}, {}, false};
  for (std::size_t i = 0; i < kBins; ++i) h.x.push_back(lo + (hi - lo) * (static_cast<double>(i) + 0.5) / kBins);
  for (const auto& s : snaps) {
    h.y.push_back(s.t);
    std::vector<double> row(kBins, 0.0);
    for (std::size_t i = 0; i < s.density.k.size(); ++i) {
      const double k = s.density.k[i];
      if (k < lo || k >= hi) continue;
      auto& cell = row[static_cast<std::size_t>((k - lo) / (hi - lo) * kBins)];
      cell = std::max(cell, s.density.p_minus[i]);
    }
    h.z.push_back(std::move(row));
  }
  b.svg["momentum_time.svg"] = io::render(h);
}

inline io::Heatmap map_heatmap(const std::string& title, const std::vector<double>& g0,
                               const std::vector<double>& delta,
                               const std::vector<std::vector<double>>& value, bool log_scale) {
  io::Heatmap h{title, "delta", "g0", delta, g0, value, log_scale};
  return h;
}

/// Rows g0-major, delta-minor: g0,delta,value.
inline std::string map_csv(const std::vector<double>& g0, const std::vector<double>& delta,
                           const std::vector<std::vector<double>>& value) {
  io::CsvTable t({"g0", "delta", "value"});
  for (std::size_t i = 0; i < g0.size(); ++i)
    for (std::size_t j = 0; j < delta.size(); ++j) t.row({g0[i], delta[j], value[i][j]});
  return t.text();
}

template <class F>
std::vector<std::vector<double>> over_map(const RunConfig& c, F&& f) {
  const auto g0 = c.map.g0_values();
  const auto delta = c.map.delta_values();
  std::vector<std::vector<double>> out(g0.size(), std::vector<double>(delta.size()));
  for (std::size_t i = 0; i < g0.size(); ++i)
    for (std::size_t j = 0; j < delta.size(); ++j) {
      floquet::ModelParams p = c.model;
      p.g0 = g0[i];
      p.delta = delta[j];
      out[i][j] = f(p);
    }
  return out;
}

}  // namespace detail

inline Bundle cmd_bands(const RunConfig& c) {
  Bundle b;
  b.command = "bands";
  const auto& s = c.bands;
  const auto ks = detail::linspace(s.k_min, s.k_max, s.k_points);
  const auto table = floquet::dispersion(c.model, c.truncation, ks, s.num_bands);

  io::CsvTable csv({"k", "band", "energy"});
  for (std::size_t i = 0; i < ks.size(); ++i)
    for (int band = 1; band <= s.num_bands; ++band)
      csv.row({ks[i], static_cast<double>(band), table.energies[i][static_cast<std::size_t>(band - 1)]});
  b.csv["bands.csv"] = csv.text();

  io::LinePlot plot{"dispersion", "k", "E", {}, std::nullopt};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int band = 1; band <= s.num_bands; ++band) {
    io::PlotSeries line{"band " + std::to_string(band), ks, {}, io::Marker::Line};
    for (const auto& e : table.energies) {
      line.y.push_back(e[static_cast<std::size_t>(band - 1)]);
      lo = std::min(lo, line.y.back());
      hi = std::max(hi, line.y.back());
    }
    plot.series.push_back(std::move(line));
  }
  // Bare parabolas: crosses for |+>, diamonds for |->.
  const std::size_t every = std::max<std::size_t>(1, ks.size() / 60);
  io::PlotSeries plus{"bare |+>", {}, {}, io::Marker::Cross};
  io::PlotSeries minus{"bare |->", {}, {}, io::Marker::Diamond};
  for (int mu = -s.bare_mu; mu <= s.bare_mu; ++mu)
    for (std::size_t i = 0; i < ks.size(); i += every) {
      auto& target = floquet::is_upper_component(mu) ? plus : minus;
      target.x.push_back(ks[i]);
      target.y.push_back(floquet::bare_energy(mu, ks[i], c.model));
    }
  plot.series.push_back(std::move(plus));
  plot.series.push_back(std::move(minus));
  const double pad = 0.1 * (hi - lo);
  plot.y_range = std::pair{lo - pad, hi + pad};
  b.svg["bands.svg"] = io::render(plot);

  if (!s.coefficient_k.empty()) {
    // c_mu^nu(k) for the bands shown, restricted to |mu| <= bare_mu.
    io::CsvTable coeff({"k", "band", "mu", "coefficient"});
    for (double k : s.coefficient_k) {
      const auto states = floquet::dressed_states(k, c.model, c.truncation, s.num_bands);
      for (const auto& st : states) {
        // Eigenvector signs are arbitrary; make the dominant coefficient positive.
        const auto big = std::max_element(st.coeffs.begin(), st.coeffs.end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); });
        const double sign = *big < 0.0 ? -1.0 : 1.0;
        for (int mu = -s.bare_mu; mu <= s.bare_mu; ++mu)
          if (c.truncation.contains(mu))
            coeff.row({k, static_cast<double>(st.band), static_cast<double>(mu), sign * st.coeff(mu)});
      }
    }
    b.csv["coefficients.csv"] = coeff.text();
  }

  const double half = 0.5 * c.model.q;
  b.derived["energy_band1_k0"] = floquet::band_energy(0.0, 1, c.model, c.truncation);
  if (c.truncation.n_states >= 2) {
    b.derived["gap_half_q"] = floquet::band_gap(c.model, c.truncation, half, 1);
    b.derived["gap_q"] = floquet::band_gap(c.model, c.truncation, c.model.q, 1);
  }
  return b;
}

inline json masses_json(const floquet::EffectiveMasses& m) {
  return {{"k0", m.k0},
          {"band", m.band},
          {"E0", m.e0},
          {"m0", detail::optional_number(m.m0)},
          {"m1", detail::optional_number(m.m1)},
          {"m2", detail::optional_number(m.m2)},
          {"v_g", m.v_g}};
}

inline Bundle cmd_masses(const RunConfig& c) {
  Bundle b;
  b.command = "masses";
  const auto& s = c.masses;
  const auto m = floquet::effective_masses(c.model, c.truncation, s.k0, s.band, s.fd_step);
  b.extra_json["masses.json"] = masses_json(m);
  b.derived = masses_json(m);
  b.derived["energy"] = m.energy;
  if (s.map) {
    const auto g0 = c.map.g0_values();
    const auto delta = c.map.delta_values();
    std::vector<std::vector<double>> inv_m2(g0.size(), std::vector<double>(delta.size()));
    auto v_g = inv_m2;
    for (std::size_t i = 0; i < g0.size(); ++i)
      for (std::size_t j = 0; j < delta.size(); ++j) {
        floquet::ModelParams p = c.model;
        p.g0 = g0[i];
        p.delta = delta[j];
        const auto mm = floquet::effective_masses(p, c.truncation, s.k0, s.band, s.fd_step);
        inv_m2[i][j] = mm.curvature;
        v_g[i][j] = mm.v_g;
      }
    b.csv["masses_inv_m2.csv"] = detail::map_csv(g0, delta, inv_m2);
    b.csv["masses_v_g.csv"] = detail::map_csv(g0, delta, v_g);
    b.svg["masses_inv_m2.svg"] = io::render(detail::map_heatmap("1/m2", g0, delta, inv_m2, false));
    b.svg["masses_v_g.svg"] = io::render(detail::map_heatmap("v_g", g0, delta, v_g, false));
  }
  return b;
}

inline Bundle cmd_error_map(const RunConfig& c) {
  Bundle b;
  b.command = "error-map";
  const auto g0 = c.map.g0_values();
  const auto delta = c.map.delta_values();
  const auto err = detail::over_map(c, [&](const floquet::ModelParams& p) {
    return floquet::truncation_error(p, c.map.k, c.map.n_small, c.truncation.n_states);
  });
  b.csv["error_map.csv"] = detail::map_csv(g0, delta, err);
  b.svg["error_map.svg"] = io::render(detail::map_heatmap(
      "truncation error n=" + std::to_string(c.map.n_small), g0, delta, err, true));
  double worst = 0.0;
  for (const auto& row : err)
    for (double v : row) worst = std::max(worst, v);
  b.derived["max_error"] = worst;
  return b;
}

inline Bundle cmd_fidelity_map(const RunConfig& c) {
  Bundle b;
  b.command = "fidelity-map";
  const auto g0 = c.map.g0_values();
  const auto delta = c.map.delta_values();
  const auto fid = detail::over_map(c, [&](const floquet::ModelParams& p) {
    return floquet::fidelity(c.map.band, c.map.mu, c.map.k, p, c.truncation);
  });
  b.csv["fidelity_map.csv"] = detail::map_csv(g0, delta, fid);
  b.svg["fidelity_map.svg"] = io::render(detail::map_heatmap(
      "F band " + std::to_string(c.map.band) + " mu " + std::to_string(c.map.mu), g0, delta, fid, false));
  double lowest = 1.0;
  for (const auto& row : fid)
    for (double v : row) lowest = std::min(lowest, v);
  b.derived["min_fidelity"] = lowest;
  return b;
}

inline wavepacket::SpinorField initial_state(const RunConfig& c) {
  const auto& s = c.state;
  return detail::preparing([&] {
    if (s.dressed)
      return wavepacket::init_dressed_gaussian(c.grid, c.model, c.truncation, s.band, s.k0, s.delta_k, s.x0);
    return wavepacket::init_bare_gaussian(c.grid, s.k0, s.delta_k, s.x0, s.component);
  });
}

/// Band and quasi-momentum the packet is expected to follow.
inline std::pair<double, int> reference_band(const RunConfig& c) {
  if (c.state.dressed) return {c.state.k0, c.state.band};
  const auto [kq, mu] = scattering::bare_label(c.state.k0, c.state.component, c.model.q);
  return {kq, floquet::dominant_band(c.model, c.truncation, kq, mu)};
}

inline Bundle cmd_propagate(const RunConfig& c) {
  Bundle b;
  b.command = "propagate";
  wavepacket::SpinorField state = initial_state(c);
  const auto& g = c.grid;
  const auto& opt = c.evolve;

  wavepacket::Propagator prop(g, c.profile, c.model, opt.dt, opt.splitting);
  wavepacket::ObservableSeries series;
  wavepacket::ObservableRecorder rec(g, opt, wavepacket::norm(state, g));
  const std::size_t bins = c.output.svg ? std::min(c.density_bins, g.n_points) : 0;
  std::vector<std::vector<double>> density;
  auto sample = [&] {
    rec.sample(state, series);
    if (bins == 0) return;
    std::vector<double> row(bins, 0.0);
    for (std::size_t j = 0; j < g.n_points; ++j)
      row[j * bins / g.n_points] += std::norm(state.psi_plus[j]) + std::norm(state.psi_minus[j]);
    density.push_back(std::move(row));
  };
  sample();
  std::size_t done = 0;
  while (done < opt.n_steps) {
    const std::size_t chunk = std::min(opt.sample_stride, opt.n_steps - done);
    prop.advance(state, chunk);
    done += chunk;
    sample();
  }

  b.csv["series.csv"] = detail::series_csv(series);
  const auto final_momentum = wavepacket::momentum_density(state, g);
  b.csv["momentum.csv"] = detail::momentum_csv(final_momentum);
  if (!series.momentum.empty()) detail::add_snapshots(b, series.momentum);

  auto& d = b.derived;
  d["final_time"] = state.time;
  d["final_norm"] = series.norm.back();
  d["final_inversion"] = series.inversion.back();
  d["final_mean_x_total"] = series.mean_x_total.back();
  d["final_var_x_total"] = series.var_x_total.back();
  d["boundary_warning"] = series.boundary_warning;
  const auto [kq, band] = reference_band(c);
  const auto floq = floquet::effective_masses(c.model, c.truncation, kq, band);
  d["floquet_band"] = band;
  d["floquet_k"] = kq;
  d["v_g_floquet"] = floq.v_g;
  d["m2_floquet"] = detail::optional_number(floq.m2);
  const auto& x = c.extract;
  if (x.velocity) d["v_g"] = wavepacket::extract_group_velocity(series, x.window, x.source, x.method);
  if (x.m2) {
    const auto fit = wavepacket::extract_m2(series, c.state.delta_k, x.fit_teff, x.window, x.source);
    d["m2"] = fit.m2;
    d["t_eff"] = fit.t_eff;
  }
  if (x.rabi) d["rabi_period"] = wavepacket::rabi_period(series);

  io::LinePlot inv{"inversion", "t", "<sigma3>", {{"inversion", series.times, series.inversion}},
                   std::pair{-1.0, 1.0}};
  b.svg["inversion.svg"] = io::render(inv);
  if (bins > 0) {
    std::vector<double> xc(bins);
    for (std::size_t i = 0; i < bins; ++i)
      xc[i] = g.x_min + (static_cast<double>(i) + 0.5) * g.length() / static_cast<double>(bins);
    const std::size_t every = (density.size() + 255) / 256;
    std::vector<double> ts;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < density.size(); i += every) {
      ts.push_back(series.times[i]);
      rows.push_back(std::move(density[i]));
    }
    io::Heatmap h{"probability density", "x", "t", xc, ts, rows, false};
    b.svg["spacetime.svg"] = io::render(h);
  }
  b.svg["momentum.svg"] = io::render(detail::momentum_plot("final momentum", {{"final", &final_momentum}}));
  return b;
}

inline scattering::ScatterScenario scatter_scenario(const RunConfig& c) {
  return detail::preparing([&] {
    scattering::ScatterScenario s;
    s.params = c.model;
    s.profile = c.profile;
    s.k0 = c.state.k0;
    s.delta_k = c.state.delta_k;
    s.x0 = c.state.x0;
    s.initial = c.state.component;
    s.grid = c.grid;
    s.dt = c.evolve.dt;
    s.t_max = c.scatter.t_max;
    s.sample_stride = c.evolve.sample_stride;
    s.momentum_stride = c.evolve.momentum_stride;
    s.residual_tolerance = c.scatter.residual_tolerance;
    s.region_margin = c.scatter.region_margin;
    if (c.state.dressed) throw Error(Errc::ConfigError, "scatter launches a bare packet; set state.kind = \"bare\"");
    if (c.profile.ramp) throw Error(Errc::ConfigError, "scatter does not use a coupling ramp");
    if (c.scatter.sectors) {
      const auto need = *c.scatter.sectors == scattering::SternGerlachMode::Atom ? wavepacket::Component::Plus
                                                                                : wavepacket::Component::Minus;
      if (c.state.component != need)
        throw Error(Errc::ConfigError, "scatter.sectors needs state.component matching the coupled sector");
    }
    s.validate();
    if (c.scatter.transparency) {
      const auto [kq, mu] = scattering::bare_label(s.k0, s.initial, s.params.q);
      const int band = floquet::dominant_band(s.params, c.truncation, kq, mu);
      if (floquet::fidelity(band, mu, kq, s.params, c.truncation) < 0.9)
        throw Error(Errc::ConfigError, "transparency needs k0 inside an allowed band");
    }
    return s;
  });
}

inline json report_json(const scattering::ScatterReport& r) {
  using detail::number_or_null;
  json j = {{"R_total", r.R_total},
            {"T_total", r.T_total},
            {"residual", r.residual},
            {"R_plus", r.R_plus},
            {"R_minus", r.R_minus},
            {"T_plus", r.T_plus},
            {"T_minus", r.T_minus},
            {"initial_inversion", r.initial_inversion},
            {"final_inversion", r.final_inversion},
            {"reflected_inversion", number_or_null(r.reflected_inversion)},
            {"transmitted_inversion", number_or_null(r.transmitted_inversion)},
            {"reflected_momentum_centroid", number_or_null(r.reflected_momentum_centroid)},
            {"transmitted_momentum_centroid", number_or_null(r.transmitted_momentum_centroid)},
            {"final_time", r.final_time},
            {"cleared", r.cleared},
            {"warning", r.warning},
            {"initial_component", r.initial == wavepacket::Component::Plus ? "plus" : "minus"},
            {"x_b", r.x_b}};
  if (r.transparency) {
    const auto& m = *r.transparency;
    j["transparency"] = {{"min_initial_population", m.min_initial_population},
                         {"initial_p_plus", m.initial_p_plus},
                         {"initial_p_minus", m.initial_p_minus},
                         {"final_p_plus", m.final_p_plus},
                         {"final_p_minus", m.final_p_minus},
                         {"max_population_change", m.max_population_change},
                         {"momentum_fidelity", m.momentum_fidelity},
                         {"transit_time", detail::optional_number(m.transit_time)},
                         {"free_transit_time", m.free_transit_time},
                         {"transit_ratio", detail::optional_number(m.transit_ratio)},
                         {"k_inside", detail::optional_number(m.k_inside)},
                         {"predicted_transit_ratio", detail::optional_number(m.predicted_transit_ratio)}};
  }
  return j;
}

inline Bundle cmd_scatter(const RunConfig& c) {
  Bundle b;
  b.command = "scatter";
  const auto s = scatter_scenario(c);
  const auto r = c.scatter.transparency ? scattering::transparency_run(s, c.truncation)
                                        : scattering::run_scatter(s);
  json report = report_json(r);
  try {
    const auto pred = scattering::reflection_state_map(s.k0, s.params.q);
    report["predicted_reflection"] = {{"gap_order", pred.gap_order}, {"k_out", pred.k_out}, {"flip", pred.flip}};
  } catch (const Error&) {
  }
  if (c.scatter.hole) {
    scattering::HoleOptions ho;
    ho.source = c.scatter.hole_source;
    ho.threshold = c.scatter.hole_threshold;
    const auto pred = scattering::predicted_hole(s.params, c.truncation);
    json hole = {{"predicted_center", pred.center}, {"predicted_width", pred.width}};
    try {
      const auto h = scattering::momentum_hole(r, s.params.q, ho);
      hole.update({{"center", h.center}, {"width", h.width}, {"k_lo", h.k_lo}, {"k_hi", h.k_hi},
                   {"min_ratio", h.min_ratio}});
    } catch (const Error& e) {
      if (e.code() != Errc::NoHoleDetected) throw;
      hole["error"] = e.what();
    }
    report["hole"] = hole;
  }
  if (c.scatter.sectors) {
    const auto o = scattering::compose_sectors({c.scatter.sector_a, c.scatter.sector_b}, s, r, *c.scatter.sectors);
    report["sectors"] = {{"mode", *c.scatter.sectors == scattering::SternGerlachMode::Atom ? "atom" : "photon"},
                         {"p_reflected", o.p_reflected},
                         {"p_transmitted", o.p_transmitted},
                         {"p_flipped", o.p_flipped},
                         {"branch_overlap", o.branch_overlap},
                         {"distinguishability", o.distinguishability}};
  }
  b.extra_json["report.json"] = report;
  for (const auto& key : {"R_total", "T_total", "residual", "final_inversion", "reflected_momentum_centroid",
                          "transmitted_momentum_centroid", "final_time", "cleared"})
    b.derived[key] = report[key];
  if (report.contains("hole") && report["hole"].contains("center")) {
    b.derived["hole_center"] = report["hole"]["center"];
    b.derived["hole_width"] = report["hole"]["width"];
  }
  if (r.transparency) {
    b.derived["min_initial_population"] = r.transparency->min_initial_population;
    b.derived["max_population_change"] = r.transparency->max_population_change;
  }

  b.csv["series.csv"] = detail::series_csv(r.series);
  if (!r.series.momentum.empty()) detail::add_snapshots(b, r.series.momentum);
  b.csv["momentum.csv"] = detail::momentum_csv(r.final_momentum);
  b.csv["momentum_incident.csv"] = detail::momentum_csv(r.incident_momentum);
  b.csv["momentum_reflected.csv"] = detail::momentum_csv(r.reflected_momentum);
  b.csv["momentum_transmitted.csv"] = detail::momentum_csv(r.transmitted_momentum);
  io::CsvTable regions({"t", "reflected", "transmitted", "residual"});
  for (std::size_t i = 0; i < r.region_times.size(); ++i)
    regions.row({r.region_times[i], r.region_reflected[i], r.region_transmitted[i], r.region_residual[i]});
  b.csv["regions.csv"] = regions.text();

  b.svg["inversion.svg"] = io::render(io::LinePlot{
      "inversion", "t", "<sigma3>", {{"inversion", r.series.times, r.series.inversion}}, std::pair{-1.0, 1.0}});
  b.svg["regions.svg"] = io::render(io::LinePlot{"regions",
                                                 "t",
                                                 "probability",
                                                 {{"reflected", r.region_times, r.region_reflected},
                                                  {"transmitted", r.region_times, r.region_transmitted},
                                                  {"residual", r.region_times, r.region_residual}},
                                                 std::pair{0.0, 1.0}});
  b.svg["momentum.svg"] = io::render(detail::momentum_plot(
      "momentum", {{"incident", &r.incident_momentum}, {"final", &r.final_momentum}}));
  return b;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"bands",     "masses",  "error-map", "fidelity-map",
                                                 "propagate", "scatter", "sweep"};
  return names;
}

inline Bundle run_command(const std::string& name, const RunConfig& c) {
  if (name == "bands") return cmd_bands(c);
  if (name == "masses") return cmd_masses(c);
  if (name == "error-map") return cmd_error_map(c);
  if (name == "fidelity-map") return cmd_fidelity_map(c);
  if (name == "propagate") return cmd_propagate(c);
  if (name == "scatter") return cmd_scatter(c);
  throw Error(Errc::ConfigError, "unknown command '" + name + "'");
}

struct SweepCell {
  std::size_t index = 0;
  std::vector<Value> values;
  std::string dir;
  bool ok = false;
  std::string error;
  json derived;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string index_csv;
  std::size_t succeeded() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.ok; }));
  }
};

namespace detail {

inline std::string cell_text(const Value& v) {
  if (auto* d = std::get_if<double>(&v)) return io::format_number(*d);
  if (auto* i = std::get_if<std::int64_t>(&v)) return io::format_number(*i);
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return "";
}

inline std::string sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
  return s;
}

inline std::string cell_name(std::size_t i) {
  std::string n = std::to_string(i);
  return "cell_" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

}  // namespace detail

/// Runs sweep.command over the Cartesian product of the sweep axes with a
/// pool of sweep.workers threads. Each cell is an independent run written to
/// its own directory; index.csv is written once after all cells finish, in
/// cell order, so it does not depend on the worker count.
inline SweepResult cmd_sweep(const RunConfig& c) {
  const auto& sw = c.sweep;
  if (sw.axes.empty()) throw Error(Errc::ConfigError, "sweep needs at least one sweep.vary.<section>.<key> list");
  std::size_t total = 1;
  for (const auto& a : sw.axes) total *= a.values.size();

  SweepResult res;
  res.cells.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    auto& cell = res.cells[i];
    cell.index = i;
    cell.dir = detail::cell_name(i);
    std::size_t rem = i;
    cell.values.resize(sw.axes.size());
    for (std::size_t a = sw.axes.size(); a-- > 0;) {
      cell.values[a] = sw.axes[a].values[rem % sw.axes[a].values.size()];
      rem /= sw.axes[a].values.size();
    }
  }

  ConfigTree base = c.tree;
  base.erase("sweep");
  const std::filesystem::path root(c.output.dir);
  auto run_cell = [&](SweepCell& cell) {
    try {
      ConfigTree t = base;
      for (std::size_t a = 0; a < sw.axes.size(); ++a) t[sw.axes[a].section][sw.axes[a].key] = cell.values[a];
      t["output"]["dir"] = (root / cell.dir).string();
      const RunConfig rc = make_run_config(t);
      const Bundle b = run_command(sw.command, rc);
      write_bundle(rc, b);
      cell.derived = b.derived;
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) run_cell(res.cells[i]);
  };
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(sw.workers), total);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::set<std::string> metrics;
  for (const auto& cell : res.cells)
    for (const auto& [k, v] : cell.derived.items())
      if (v.is_number() || v.is_boolean() || v.is_null()) metrics.insert(k);
  std::vector<std::string> header = {"cell"};
  for (const auto& a : sw.axes) header.push_back(a.name());
  header.insert(header.end(), {"status", "path", "error"});
  header.insert(header.end(), metrics.begin(), metrics.end());
  io::CsvTable index(header);
  for (const auto& cell : res.cells) {
    std::vector<std::string> row = {std::to_string(cell.index)};
    for (const auto& v : cell.values) row.push_back(detail::cell_text(v));
    row.push_back(cell.ok ? "ok" : "failed");
    row.push_back(cell.dir);
    row.push_back(detail::sanitize(cell.error));
    for (const auto& m : metrics) {
      if (!cell.derived.contains(m) || cell.derived[m].is_null()) {
        row.emplace_back();
        continue;
      }
      const auto& v = cell.derived[m];
      if (v.is_boolean())
        row.push_back(v.get<bool>() ? "true" : "false");
      else if (v.is_number_integer())
        row.push_back(io::format_number(v.get<std::int64_t>()));
      else
        row.push_back(io::format_number(v.get<double>()));
    }
    index.row_text(row);
  }
  res.index_csv = index.text();
  io::write_file(root / "index.csv", res.index_csv);
  return res;
}

/// Exit status for a failure: 2 configuration, 4 integrity, 3 anything else.
inline int exit_code(Errc e) {
  if (e == Errc::ConfigError) return 2;
  if (e == Errc::NormDrift) return 4;
  return 3;
}

}  // namespace cavityband::cli
