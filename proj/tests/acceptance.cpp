// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Preset-driven criteria load the shipped presets from CAVITYBAND_PRESETS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cavityband/cli/commands.hpp"
#include "cavityband/cli/run_config.hpp"
#include "cavityband/floquet/approximations.hpp"
#include "cavityband/floquet/bands.hpp"
#include "cavityband/floquet/masses.hpp"
#include "cavityband/io/config.hpp"
#include "cavityband/wavepacket/propagator.hpp"

using namespace cavityband;
using floquet::ModelParams;
using floquet::TruncationSpec;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [x]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

io::ConfigTree preset(const std::string& name) {
  return io::load_config_file((std::filesystem::path(CAVITYBAND_PRESETS) / (name + ".toml")).string());
}

// A sweep preset reduced to one direct run.
io::ConfigTree cell_of(io::ConfigTree t, double g0, const std::string& kind) {
  t.erase("sweep");
  t["model"]["g0"] = g0;
  t["state"]["kind"] = kind;
  return t;
}

json derived_of(const std::string& command, const io::ConfigTree& t) {
  return cli::run_command(command, cli::make_run_config(t)).derived;
}

double dbl(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw Error(Errc::InvalidArgument, std::string("missing ") + key);
  return j[key].get<double>();
}

const TruncationSpec kRef{201};

void gap_law(Outcome& o) {
  for (double g0 : {0.005, 0.01, 0.02}) {
    const double gap = floquet::band_gap({g0, 0.0}, kRef, 0.5, 1);
    o.check(std::abs(gap - 2.0 * g0) <= 5.0 * g0 * g0, "g0=" + num(g0) + " gap=" + num(gap));
  }
}

void fidelity_point(Outcome& o) {
  const double f = floquet::fidelity(1, 0, 0.25, {0.01, 0.0}, kRef);
  o.check(std::abs(f - 0.998) <= 0.001, "F=" + num(f));
}

void perturbative(Outcome& o) {
  const ModelParams p{0.05, 0.0};
  const double e = floquet::perturbative_energy_band1(0.0, p);
  const double exact = floquet::band_energy(0.0, 1, p, kRef);
  // Term by term at q = 1: -4 g^2 + 28 g^4.
  const double g2 = p.g0 * p.g0;
  const double by_hand = -4.0 * g2 + 28.0 * g2 * g2;
  o.check(std::abs(e - (-0.0098250)) < 5e-8 && std::abs(e - by_hand) < 1e-15, "E_pert=" + num(e));
  o.check(std::abs(e - exact) <= 5e-5, "|E_pert-E_201|=" + num(std::abs(e - exact)));
}

void continued_fraction(Outcome& o) {
  const ModelParams p{0.01, 2.0};
  const double bare = floquet::bare_energy(0, 0.0, p);
  const auto cf = floquet::continued_fraction_energy(0.0, p, 0, 2, bare, 50);
  const double diag = floquet::band_energy(0.0, 1, p, TruncationSpec{5});
  o.check(cf.converged && cf.iterations <= 50, "iterations=" + std::to_string(cf.iterations));
  o.check(std::abs(cf.energy - diag) <= 1e-8, "|E_cf-E_5|=" + num(std::abs(cf.energy - diag)));
}

void rabi(Outcome& o) {
  auto t = preset("fig5");
  const auto d = derived_of("propagate", t);
  const double g0 = std::get<double>(t.at("model").at("g0"));
  const double period = dbl(d, "rabi_period");
  o.check(std::abs(period / (kPi / g0) - 1.0) <= 0.05, "T_R=" + num(period) + " pi/g0=" + num(kPi / g0));
}

void group_velocity(Outcome& o) {
  const auto base = preset("fig9");
  for (double g0 : {0.01, 0.03, 0.05, 0.1})
    for (const char* kind : {"dressed", "bare"}) {
      const auto d = derived_of("propagate", cell_of(base, g0, kind));
      const double v = dbl(d, "v_g");
      const double ref = dbl(d, "v_g_floquet");
      o.check(std::abs(v / ref - 1.0) <= 0.02,
              std::string(kind) + " g0=" + num(g0) + " v=" + num(v) + " ref=" + num(ref));
    }
}

void curvature_mass(Outcome& o) {
  const auto base = preset("fig10");
  for (double g0 : {0.02, 0.05}) {
    for (const char* kind : {"dressed", "bare"}) {
      const auto d = derived_of("propagate", cell_of(base, g0, kind));
      const double m2 = dbl(d, "m2");
      const double ref = dbl(d, "m2_floquet");
      o.check(std::abs(m2 / ref - 1.0) <= 0.05,
              std::string(kind) + " g0=" + num(g0) + " m2=" + num(m2) + " ref=" + num(ref));
    }
    // The next term of the small-g0 expansion of E''(0) is +888 g0^4.
    const auto fm = floquet::effective_masses({g0, 0.0}, kRef, 0.0, 1);
    const double lowest = 1.0 - 32.0 * g0 * g0;
    const double dev = std::abs(1.0 / *fm.m2 - lowest);
    o.check(dev <= 1000.0 * std::pow(g0, 4), "g0=" + num(g0) + " |1/m2-(1-32g0^2)|=" + num(dev));
  }
}

double reflection_T = -1.0;

void reflection(Outcome& o) {
  const auto d = derived_of("scatter", preset("fig11"));
  const double r = dbl(d, "R_total");
  const double inv = dbl(d, "final_inversion");
  const double c = dbl(d, "reflected_momentum_centroid");
  reflection_T = dbl(d, "T_total");
  o.check(r > 0.95, "R=" + num(r));
  o.check(inv > 0.9, "inversion=" + num(inv));
  o.check(std::abs(c + 0.5) <= 0.02, "centroid=" + num(c));
}

void hole(Outcome& o) {
  if (reflection_T < 0.0) reflection_T = dbl(derived_of("scatter", preset("fig11")), "T_total");
  const auto d = derived_of("scatter", preset("fig14"));
  const double t = dbl(d, "T_total");
  o.check(t > 3.0 * reflection_T, "T=" + num(t) + " T_fig11=" + num(reflection_T));
  if (!d.contains("hole_center")) {
    o.check(false, "no hole detected");
    return;
  }
  const double c = dbl(d, "hole_center");
  o.check(std::abs(c - 0.5) <= 0.02, "hole center=" + num(c) + " width=" + num(dbl(d, "hole_width")));
}

void transparency(Outcome& o) {
  const auto d = derived_of("scatter", preset("fig15"));
  const double pop = dbl(d, "min_initial_population");
  const double change = dbl(d, "max_population_change");
  o.check(pop >= 0.99, "min population=" + num(pop));
  o.check(change < 1e-2, "population change=" + num(change));
}

void property_suites(Outcome& o) {
  // Spectrum parity and 2q periodicity, detuned so no accidental symmetry helps.
  const ModelParams p{0.2, 0.3};
  double parity = 0.0, period = 0.0;
  for (double k : {0.0, 0.13, 0.37, 0.5, 0.81}) {
    const auto a = floquet::band_energies(k, p, kRef, 4);
    const auto b = floquet::band_energies(-k, p, kRef, 4);
    const auto c = floquet::band_energies(k + 2.0, p, kRef, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
      parity = std::max(parity, std::abs(a[i] - b[i]));
      period = std::max(period, std::abs(a[i] - c[i]));
    }
  }
  o.check(parity <= 1e-10, "parity " + num(parity));
  o.check(period <= 1e-10, "2q period " + num(period));

  // Orthonormality and sum rule over the full 201-state basis.
  const auto eig = numerics::eig_sym_tridiag(floquet::build_matrix(0.3, p, kRef));
  const std::size_t n = eig.values.size();
  double ortho = 0.0, sum_rule = 0.0;
  for (std::size_t a = 0; a < n; a += 10)
    for (std::size_t b = 0; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r) dot += eig.vectors(r, a) * eig.vectors(r, b);
      ortho = std::max(ortho, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  for (int nu = 1; nu <= 3; ++nu) {
    double s = 0.0;
    for (int mu = kRef.mu_min(); mu <= kRef.mu_max(); ++mu) s += floquet::fidelity(nu, mu, 0.3, p, kRef);
    sum_rule = std::max(sum_rule, std::abs(s - 1.0));
  }
  o.check(ortho <= 1e-10, "orthonormality " + num(ortho));
  o.check(sum_rule <= 1e-10, "sum F " + num(sum_rule));

  // Norm drift over 1e5 coupled steps.
  {
    using namespace wavepacket;
    const auto g = make_grid(1024, -256.0, 256.0);
    auto s = init_bare_gaussian(g, 0.5, 0.05, 0.0, Component::Minus);
    Propagator prop(g, CouplingProfile::uniform(), {0.1, 0.3}, 0.05);
    const double n0 = norm(s, g);
    double drift = 0.0;
    for (int chunk = 0; chunk < 10; ++chunk) {
      prop.advance(s, 10000);
      drift = std::max(drift, std::abs(norm(s, g) / n0 - 1.0));
    }
    o.check(drift < 1e-10, "norm drift " + num(drift));
  }

  // Strang order under dt halving against a dt/8 reference.
  {
    using namespace wavepacket;
    const auto g = make_grid(512, -128.0, 128.0);
    const auto s0 = init_bare_gaussian(g, 0.5, 0.1, 0.0, Component::Minus);
    auto terminal = [&](double dt) {
      SpinorField st = s0;
      Propagator prop(g, CouplingProfile::uniform(), {0.1, 0.3}, dt);
      prop.advance(st, static_cast<std::size_t>(std::llround(20.0 / dt)));
      return st;
    };
    auto dist = [&](const SpinorField& a, const SpinorField& b) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.n_points; ++j)
        acc += std::norm(a.psi_plus[j] - b.psi_plus[j]) + std::norm(a.psi_minus[j] - b.psi_minus[j]);
      return std::sqrt(acc * g.dx);
    };
    const auto ref = terminal(0.025);
    const double factor = dist(terminal(0.2), ref) / dist(terminal(0.1), ref);
    o.check(std::abs(factor - 4.0) <= 0.5, "Strang factor " + num(factor));
  }

  // Free particle: <x> = x0 + k0 t, var = 1/(4 dk^2) + dk^2 t^2.
  {
    using namespace wavepacket;
    const auto g = make_grid(4096, -1024.0, 1024.0);
    const double dk = 0.01;
    const auto s = init_bare_gaussian(g, 0.25, dk, -300.0, Component::Minus);
    EvolveOptions opt;
    opt.dt = 0.5;
    opt.n_steps = 2000;
    opt.sample_stride = 100;
    const auto r = evolve(s, g, CouplingProfile::uniform(), {0.0, 0.0}, opt);
    double mean_err = 0.0, var_err = 0.0;
    for (std::size_t i = 0; i < r.series.size(); ++i) {
      const double t = r.series.times[i];
      mean_err = std::max(mean_err, std::abs(r.series.mean_x_total[i] - (-300.0 + 0.25 * t)));
      const double var = 1.0 / (4.0 * dk * dk) + dk * dk * t * t;
      var_err = std::max(var_err, std::abs(r.series.var_x_total[i] / var - 1.0));
    }
    o.check(mean_err < 1e-6 && var_err < 1e-6, "free <x> err " + num(mean_err) + " var rel err " + num(var_err));
  }

  // Sweep determinism under parallelism.
  {
    std::string index[2];
    for (int r = 0; r < 2; ++r) {
      const auto root = std::filesystem::temp_directory_path() / ("cavityband_accept_sweep" + std::to_string(r));
      std::filesystem::remove_all(root);
      io::ConfigTree t;
      t["bands"]["k_points"] = std::int64_t{41};
      t["output"]["dir"] = root.string();
      t["sweep"]["command"] = std::string("bands");
      t["sweep"]["workers"] = std::int64_t{r == 0 ? 1 : 8};
      t["sweep"]["vary.model.g0"] = std::vector<double>{0.0, 0.05, 0.1, 0.5};
      t["sweep"]["vary.model.delta"] = std::vector<double>{-1.0, 0.0, 1.0};
      index[r] = cli::cmd_sweep(cli::make_run_config(t)).index_csv;
      std::filesystem::remove_all(root);
    }
    o.check(!index[0].empty() && index[0] == index[1], "sweep index identical for 1 and 8 workers");
  }
}

void flat_band(Outcome& o) {
  auto width = [](double g0) {
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= 200; ++i) {
      const double e = floquet::band_energy(-1.0 + 0.01 * i, 1, {g0, 0.0}, kRef);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    return hi - lo;
  };
  const double w_strong = width(1.0);
  const double w_weak = width(0.125);
  o.check(w_strong <= 0.05 * w_weak, "width ratio " + num(w_strong / w_weak));
  double previous = 1e300;
  bool decreasing = true;
  std::string list;
  for (double g0 : {0.1, 0.3, 0.5, 1.0}) {
    const double v = std::abs(floquet::effective_masses({g0, 0.0}, kRef, 0.25, 1).v_g);
    decreasing = decreasing && v < previous;
    previous = v;
    list += (list.empty() ? "" : ",") + num(v);
  }
  o.check(decreasing, "|v_g(q/4)| = " + list);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"gap law", gap_law},
      {"fidelity point", fidelity_point},
      {"perturbative vs exact", perturbative},
      {"continued fraction vs diagonalisation", continued_fraction},
      {"Rabi period at the gap (fig5)", rabi},
      {"group velocity consistency (fig9)", group_velocity},
      {"curvature mass (fig10)", curvature_mass},
      {"reflection (fig11)", reflection},
      {"wide-packet hole (fig14)", hole},
      {"transparency (fig15)", transparency},
      {"property suites", property_suites},
      {"flat-band saturation", flat_band},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("threw ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
