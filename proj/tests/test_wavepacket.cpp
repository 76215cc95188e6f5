#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cavityband/floquet/masses.hpp"
#include "cavityband/wavepacket/extraction.hpp"
#include "cavityband/wavepacket/propagator.hpp"

using namespace cavityband;
using namespace cavityband::wavepacket;
using floquet::ModelParams;
using floquet::TruncationSpec;

namespace {

constexpr double kPi = std::numbers::pi;

double l2_distance(const SpinorField& a, const SpinorField& b, const SpatialGrid& g) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j)
    acc += std::norm(a.psi_plus[j] - b.psi_plus[j]) + std::norm(a.psi_minus[j] - b.psi_minus[j]);
  return std::sqrt(acc * g.dx);
}

EvolveOptions run(double dt, std::size_t steps, std::size_t stride = 20) {
  EvolveOptions o;
  o.dt = dt;
  o.n_steps = steps;
  o.sample_stride = stride;
  return o;
}

}  // namespace

TEST(Grid, Examples) {
  const auto g = make_grid(8, 0.0, 8.0);
  EXPECT_DOUBLE_EQ(g.dx, 1.0);
  EXPECT_DOUBLE_EQ(g.dk, kPi / 4.0);
  EXPECT_DOUBLE_EQ(g.k(3), 3.0 * kPi / 4.0);
  EXPECT_DOUBLE_EQ(g.k(4), -kPi);
  EXPECT_DOUBLE_EQ(g.k(7), -kPi / 4.0);
  const auto s = make_grid(1 << 13, -4000.0, 4000.0);
  EXPECT_NEAR(s.dx, 0.9766, 1e-4);
  EXPECT_NEAR(s.dx * static_cast<double>(s.n_points), s.length(), 1e-12);
  // Band-4 work needs |k| up to 4q resolved.
  EXPECT_GE(make_grid(1 << 13, -2000.0, 2000.0).k_nyquist(), 4.0);
  EXPECT_THROW(make_grid(12, 0.0, 1.0), Error);
  EXPECT_THROW(make_grid(8, 1.0, 1.0), Error);
  try {
    make_grid(8, 2.0, 1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadExtent);
  }
}

TEST(PotentialStep, Examples) {
  const Mat2 id = potential_step_matrix(0.3, 0.0, 0.0);
  EXPECT_EQ(id[0], Complex(1.0, 0.0));
  EXPECT_EQ(id[1], Complex(0.0, 0.0));
  EXPECT_EQ(id[3], Complex(1.0, 0.0));
  const Mat2 flip = potential_step_matrix(1.0, kPi / 2.0, 0.0);
  EXPECT_NEAR(std::abs(flip[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(flip[1] - Complex(0.0, -1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(flip[2] - Complex(0.0, -1.0)), 0.0, 1e-15);
}

TEST(PotentialStep, UnitaryEverywhere) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double dt = std::abs(u(rng)) * (i % 3 == 0 ? 1e-10 : 1.0);
    const Mat2 m = potential_step_matrix(dt, u(rng), u(rng));
    const Complex a = std::norm(m[0]) + std::norm(m[1]);
    const Complex b = std::norm(m[2]) + std::norm(m[3]);
    const Complex c = m[0] * std::conj(m[2]) + m[1] * std::conj(m[3]);
    EXPECT_NEAR(std::abs(a - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(b - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(c), 0.0, 1e-14);
  }
}

TEST(PotentialStep, SeriesBranchMatchesClosedForm) {
  const Mat2 a = potential_step_matrix(1e-9, 0.7, 0.4);
  const Mat2 b = potential_step_matrix(1e-7, 0.7, 0.4);
  // Both are 1 - i dt H to leading order.
  EXPECT_NEAR(a[1].imag() / 1e-9, -0.7, 1e-9);
  EXPECT_NEAR(b[1].imag() / 1e-7, -0.7, 1e-9);
  EXPECT_NEAR(a[0].imag() / 1e-9, -0.2, 1e-9);
}

TEST(Coupling, EnvelopeAndRamp) {
  const auto c = CouplingProfile::enveloped(1500.0, 50.0);
  EXPECT_NEAR(c.envelope(0.0), 1.0, 1e-12);
  EXPECT_NEAR(c.envelope(1500.0), 0.5, 1e-12);
  for (double x = -4000.0; x <= 4000.0; x += 37.0) {
    EXPECT_GE(c.envelope(x), 0.0);
    EXPECT_LE(c.envelope(x), 1.0);
  }
  EXPECT_LT(c.envelope(1500.0 + 5.0 * 50.0), 1e-4);
  Ramp r{RampShape::SinSquared, 10.0};
  EXPECT_EQ(r.factor(0.0), 0.0);
  EXPECT_NEAR(r.factor(5.0), 0.5, 1e-15);
  EXPECT_EQ(r.factor(10.0), 1.0);
  EXPECT_EQ(Ramp{}.factor(0.0), 1.0);
  const ModelParams p{0.05, 0.0, 1.0, 4};
  EXPECT_NEAR(local_coupling(CouplingProfile::uniform(), p, 0.0, 0.0), 0.2, 1e-15);
}

TEST(BareGaussian, NormAndMomentum) {
  const auto g = make_grid(2048, -1024.0, 1024.0);
  const auto s = init_bare_gaussian(g, 0.25, 0.01, 0.0, Component::Minus);
  EXPECT_NEAR(norm(s, g), 1.0, 1e-12);
  const auto d = momentum_density(s, g);
  double n = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < d.k.size(); ++i) {
    n += d.p_minus[i] * d.dk;
    m1 += d.k[i] * d.p_minus[i] * d.dk;
    EXPECT_EQ(d.p_plus[i], 0.0);
  }
  m1 /= n;
  for (std::size_t i = 0; i < d.k.size(); ++i) m2 += (d.k[i] - m1) * (d.k[i] - m1) * d.p_minus[i] * d.dk;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_NEAR(m1, 0.25, 1e-6);
  EXPECT_NEAR(m2 / n, 1e-4, 1e-8);
  const auto m = measure(s, g);
  EXPECT_NEAR(m.var_x_total, 2500.0, 1e-6);
}

TEST(BareGaussian, TooWide) {
  const auto g = make_grid(256, -100.0, 100.0);
  try {
    init_bare_gaussian(g, 0.0, 0.01, 0.0, Component::Minus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PacketTooWide);
  }
  EXPECT_THROW(init_bare_gaussian(g, 0.0, 0.1, 95.0, Component::Minus), Error);
  EXPECT_THROW(init_bare_gaussian(g, 0.0, -0.1, 0.0, Component::Minus), Error);
}

TEST(Measure, Examples) {
  const auto g = make_grid(1024, -256.0, 256.0);
  const auto s = init_bare_gaussian(g, 0.0, 0.1, 0.0, Component::Minus);
  const auto m = measure(s, g);
  EXPECT_NEAR(m.mean_x_total, 0.0, g.dx / 100.0);
  EXPECT_DOUBLE_EQ(m.mean_x_cond, m.mean_x_total);
  EXPECT_DOUBLE_EQ(m.var_x_cond, m.var_x_total);
  EXPECT_DOUBLE_EQ(m.inversion, -1.0);
  EXPECT_NEAR(m.excess_kurtosis_total, 0.0, 1e-10);
  MeasureOptions plus;
  plus.conditional = Component::Plus;
  EXPECT_THROW(measure(s, g, plus), Error);
}

TEST(Measure, ExclusionWindows) {
  const auto g = make_grid(2048, -512.0, 512.0);
  auto s = init_bare_gaussian(g, 0.0, 0.1, 0.0, Component::Minus);
  const auto side = init_bare_gaussian(g, 0.0, 0.1, 300.0, Component::Plus);
  for (std::size_t j = 0; j < g.n_points; ++j) s.psi_plus[j] = 0.2 * side.psi_plus[j];
  normalize(s, g);
  const auto raw = measure(s, g);
  EXPECT_GT(raw.var_x_total, 1000.0);
  MeasureOptions cut;
  cut.exclusion = {WindowKind::OutsideCut, 150.0};
  const auto m = measure(s, g, cut);
  EXPECT_NEAR(m.var_x_total, 25.0, 1e-6);
  EXPECT_NEAR(m.mean_x_total, 0.0, 1e-9);
  cut.exclusion = {WindowKind::PeakWindow, 100.0};
  cut.conditional = Component::Plus;
  const auto w = measure(s, g, cut);
  EXPECT_NEAR(w.mean_x_cond, 300.0, 1e-9);
  EXPECT_NEAR(w.var_x_total, 25.0, 1e-6);
  cut.exclusion = {WindowKind::OutsideCut, 1.0};
  cut.conditional = Component::Plus;
  EXPECT_THROW(measure(s, g, cut), Error);
}

TEST(FreeEvolution, MomentumDensityPreserved) {
  const auto g = make_grid(2048, -512.0, 1536.0);
  const auto s = init_bare_gaussian(g, 0.25, 0.02, 0.0, Component::Minus);
  const auto r = evolve(s, g, CouplingProfile::uniform(), ModelParams{0.0, 0.0}, run(0.1, 2000, 100));
  const auto a = momentum_density(s, g);
  const auto b = momentum_density(r.state, g);
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < a.k.size(); ++i) {
    worst = std::max(worst, std::abs(a.p_minus[i] - b.p_minus[i]));
    peak = std::max(peak, a.p_minus[i]);
  }
  EXPECT_LT(worst, 1e-12 * peak);
}

TEST(FreeEvolution, MeanAndSpreading) {
  const auto g = make_grid(4096, -1024.0, 1024.0);
  const double dk = 0.01;
  const auto s = init_bare_gaussian(g, 0.25, dk, -300.0, Component::Minus);
  const auto r = evolve(s, g, CouplingProfile::uniform(), ModelParams{0.0, 0.0}, run(0.5, 2000, 100));
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const double t = r.series.times[i];
    EXPECT_NEAR(r.series.mean_x_total[i], -300.0 + 0.25 * t, 1e-8 * std::max(t, 1.0));
    const double var = 1.0 / (4.0 * dk * dk) + dk * dk * t * t;
    EXPECT_NEAR(r.series.var_x_total[i] / var, 1.0, 1e-6);
    EXPECT_NEAR(r.series.norm[i], 1.0, 1e-12);
  }
  EXPECT_NEAR(extract_group_velocity(r.series), 0.25, 1e-6);
  EXPECT_NEAR(extract_group_velocity(r.series, {}, PositionSource::Lower, VelocityMethod::TwoPoint),
              0.25, 1e-6);
  const auto fit = extract_m2(r.series, dk, false);
  EXPECT_NEAR(fit.m2, 1.0, 1e-4);
  const auto fit2 = extract_m2(r.series, dk, true);
  EXPECT_NEAR(fit2.m2, 1.0, 1e-4);
  EXPECT_NEAR(fit2.t_eff, 0.0, 1e-3);
}

TEST(Evolution, NormConservedWithCoupling) {
  const auto g = make_grid(1 << 13, -2048.0, 2048.0);
  const auto s = init_bare_gaussian(g, 0.5, 0.05, 0.0, Component::Minus);
  const auto r =
      evolve(s, g, CouplingProfile::uniform(), ModelParams{0.1, 0.3}, run(0.05, 10000, 1000));
  for (double n : r.series.norm) EXPECT_NEAR(n, 1.0, 1e-11);
  EXPECT_FALSE(r.series.boundary_warning);
}

TEST(Evolution, StrangIsSecondOrderLieFirst) {
  const auto g = make_grid(512, -128.0, 128.0);
  const ModelParams p{0.1, 0.3};
  const auto s = init_bare_gaussian(g, 0.5, 0.1, 0.0, Component::Minus);
  auto terminal = [&](double dt, Splitting sp) {
    SpinorField st = s;
    Propagator prop(g, CouplingProfile::uniform(), p, dt, sp);
    prop.advance(st, static_cast<std::size_t>(std::llround(20.0 / dt)));
    return st;
  };
  for (auto sp : {Splitting::Strang, Splitting::Lie}) {
    const double dt = 0.2;
    const auto ref = terminal(dt / 8.0, sp);
    const double e1 = l2_distance(terminal(dt, sp), ref, g);
    const double e2 = l2_distance(terminal(dt / 2.0, sp), ref, g);
    // Relative to a dt/8 reference the error ratio is (1 - 8^-p) / (2^-p - 8^-p).
    const double ratio = e1 / e2;
    if (sp == Splitting::Strang)
      EXPECT_NEAR(ratio, 4.0, 0.5);
    else
      EXPECT_NEAR(ratio, 2.0, 0.4);
  }
}

TEST(Evolution, GaugeUniformVersusWideEnvelope) {
  const auto g = make_grid(2048, -512.0, 512.0);
  const ModelParams p{0.05, 0.0};
  const auto s = init_bare_gaussian(g, 0.5, 0.05, 0.0, Component::Minus);
  const auto a = evolve(s, g, CouplingProfile::uniform(), p, run(0.05, 2000, 100));
  const auto b = evolve(s, g, CouplingProfile::enveloped(1e4, 50.0), p, run(0.05, 2000, 100));
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    EXPECT_NEAR(a.series.inversion[i], b.series.inversion[i], 1e-6);
    EXPECT_NEAR(a.series.mean_x_total[i], b.series.mean_x_total[i], 1e-6);
    EXPECT_NEAR(a.series.var_x_total[i], b.series.var_x_total[i], 1e-6);
  }
}

TEST(Evolution, DressedPlaneWaveEvolvesByPhase) {
  // Commensurate grid, so k + mu q lands on momentum bins for every mu.
  const auto g = make_grid(256, -16.0 * kPi, 16.0 * kPi);
  const ModelParams p{0.05, 0.2};
  const TruncationSpec t{21};
  const std::size_t m = 5;  // k = 5 / 16
  const double k = g.k(m);
  const auto st = floquet::dressed_states(k, p, t, 1)[0];
  SpinorField s;
  s.psi_plus.assign(g.n_points, Complex{});
  s.psi_minus.assign(g.n_points, Complex{});
  for (int row = 0; row < t.n_states; ++row) {
    const int mu = t.mu_at(row);
    for (std::size_t j = 0; j < g.n_points; ++j)
      s.component(component_of(mu))[j] += st.coeffs[static_cast<std::size_t>(row)] *
                                          std::polar(1.0, (k + mu * p.q) * g.x(j));
  }
  normalize(s, g);
  const auto before = band_decomposition(s, g, p, t, 2);
  Propagator prop(g, CouplingProfile::uniform(), p, 0.01);
  prop.advance(s, 5000);
  const auto after = band_decomposition(s, g, p, t, 2);
  const auto i = static_cast<std::size_t>(
      std::find_if(before.k.begin(), before.k.end(), [&](double v) { return std::abs(v - k) < 1e-12; }) -
      before.k.begin());
  ASSERT_LT(i, before.k.size());
  EXPECT_NEAR(std::abs(after.amplitude[0][i]), std::abs(before.amplitude[0][i]),
              1e-8 * std::abs(before.amplitude[0][i]));
  const Complex rot = after.amplitude[0][i] / before.amplitude[0][i];
  EXPECT_NEAR(std::remainder(std::arg(rot) + st.energy * 50.0, 2.0 * kPi), 0.0, 1e-4);
}

TEST(DressedGaussian, ZeroCouplingMatchesBare) {
  const auto g = make_grid(2048, -1024.0, 1024.0);
  const auto d = init_dressed_gaussian(g, ModelParams{0.0, 0.0}, {21}, 1, 0.25, 0.01, 10.0);
  const auto b = init_bare_gaussian(g, 0.25, 0.01, 10.0, Component::Minus);
  EXPECT_LT(l2_distance(d, b, g), 1e-10);
}

TEST(DressedGaussian, OverlapWithBareIsFidelity) {
  const auto g = make_grid(4096, -1024.0, 1024.0);
  const ModelParams p{0.01, 0.0};
  const auto d = init_dressed_gaussian(g, p, {41}, 1, 0.25, 0.01);
  const auto b = init_bare_gaussian(g, 0.25, 0.01, 0.0, Component::Minus);
  EXPECT_NEAR(norm(d, g), 1.0, 1e-12);
  EXPECT_NEAR(std::norm(overlap(b, d, g)), 0.998, 0.001);
  const auto pops = band_populations(d, g, p, {41}, 3);
  EXPECT_NEAR(pops[0], 1.0, 1e-8);
  EXPECT_NEAR(pops[1], 0.0, 1e-8);
}

TEST(DressedGaussian, ZoneBoundaryOverlap) {
  const auto g = make_grid(2048, -256.0, 256.0);
  try {
    init_dressed_gaussian(g, ModelParams{0.05, 0.0}, {21}, 1, 0.9, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZoneBoundaryOverlap);
  }
}

TEST(DressedGaussian, StaysGaussianWhileBareSplits) {
  const auto g = make_grid(4096, -1024.0, 1024.0);
  const ModelParams p{0.001, 0.0};
  const auto d0 = init_dressed_gaussian(g, p, {21}, 1, 0.25, 0.01);
  const auto b0 = init_bare_gaussian(g, 0.25, 0.01, 0.0, Component::Minus);
  const auto dr = evolve(d0, g, CouplingProfile::uniform(), p, run(0.1, 10000, 500));
  for (double k : dr.series.excess_kurtosis) EXPECT_LT(std::abs(k), 0.1);
  const auto br = evolve(b0, g, CouplingProfile::uniform(), p, run(0.1, 10000, 10000));
  const auto md = momentum_density(br.state, g);
  auto peak_near = [&](const std::vector<double>& dens, double k0) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < md.k.size(); ++i)
      if (std::abs(md.k[i] - k0) < 0.05 && dens[i] > dens[best]) best = i;
    return md.k[best];
  };
  EXPECT_NEAR(peak_near(md.p_minus, 0.25), 0.25, 3.0 * g.dk);
  EXPECT_NEAR(peak_near(md.p_plus, -0.75), -0.75, 3.0 * g.dk);
  EXPECT_NEAR(peak_near(md.p_plus, 1.25), 1.25, 3.0 * g.dk);
  double side = 0.0;
  for (std::size_t i = 0; i < md.k.size(); ++i) side += md.p_plus[i] * md.dk;
  EXPECT_GT(side, 1e-7);
}

TEST(Rabi, PeriodAtTheGap) {
  const auto g = make_grid(1024, -256.0, 256.0);
  for (double g0 : {0.05, 0.1}) {
    const ModelParams p{g0, 0.0};
    const auto s = init_bare_gaussian(g, 0.5, 0.5 / std::sqrt(500.0), 0.0, Component::Minus);
    const auto r = evolve(s, g, CouplingProfile::uniform(), p, run(0.05, 6000, 4));
    EXPECT_NEAR(rabi_period(r.series), kPi / g0, 0.05 * kPi / g0);
  }
}

TEST(Rabi, Errors) {
  const std::vector<double> t{0, 1, 2, 3, 4, 5};
  const std::vector<double> flat(6, -1.0);
  try {
    rabi_period(t, flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewOscillations);
  }
  std::vector<double> tt, sine;
  for (int i = 0; i <= 400; ++i) {
    tt.push_back(0.1 * i);
    sine.push_back(std::cos(2.0 * kPi * 0.1 * i / 7.0));
  }
  EXPECT_NEAR(rabi_period(tt, sine), 7.0, 1e-3);
}

TEST(Extraction, Errors) {
  ObservableSeries s;
  Moments m;
  m.var_x_total = 3.0;
  for (int i = 0; i < 5; ++i) s.record(i, m);
  try {
    extract_m2(s, 0.1, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FitDegenerate);
  }
  EXPECT_THROW(extract_group_velocity(s, {10.0, 20.0}), Error);
}

TEST(Extraction, GroupVelocityMatchesFloquet) {
  const auto g = make_grid(2048, -1024.0, 1024.0);
  const ModelParams p{0.05, 0.0};
  const double vg = floquet::effective_masses(p, {201}, 0.25, 1).v_g;
  const auto d = init_dressed_gaussian(g, p, {41}, 1, 0.25, 0.01, -300.0);
  const auto rd = evolve(d, g, CouplingProfile::uniform(), p, run(0.1, 10000, 200));
  EXPECT_NEAR(extract_group_velocity(rd.series) / vg, 1.0, 0.02);

  EvolveOptions opt = run(0.1, 10000, 200);
  opt.measure.exclusion = {WindowKind::PeakWindow, 250.0};
  const auto b = init_bare_gaussian(g, 0.25, 0.01, -300.0, Component::Minus);
  const auto rb = evolve(b, g, CouplingProfile::uniform(), p, opt);
  EXPECT_NEAR(extract_group_velocity(rb.series, {}, PositionSource::Lower) / vg, 1.0, 0.02);
}

TEST(Extraction, CurvatureMassFromDressedPacket) {
  const auto g = make_grid(2048, -800.0, 800.0);
  const ModelParams p{0.05, 0.0};
  const double m2 = *floquet::effective_masses(p, {201}, 0.0, 1).m2;
  const double dk = 0.5 / std::sqrt(1500.0);
  const auto d = init_dressed_gaussian(g, p, {41}, 1, 0.0, dk);
  const auto r = evolve(d, g, CouplingProfile::uniform(), p, run(0.1, 10000, 200));
  EXPECT_NEAR(extract_m2(r.series, dk, false).m2 / m2, 1.0, 0.05);
}

TEST(AdiabaticRamp, ZeroCouplingLeavesStateAlone) {
  const auto g = make_grid(512, -64.0 * kPi, 64.0 * kPi);
  const auto s = init_bare_gaussian(g, 0.25, 0.05, 0.0, Component::Minus);
  CouplingProfile c;
  c.ramp = Ramp{RampShape::SinSquared, 100.0};
  const auto r = prepare_by_adiabatic_ramp(s, g, c, ModelParams{0.0, 0.0}, {21}, 0.5);
  EXPECT_EQ(l2_distance(r.state, s, g), 0.0);
}

TEST(AdiabaticRamp, SlowRampLoadsBandOne) {
  const auto g = make_grid(1024, -64.0 * kPi, 64.0 * kPi);
  const double g0 = 0.01;
  const auto s = init_bare_gaussian(g, 0.25, 0.05, 0.0, Component::Minus);
  CouplingProfile c;
  c.ramp = Ramp{RampShape::SinSquared, 200.0 * kPi / g0};
  const auto r = prepare_by_adiabatic_ramp(s, g, c, ModelParams{g0, 0.0}, {21}, 0.5);
  EXPECT_GE(r.band_populations[0], 0.99);
  EXPECT_NEAR(r.state.time, c.ramp->t_ramp, 0.5);
}

TEST(AdiabaticRamp, SuddenSwitchAtGapSplitsEvenly) {
  const auto g = make_grid(2048, -256.0 * kPi, 256.0 * kPi);
  const auto s = init_bare_gaussian(g, 0.5, 0.01, 0.0, Component::Minus);
  CouplingProfile c;
  c.ramp = Ramp{RampShape::SinSquared, 0.0};
  const auto r = prepare_by_adiabatic_ramp(s, g, c, ModelParams{0.05, 0.0}, {21}, 0.5);
  EXPECT_NEAR(r.band_populations[0], 0.5, 0.02);
  EXPECT_NEAR(r.band_populations[1], 0.5, 0.02);
}
