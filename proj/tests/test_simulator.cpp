#include <gtest/gtest.h>

#include <random>

#include "bswrm/pipeline.hpp"
#include "bswrm/simulator.hpp"
#include "support.hpp"

using namespace bswrm;

namespace {

std::vector<BeamGeometry> one_beam(double az_deg = 0.0) {
  const auto s = system_preset("bs");
  return sector_beams({0, 0, 0}, deg_to_rad(az_deg), 0.0, 1, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain);
}

double mean_power(const IqCube& cube, std::size_t b, std::size_t m) {
  double p = 0.0;
  for (std::size_t k = 0; k < cube.n_pulses(); ++k) p += std::norm(cdouble(cube.at(b, k, m)));
  return p / static_cast<double>(cube.n_pulses());
}

}  // namespace

TEST(Seeds, StreamsAreDistinctAndStable) {
  EXPECT_EQ(stream_seed(1, 2, 3, 4), stream_seed(1, 2, 3, 4));
  EXPECT_NE(stream_seed(1, 2, 3, 4), stream_seed(1, 2, 4, 3));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
}

TEST(RainField, VariogramMatchesGaussianCovariance) {
  const std::size_t n = 64;
  const double spacing = 100.0, L = 500.0;
  const std::vector<std::size_t> lags{1, 2, 3, 5, 8};
  std::vector<double> gamma(lags.size(), 0.0);
  double var = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    const auto g = correlated_gaussian_field(static_cast<std::uint64_t>(s + 1), n, n, spacing, L);
    for (double v : g.data()) var += v * v;
    for (std::size_t i = 0; i < lags.size(); ++i) {
      double acc = 0.0;
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
          const double d = g(y, (x + lags[i]) % n) - g(y, x);
          acc += 0.5 * d * d;
        }
      gamma[i] += acc / static_cast<double>(n * n);
    }
  }
  var /= static_cast<double>(seeds * n * n);
  EXPECT_NEAR(var, 1.0, 0.1);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double h = static_cast<double>(lags[i]) * spacing;
    const double expected = 1.0 - std::exp(-h * h / (L * L));
    EXPECT_NEAR(gamma[i] / seeds, expected, 0.2 * expected) << "lag " << lags[i];
  }
  EXPECT_THROW(correlated_gaussian_field(1, n, n, spacing, 50.0), std::invalid_argument);
}

TEST(RainField, GeneratedStatisticsAndAdvection) {
  RainFieldConfig cfg;
  cfg.nx = cfg.ny = 64;
  cfg.x0 = cfg.y0 = 0.0;
  cfg.advection_u = 5.0;
  cfg.advection_v = -2.0;
  const auto f = generate_rain_field(cfg);
  double mean = 0.0;
  for (double z : f.z.data()) mean += linear_to_db(z);
  mean /= static_cast<double>(f.z.size());
  EXPECT_NEAR(mean, cfg.mean_dbz, 2.0);
  for (std::size_t i = 0; i < f.z.size(); ++i)
    EXPECT_NEAR(f.k_e.data()[i], cfg.ke_coeff * std::pow(f.z.data()[i], cfg.ke_exponent), 1e-15);
  // Grid nodes are reproduced; advection moves the pattern with the wind.
  EXPECT_DOUBLE_EQ(f.sample(300.0, 500.0).z, f.z(5, 3));
  EXPECT_NEAR(f.sample(300.0 + 5.0 * 40, 500.0 - 2.0 * 40, 40.0).z, f.z(5, 3), 1e-9 * f.z(5, 3));
  // Periodic wrap.
  EXPECT_NEAR(f.sample(300.0 + 6400.0, 500.0).z, f.z(5, 3), 1e-9 * f.z(5, 3));
}

TEST(RainField, NonPeriodicExtentIsEnforced) {
  RainField f = uniform_rain_field(30.0, 1.0);
  f.periodic = false;
  f.x0 = f.y0 = 0.0;
  f.spacing = 1000.0;
  EXPECT_TRUE(f.covers(500, 500));
  EXPECT_THROW(f.sample(2000.0, 0.0), std::invalid_argument);
  const auto beams = one_beam();
  EXPECT_THROW(synthesize_iq(f, {}, system_preset("bs"), test::golden_frame(), beams, 40), std::invalid_argument);
}

TEST(Synthesis, DeterministicAcrossThreadCounts) {
  const auto field = uniform_rain_field(30.0, 1.0, 1.0, 2.0);
  const auto s = system_preset("bs");
  const auto beams = sector_beams({0, 0, 0}, 0.0, deg_to_rad(4.24), 5, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain);
  ClutterScene clutter;
  clutter.gates.push_back({1, 20, 1e-9, 0.01});
  SynthesisOptions o1, o4;
  o1.seed = o4.seed = 99;
  o1.threads = 1;
  o4.threads = 4;
  const auto a = synthesize_iq(field, clutter, s, test::golden_frame(), beams, 40, o1);
  const auto b = synthesize_iq(field, clutter, s, test::golden_frame(), beams, 40, o4);
  EXPECT_EQ(a.cube.samples(), b.cube.samples());
  o4.seed = 100;
  const auto c = synthesize_iq(field, clutter, s, test::golden_frame(), beams, 40, o4);
  EXPECT_NE(a.cube.samples(), c.cube.samples());
}

TEST(Synthesis, NoiseOnlyPowerMatchesReceiverNoise) {
  SynthesisOptions opt;
  opt.rain = false;
  const auto frame = test::golden_frame();
  const auto syn = synthesize_iq(uniform_rain_field(0, 0), {}, system_preset("bs"), frame, one_beam(), 150, opt);
  double p = 0.0;
  for (std::size_t m = 0; m < 150; ++m) p += mean_power(syn.cube, 0, m);
  p /= 150.0;
  const auto spec = align_spec_to_frame(system_preset("bs"), frame);
  const double expected = spec.noise_power() * spec.noise_figure;
  EXPECT_NEAR(linear_to_db(p / expected), 0.0, 0.5);
  EXPECT_DOUBLE_EQ(syn.truth.gates(0, 100).noise_power, expected);
}

TEST(Synthesis, ZeroJitterClutterIsPhaseStable) {
  SynthesisOptions opt;
  opt.rain = false;
  ClutterScene clutter;
  clutter.gates.push_back({0, 30, 1e-8, 0.0});
  const auto syn = synthesize_iq(uniform_rain_field(0, 0), clutter, system_preset("bs"), test::golden_frame(), one_beam(),
                                 40, opt);
  const auto map = cv_map(syn.cube.beam_series(0), SubsampleParams{}, WindowKind::blackman, test::golden_frame().slow_time());
  EXPECT_LT(map.sigma(30, 32), 1e-4);
  EXPECT_DOUBLE_EQ(syn.truth.gates(0, 30).clutter_power, 1e-8);
}

TEST(Synthesis, PointClutterFollowsRadarEquation) {
  SynthesisOptions opt;
  opt.rain = false;
  const auto frame = test::golden_frame();
  const auto s = align_spec_to_frame(system_preset("bs"), frame);
  const double dr = frame.range_step();
  ClutterScene clutter;
  const double r = 30 * dr;  // on boresight, centre of gate 29
  clutter.points.push_back({{0.0, r, 0.0}, 10.0, 0.0});
  const auto syn = synthesize_iq(uniform_rain_field(0, 0), clutter, system_preset("bs"), frame, one_beam(), 40, opt);
  const double lambda = s.wavelength();
  const double expected = s.peak_power * s.max_gain * s.max_gain * lambda * lambda * 10.0 * s.bandwidth * s.pulse_length /
                          (std::pow(4 * kPi, 3) * std::pow(r, 4));
  EXPECT_NEAR(syn.truth.gates(0, 29).clutter_power, expected, 1e-9 * expected);
  EXPECT_EQ(syn.truth.gates(0, 28).clutter_power, 0.0);
}

TEST(Synthesis, EnergyAccounting) {
  const auto frame = test::golden_frame();
  ClutterScene clutter;
  clutter.gates.push_back({0, 40, 3e-10, 0.01});
  SynthesisOptions opt;
  opt.seed = 5;
  const auto field = uniform_rain_field(35.0, 1.0, 0.0, 2.0);
  // Average many gates at the same range by using many beams.
  const auto s = system_preset("bs");
  const auto beams = sector_beams({0, 0, 0}, 0.0, deg_to_rad(3.6), 100, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain);
  const auto syn = synthesize_iq(field, clutter, s, frame, beams, 60, opt);
  double measured = 0.0, expected = 0.0;
  for (std::size_t b = 0; b < beams.size(); ++b) {
    const auto& t = syn.truth.gates(b, 50);
    measured += mean_power(syn.cube, b, 50);
    expected += t.rain_power + t.clutter_power + t.noise_power;
  }
  EXPECT_NEAR(linear_to_db(measured / expected), 0.0, 0.2);
  const auto& t = syn.truth.gates(0, 40);
  EXPECT_NEAR(t.clutter_power, 3e-10, 1e-22);
  EXPECT_GT(t.rain_power, 0.0);
}

TEST(Synthesis, BlindGatesHoldNoiseOnly) {
  const auto frame = test::golden_frame();
  ClutterScene clutter;
  clutter.gates.push_back({0, 3, 1e-8, 0.0});
  const auto syn = synthesize_iq(uniform_rain_field(40.0, 1.0), clutter, system_preset("bs"), frame, one_beam(), 40);
  const double r_min = blind_zone_and_max_range(frame).first;
  for (std::size_t m = 0; m < 40; ++m) {
    const auto& t = syn.truth.gates(0, m);
    EXPECT_EQ(t.blind, gate_range(m, frame.range_step()) < r_min);
    if (t.blind) {
      EXPECT_EQ(t.rain_power, 0.0);
      EXPECT_EQ(t.clutter_power, 0.0);
    }
  }
  EXPECT_TRUE(syn.truth.gates(0, 3).blind);
  EXPECT_LT(mean_power(syn.cube, 0, 3), 3 * syn.truth.gates(0, 3).noise_power);
}

TEST(Synthesis, MomentsRecoveredOverRealizations) {
  const auto frame = test::golden_frame();
  // Radial wind well inside the Nyquist interval, where moments are unaliased.
  const auto field = uniform_rain_field(35.0, 1.5, 1.5, 2.0);
  const auto beams = one_beam(30.0);
  const ChainConfig cfg{};
  std::vector<double> dz, dv, dw;
  SceneTruth truth;
  for (int i = 0; i < 100; ++i) {
    SynthesisOptions opt;
    opt.seed = static_cast<std::uint64_t>(1000 + i);
    auto syn = synthesize_iq(field, {}, system_preset("bs"), frame, beams, 40, opt);
    ChainConfig c = cfg;
    c.filter_clutter = false;
    const auto prod = process_sweep(syn.cube, c);
    const auto& g = prod.at(0, 30);
    ASSERT_TRUE(g.valid);
    dz.push_back(g.dbz() - linear_to_db(syn.truth.gates(0, 30).z));
    dv.push_back(g.velocity - syn.truth.gates(0, 30).velocity);
    dw.push_back(g.spread / syn.truth.gates(0, 30).width - 1.0);
    truth = syn.truth;
  }
  EXPECT_NEAR(median_of(dz), 0.0, 1.0);
  EXPECT_NEAR(median_of(dv), 0.0, 0.5);
  EXPECT_NEAR(median_of(dw), 0.0, 0.2);
  // Radial wind of the truth is the projection on the beam.
  const Vec3 d = beams[0].direction();
  EXPECT_NEAR(truth.gates(0, 30).velocity, 1.5 * d.x + 2.0 * d.y, 1e-12);
}

TEST(Geometry, RadialVelocitySigns) {
  EXPECT_DOUBLE_EQ(radial_velocity({0, 0, 0}, {0, 1000, 0}, 0.0, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(radial_velocity({0, 2000, 0}, {0, 1000, 0}, 0.0, 5.0), -5.0);
  EXPECT_THROW(radial_velocity({1, 1, 1}, {1, 1, 1}, 1, 1), std::invalid_argument);
}

TEST(Geometry, TwoSiteProjectionMatchesBruteForce) {
  const auto s = system_preset("bs");
  SiteGeometry a{sector_beams({0, 0, 0}, deg_to_rad(30), deg_to_rad(4.24), 15, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain), 96, 99.93};
  SiteGeometry b{sector_beams({8000, 0, 0}, deg_to_rad(270.6), deg_to_rad(4.24), 15, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain, 100),
                 96, 99.93};
  CommonGrid grid{1000, 1000, 30, 30, 200};
  const auto cells = project_two_sites(a, b, grid);
  ASSERT_FALSE(cells.empty());
  // Independent check: a cell is paired iff both sites see it within half a
  // beamwidth and inside the gate span.
  auto sees = [](const SiteGeometry& g, double x, double y) {
    for (const auto& beam : g.beams) {
      const double az = std::atan2(x - beam.site.x, y - beam.site.y);
      double d = std::fmod(az - beam.azimuth + 3 * kPi, 2 * kPi) - kPi;
      const double rng = std::hypot(x - beam.site.x, y - beam.site.y);
      const long gate = std::lround(rng / g.range_step) - 1;
      if (std::abs(d) <= beam.hpbw_az / 2 && gate >= 0 && gate < static_cast<long>(g.n_gates)) return true;
    }
    return false;
  };
  std::size_t count = 0;
  for (std::size_t iy = 0; iy < grid.ny; ++iy)
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x0 + static_cast<double>(ix) * grid.spacing, y = grid.y0 + static_cast<double>(iy) * grid.spacing;
      count += sees(a, x, y) && sees(b, x, y);
    }
  EXPECT_EQ(cells.size(), count);
  for (const auto& c : cells) {
    const double ra = gate_range(c.gate_a, a.range_step);
    EXPECT_NEAR(std::hypot(c.x, c.y), ra, a.range_step / 2 + 1e-9);
  }
}

TEST(Geometry, CollinearSitesSeeOppositeVelocities) {
  // A point between two facing sites on the x axis moving along x.
  const Vec3 a{0, 0, 0}, b{8000, 0, 0}, p{4000, 0, 0};
  EXPECT_DOUBLE_EQ(radial_velocity(a, p, 3.0, 0.0), -radial_velocity(b, p, 3.0, 0.0));
}

TEST(Geometry, DisjointSectorsGiveEmptyPairing) {
  const auto s = system_preset("bs");
  SiteGeometry a{sector_beams({0, 0, 0}, 0.0, deg_to_rad(4.24), 5, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain), 50, 100};
  SiteGeometry b{sector_beams({50000, 0, 0}, 0.0, deg_to_rad(4.24), 5, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain), 50, 100};
  EXPECT_TRUE(project_two_sites(a, b, CommonGrid{-5000, 0, 50, 50, 200}).empty());
}
