#include <gtest/gtest.h>

#include "bswrm/core.hpp"
#include "support.hpp"

using namespace bswrm;

TEST(FrameTiming, SlowTimeIsTheSumOfIntervals) {
  const FrameTiming f = test::golden_frame();
  EXPECT_EQ(f.slow_time(), f.tau_tx + f.tau_gu + f.tau_rx + f.tau_id);
  EXPECT_NEAR(f.slow_time(), 2.4988e-3, 1e-15);
}

TEST(FrameTiming, RangeStepFromAdcBandwidth) {
  const FrameTiming f = test::golden_frame();
  EXPECT_DOUBLE_EQ(f.range_step(), 2.99792458e8 / 3e6);
  EXPECT_LE(static_cast<double>(f.max_gates()) * f.range_step(), kSpeedOfLight * f.tau_rx / 2 * (1 + 1e-12));
  EXPECT_GT(static_cast<double>(f.max_gates() + 1) * f.range_step(), kSpeedOfLight * f.tau_rx / 2);
}

TEST(FrameTiming, ValidationRejectsInconsistentTiming) {
  FrameTiming f = test::golden_frame();
  f.tau_id = 0.0;
  EXPECT_THROW(f.validate(), std::invalid_argument);
  f = test::golden_frame();
  f.bandwidth = 2e6;  // above B_adc
  EXPECT_THROW(f.validate(), std::invalid_argument);
  f = test::golden_frame();
  f.tau_tx = 0.5e-6;  // tau_tx * B < 1
  EXPECT_THROW(f.validate(), std::invalid_argument);
  f = test::golden_frame();
  f.pulses_per_beam = 1;
  EXPECT_THROW(f.validate(), std::invalid_argument);
  EXPECT_NO_THROW(test::golden_frame().validate());
}

TEST(FrameTiming, BlindZoneAndMaximumRange) {
  const FrameTiming f = test::golden_frame();
  const auto [blind, rmax] = blind_zone_and_max_range(f);
  EXPECT_DOUBLE_EQ(blind, 2.99792458e8 * 10e-6 / 2);
  EXPECT_DOUBLE_EQ(rmax, 2.99792458e8 * 128.8e-6 / 2);
}

TEST(DopplerAxis, SpacingAndSpan) {
  const double ts = 1e-3;
  const auto ax = doppler_axis(ts, 64);
  ASSERT_EQ(ax.size(), 64u);
  EXPECT_DOUBLE_EQ(ax[32], 0.0);
  EXPECT_DOUBLE_EQ(ax[0], -32.0 / (64 * ts));
  EXPECT_DOUBLE_EQ(ax[63], 31.0 / (64 * ts));
  for (std::size_t i = 1; i < ax.size(); ++i) EXPECT_NEAR(ax[i] - ax[i - 1], 1.0 / (64 * ts), 1e-9);
  EXPECT_THROW(doppler_axis(ts, 63), std::invalid_argument);
  EXPECT_THROW(doppler_axis(ts, 0), std::invalid_argument);
}

TEST(Geometry, GateRangeStartsAtOneStep) {
  EXPECT_DOUBLE_EQ(gate_range(0, 100.0), 100.0);
  EXPECT_DOUBLE_EQ(gate_range(9, 100.0), 1000.0);
}

TEST(Geometry, DirectionIsClockwiseFromNorth) {
  BeamGeometry b;
  b.azimuth = deg_to_rad(90.0);
  const Vec3 d = b.direction();
  EXPECT_NEAR(d.x, 1.0, 1e-15);
  EXPECT_NEAR(d.y, 0.0, 1e-15);
  b.azimuth = 0.0;
  b.elevation = deg_to_rad(-5.0);
  const Vec3 e = b.direction();
  EXPECT_NEAR(e.x * e.x + e.y * e.y + e.z * e.z, 1.0, 1e-15);
  EXPECT_LT(e.z, 0.0);
  b.site = {10, 20, 30};
  const Vec3 p = b.position_at(1000.0);
  EXPECT_NEAR(p.y, 20 + 1000 * std::cos(deg_to_rad(5.0)), 1e-9);
}

TEST(Geometry, BeamValidation) {
  BeamGeometry b;
  b.hpbw_az = 0.0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = BeamGeometry{};
  b.max_gain = -1;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = BeamGeometry{};
  b.elevation = -0.2;  // downtilt is fine
  EXPECT_NO_THROW(b.validate());
  EXPECT_FALSE(b.has_radar_constant());
  EXPECT_EQ(b, b);  // NaN constant compares equal to itself
}

TEST(IqCube, LayoutIsBeamPulseGate) {
  const FrameTiming f = test::golden_frame(4);
  std::vector<BeamGeometry> beams(2);
  beams[1].id = 7;
  IqCube cube(f, beams, 3);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t p = 0; p < 4; ++p)
      for (std::size_t m = 0; m < 3; ++m) cube.at(b, p, m) = cfloat(static_cast<float>(100 * b + 10 * p + m), 0.f);
  EXPECT_EQ(cube.samples()[(1 * 4 + 2) * 3 + 1].real(), 121.f);
  const auto s = cube.beam_series(1);
  EXPECT_EQ(s.rows(), 3u);
  EXPECT_EQ(s.cols(), 4u);
  EXPECT_EQ(s(2, 3).real(), 132.0);
  EXPECT_DOUBLE_EQ(cube.sweep_period(), 2 * 4 * f.slow_time());
}

TEST(IqCube, RejectsGatesBeyondUnambiguousRange) {
  const FrameTiming f = test::golden_frame();
  EXPECT_THROW(IqCube(f, {BeamGeometry{}}, f.max_gates() + 1), std::invalid_argument);
  EXPECT_NO_THROW(IqCube(f, {BeamGeometry{}}, f.max_gates()));
  EXPECT_THROW(IqCube(f, {}, 10), std::invalid_argument);
}

TEST(Masks, OuterBandIsForcedClutterFree) {
  Grid2<std::uint8_t> m(3, 16, 0);
  enforce_outer_band(m);
  for (std::size_t j = 0; j < 16; ++j) {
    const long k = static_cast<long>(j) - 8;
    const bool outer = k < -4 || k > 3;
    EXPECT_EQ(outside_half_band(j, 16), outer) << j;
    EXPECT_EQ(m(1, j), outer ? 1 : 0) << j;
  }
}

TEST(Windows, NamesRoundTrip) {
  for (auto k : {WindowKind::rectangular, WindowKind::blackman, WindowKind::blackman_nuttall})
    EXPECT_EQ(window_from_string(to_string(k)), k);
  EXPECT_THROW(window_from_string("hann"), std::invalid_argument);
}

TEST(Products, InvalidGatesHoldNaN) {
  GateProduct g;
  EXPECT_FALSE(g.valid);
  EXPECT_TRUE(std::isnan(g.reflectivity));
  EXPECT_TRUE(std::isnan(g.velocity));
  EXPECT_TRUE(std::isnan(g.rain_rate));
  g.reflectivity = 1000.0;
  EXPECT_DOUBLE_EQ(g.dbz(), 30.0);
}
