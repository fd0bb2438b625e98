#include <gtest/gtest.h>

#include <random>

#include "bswrm/pipeline.hpp"
#include "support.hpp"

using namespace bswrm;

namespace {

std::vector<BeamGeometry> beams_of(std::size_t n) {
  const auto s = system_preset("bs");
  return sector_beams({0, 0, 0}, 0.0, deg_to_rad(4.24), n, 0.0, s.hpbw_az, s.hpbw_el, s.max_gain);
}

ProductGrid rain_grid(const std::vector<std::vector<double>>& rates, double ts = 0.0) {
  ProductGrid g(beams_of(rates.size()), rates.front().size(), 100.0, ts);
  for (std::size_t b = 0; b < rates.size(); ++b)
    for (std::size_t m = 0; m < rates[b].size(); ++m) {
      if (std::isnan(rates[b][m])) continue;
      auto& p = g.at(b, m);
      p.valid = true;
      p.rain_rate = rates[b][m];
      p.reflectivity = r_to_z(rates[b][m], ZrCoefficients::base_station_tuned());
      p.velocity = 1.0;
    }
  return g;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(Pipeline, NoiseOnlySweepHasNoValidGates) {
  SynthesisOptions opt;
  opt.rain = false;
  const auto syn = synthesize_iq(uniform_rain_field(0, 0), {}, system_preset("bs"), test::golden_frame(), beams_of(3), 80, opt);
  const auto prod = process_sweep(syn.cube, ChainConfig{});
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t m = 0; m < 80; ++m) {
      const auto& g = prod.at(b, m);
      EXPECT_FALSE(g.valid);
      EXPECT_TRUE(std::isnan(g.reflectivity));
      EXPECT_NE(g.flags & (gate_flags::below_mdz | gate_flags::blind_zone | gate_flags::no_power), 0);
    }
}

TEST(Pipeline, BlindGatesAreFlagged) {
  const auto frame = test::golden_frame();
  const auto syn = synthesize_iq(uniform_rain_field(35, 1), {}, system_preset("bs"), frame, beams_of(1), 30);
  const auto prod = process_sweep(syn.cube, ChainConfig{});
  const double r_min = blind_zone_and_max_range(frame).first;
  for (std::size_t m = 0; m < 30; ++m) {
    const bool blind = gate_range(m, frame.range_step()) < r_min;
    EXPECT_EQ((prod.at(0, m).flags & gate_flags::blind_zone) != 0, blind) << m;
    if (!blind) { EXPECT_TRUE(prod.at(0, m).valid) << m; }
  }
}

TEST(Pipeline, DeterministicAcrossThreads) {
  ClutterScene clutter;
  clutter.gates.push_back({1, 25, 1e-9, 0.01});
  const auto syn = synthesize_iq(uniform_rain_field(30, 1, 0, 3), clutter, system_preset("bs"), test::golden_frame(),
                                 beams_of(4), 50);
  ChainConfig c1, c4;
  c1.threads = 1;
  c4.threads = 4;
  const auto a = process_sweep(syn.cube, c1), b = process_sweep(syn.cube, c4);
  for (std::size_t i = 0; i < a.gates.size(); ++i) {
    const auto& x = a.gates.data()[i];
    const auto& y = b.gates.data()[i];
    EXPECT_EQ(x.valid, y.valid);
    EXPECT_EQ(x.flags, y.flags);
    if (x.valid) {
      EXPECT_EQ(x.reflectivity, y.reflectivity);
      EXPECT_EQ(x.velocity, y.velocity);
      EXPECT_EQ(x.spread, y.spread);
    }
  }
}

TEST(Pipeline, ClutterIsFilteredAndReflectivityRecovered) {
  const auto frame = test::golden_frame();
  const double rain_dbz = 30.0;
  ClutterScene clutter;
  // Clutter 30 dB above the rain echo at gate 30.
  const auto field = uniform_rain_field(rain_dbz, 1.0, 0.0, 3.0);
  SynthesisOptions probe;
  probe.rain = true;
  const auto ref = synthesize_iq(field, {}, system_preset("bs"), frame, beams_of(1), 40, probe);
  clutter.gates.push_back({0, 30, 1e3 * ref.truth.gates(0, 30).rain_power, 0.005});
  std::vector<double> raw_bias, filtered_bias;
  for (int i = 0; i < 20; ++i) {
    SynthesisOptions opt;
    opt.seed = static_cast<std::uint64_t>(50 + i);
    const auto syn = synthesize_iq(field, clutter, system_preset("bs"), frame, beams_of(1), 40, opt);
    ChainConfig on, off;
    off.filter_clutter = false;
    const auto p_on = process_sweep(syn.cube, on), p_off = process_sweep(syn.cube, off);
    ASSERT_NE(p_on.at(0, 30).flags & gate_flags::clutter_filtered, 0);
    ASSERT_TRUE(p_on.at(0, 30).valid);
    filtered_bias.push_back(p_on.at(0, 30).dbz() - rain_dbz);
    raw_bias.push_back(p_off.at(0, 30).dbz() - rain_dbz);
  }
  EXPECT_NEAR(median_of(raw_bias), 30.0, 1.0);
  EXPECT_LT(std::abs(median_of(filtered_bias)), 3.0);
}

TEST(Pipeline, ExternalMaskValidation) {
  const auto syn = synthesize_iq(uniform_rain_field(30, 1), {}, system_preset("bs"), test::golden_frame(), beams_of(2), 20);
  ChainConfig cfg;
  std::vector<ClutterMask> masks(1);
  masks[0].mask = Grid2<std::uint8_t>(20, 64, 1);
  EXPECT_THROW(process_sweep(syn.cube, cfg, &masks), std::invalid_argument);
  masks.assign(2, masks[0]);
  masks[1].mask = Grid2<std::uint8_t>(20, 32, 1);
  EXPECT_THROW(process_sweep(syn.cube, cfg, &masks), std::invalid_argument);
  masks[1].mask = Grid2<std::uint8_t>(20, 64, 1);
  const auto with = process_sweep(syn.cube, cfg, &masks);
  cfg.filter_clutter = false;
  const auto without = process_sweep(syn.cube, cfg);
  // An all-ones mask changes nothing.
  for (std::size_t i = 0; i < with.gates.size(); ++i)
    if (with.gates.data()[i].valid) { EXPECT_EQ(with.gates.data()[i].reflectivity, without.gates.data()[i].reflectivity); }
}

TEST(Pipeline, AllMaskedRowFallsBack) {
  const auto syn = synthesize_iq(uniform_rain_field(30, 1), {}, system_preset("bs"), test::golden_frame(), beams_of(1), 20);
  std::vector<ClutterMask> masks(1);
  masks[0].mask = Grid2<std::uint8_t>(20, 64, 1);
  for (std::size_t j = 0; j < 64; ++j) masks[0].mask(18, j) = 0;
  const auto p = process_sweep(syn.cube, ChainConfig{}, &masks);
  EXPECT_NE(p.at(0, 18).flags & gate_flags::interpolation_fallback, 0);
  EXPECT_NE(p.at(0, 18).flags & gate_flags::clutter_filtered, 0);
}

TEST(Profile, MedianOverValidGatesOnly) {
  const auto g = rain_grid({{1, 2, kNaN}, {3, kNaN, 100}}, 42.0);
  const auto p = median_rainrate_profile(g);
  EXPECT_EQ(p.n_valid, 4u);
  EXPECT_DOUBLE_EQ(*p.median, 2.5);
  EXPECT_DOUBLE_EQ(p.timestamp, 42.0);
  const std::vector<std::size_t> first{0};
  EXPECT_DOUBLE_EQ(*median_rainrate_profile(g, first).median, 1.5);
  const auto empty = median_rainrate_profile(rain_grid({{kNaN, kNaN}}));
  EXPECT_FALSE(empty.median.has_value());
  EXPECT_EQ(empty.n_valid, 0u);
  const std::vector<std::size_t> bad{5};
  EXPECT_THROW(median_rainrate_profile(g, bad), std::invalid_argument);
}

TEST(Profile, MedianIsPermutationInvariant) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 50);
  std::vector<double> v(101);
  for (auto& x : v) x = u(rng);
  const double m = median_of(v);
  std::shuffle(v.begin(), v.end(), rng);
  EXPECT_EQ(median_of(v), m);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(m, v[50]);
}

TEST(Pearson, KnownValues) {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10}, z{5, 4, 3, 2, 1};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  std::vector<double> c(5, 3.0);
  EXPECT_THROW(pearson(x, c), undefined_result);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), undefined_result);
}

TEST(Pearson, IndependentSeriesAreUncorrelated) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g;
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  EXPECT_LT(std::abs(pearson(a, b)), 0.05);
}

TEST(Compare, AlignsByTimestampAndDropsUnmatched) {
  std::vector<ProductGrid> a, b;
  for (int i = 0; i < 5; ++i) a.push_back(rain_grid({{1.0 + i, 2.0 + i}}, 10.0 * i));
  for (int i = 0; i < 4; ++i) b.push_back(rain_grid({{2.0 * (1.0 + i), 2.0 * (2.0 + i)}}, 10.0 * i + 1.0));
  const std::vector<PairedCell> pairing{{0, 0, 0, 0, 0, 1, 0, 0}};
  const auto rep = compare_sites(a, b, pairing, 3.0);
  EXPECT_EQ(rep.n_aligned, 4u);
  EXPECT_EQ(rep.n_dropped, 1u);
  ASSERT_TRUE(rep.correlation.has_value());
  EXPECT_NEAR(*rep.correlation, 1.0, 1e-12);
  EXPECT_EQ(rep.cells.size(), 4u);
  EXPECT_DOUBLE_EQ(rep.same_sign_fraction, 1.0);
  EXPECT_THROW(compare_sites(a, b, std::vector<PairedCell>{}, 3.0), std::invalid_argument);
  EXPECT_THROW(compare_sites(a, b, pairing, 0.0), std::invalid_argument);
}

TEST(Compare, OppositeVelocitiesAndInvalidCells) {
  std::vector<ProductGrid> a{rain_grid({{1.0, kNaN}}, 0.0)}, b{rain_grid({{1.0, 1.0}}, 0.0)};
  b[0].at(0, 0).velocity = -2.0;
  const std::vector<PairedCell> pairing{{0, 0, 0, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 1, 0, 1}};
  const auto rep = compare_sites(a, b, pairing, 1.0);
  ASSERT_EQ(rep.cells.size(), 1u);  // the invalid gate of A never enters
  EXPECT_TRUE(rep.cells[0].opposite_velocity);
  EXPECT_DOUBLE_EQ(rep.cells[0].dv, -3.0);
  EXPECT_DOUBLE_EQ(rep.same_sign_fraction, 0.0);
  EXPECT_FALSE(rep.correlation.has_value());
  const std::vector<PairedCell> bad{{0, 0, 0, 0, 3, 0, 0, 0}};
  EXPECT_THROW(compare_sites(a, b, bad, 1.0), std::invalid_argument);
}
