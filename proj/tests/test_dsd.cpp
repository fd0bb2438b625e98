#include <gtest/gtest.h>

#include <random>

#include "bswrm/dsd.hpp"
#include "bswrm/zr_tuning.hpp"

using namespace bswrm;

namespace {

DsdRecord exponential_dsd(double n0, double lambda, double dd, double d_max = 8.0, double altitude = 0.0) {
  DsdRecord r;
  r.site_id = "s1";
  r.altitude = altitude;
  for (double d = dd / 2; d < d_max; d += dd) {
    r.diameters.push_back(d);
    r.widths.push_back(dd);
    r.concentrations.push_back(n0 * std::exp(-lambda * d));
  }
  return r;
}

}  // namespace

TEST(AirDensity, SeaLevelAndClosedForm) {
  EXPECT_DOUBLE_EQ(air_density(0.0), 1.225);
  // Independent evaluation at 1000 m.
  const double base = 1.0 - 2.2558e-5 * 1000.0;
  EXPECT_NEAR(air_density(1000.0), 1.225 * std::exp(4.256 * std::log(base)), 1e-14);
  double prev = air_density(-430.0);
  for (double h = -400; h < 40000; h += 100) {
    const double v = air_density(h);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(air_density(-500.0), std::invalid_argument);
  EXPECT_THROW(air_density(1.0 / 2.2558e-5), std::invalid_argument);
}

TEST(TerminalVelocity, SpotValues) {
  EXPECT_NEAR(terminal_velocity(1.0, 0.0), 9.65 - 10.3 * std::exp(-0.6), 1e-15);
  EXPECT_NEAR(terminal_velocity(1.0, 0.0), 3.997, 1e-3);
  EXPECT_EQ(terminal_velocity(0.05, 0.0), 0.0);  // Atlas form negative, clamped
  EXPECT_THROW(terminal_velocity(0.0, 0.0), std::invalid_argument);
  EXPECT_LT(terminal_velocity(20.0, 0.0), 9.65);
  EXPECT_NEAR(terminal_velocity(20.0, 0.0), 9.65, 1e-4);
}

TEST(TerminalVelocity, AltitudeNeverSlowsDrops) {
  for (double d : {0.3, 1.0, 2.5, 6.0})
    for (double h : {100.0, 1000.0, 3000.0}) EXPECT_GE(terminal_velocity(d, h), terminal_velocity(d, 0.0));
}

TEST(RainIntensity, ZeroAndMonodisperse) {
  DsdRecord r = exponential_dsd(0.0, 2.0, 0.2);
  EXPECT_EQ(rain_intensity(r), 0.0);
  DsdRecord mono;
  mono.diameters = {2.0};
  mono.widths = {0.25};
  mono.concentrations = {300.0};
  mono.altitude = 500.0;
  EXPECT_NEAR(rain_intensity(mono), 6 * kPi * 1e-4 * terminal_velocity(2.0, 500.0) * 300.0 * 8.0 * 0.25, 1e-12);
}

TEST(RainIntensity, ExponentialDsdAgainstFineQuadrature) {
  const double coarse = rain_intensity(exponential_dsd(8000.0, 2.0, 0.1));
  const double fine = rain_intensity(exponential_dsd(8000.0, 2.0, 0.01));
  EXPECT_NEAR(coarse, fine, 1e-3 * fine);
}

TEST(RainIntensity, MonotoneInConcentration) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int t = 0; t < 50; ++t) {
    DsdRecord a = exponential_dsd(1000.0, 2.0, 0.25);
    for (auto& n : a.concentrations) n = u(rng);
    DsdRecord b = a;
    for (auto& n : b.concentrations) n += u(rng);
    EXPECT_LE(rain_intensity(a), rain_intensity(b));
  }
}

TEST(DsdRecord, Validation) {
  DsdRecord r = exponential_dsd(100, 2, 0.5);
  EXPECT_NO_THROW(r.validate());
  r.concentrations[2] = -1;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = exponential_dsd(100, 2, 0.5);
  std::swap(r.diameters[1], r.diameters[2]);
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = exponential_dsd(100, 2, 0.5);
  r.altitude = -431;
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(ZrLaw, IdentitiesAndPresets) {
  const auto mp = ZrCoefficients::marshall_palmer();
  EXPECT_EQ(mp.a, 200.0);
  EXPECT_EQ(mp.b, 1.6);
  const auto tuned = ZrCoefficients::base_station_tuned();
  EXPECT_DOUBLE_EQ(r_to_z(1.0, tuned), 92.0563);
  EXPECT_EQ(tuned.b, 2.1363);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const double r = std::pow(10.0, u(rng));
    EXPECT_NEAR(z_to_r(r_to_z(r, tuned), tuned), r, 1e-12 * r);
    EXPECT_NEAR(z_to_r(r_to_z(r, mp), mp), r, 1e-12 * r);
  }
  EXPECT_THROW(z_to_r(0.0, mp), std::invalid_argument);
  EXPECT_THROW(r_to_z(-1.0, mp), std::invalid_argument);
}

TEST(ZrFit, NoiselessRoundTrip) {
  std::vector<double> z, r;
  for (int i = 0; i < 40; ++i) {
    r.push_back(0.1 * std::pow(1.2, i));
    z.push_back(200.0 * std::pow(r.back(), 1.6));
  }
  const auto c = fit_zr(z, r);
  EXPECT_NEAR(c.a, 200.0, 200.0 * 1e-6);
  EXPECT_NEAR(c.b, 1.6, 1.6 * 1e-6);
  EXPECT_EQ(c.provenance, ZrProvenance::fitted);
  EXPECT_EQ(c.n_samples, 40u);
  // Scale consistency.
  std::vector<double> z3(z);
  for (auto& v : z3) v *= 3.0;
  const auto c3 = fit_zr(z3, r);
  EXPECT_NEAR(c3.a, 3.0 * c.a, 1e-9 * c3.a);
  EXPECT_NEAR(c3.b, c.b, 1e-9);
}

TEST(ZrFit, Errors) {
  std::vector<double> z(12, 100.0), r(12, 2.0);
  EXPECT_THROW(fit_zr(z, r), undefined_result);
  std::vector<double> few(5, 1.0);
  EXPECT_THROW(fit_zr(few, few), std::invalid_argument);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = i == 3 ? -1.0 : 1.0 + static_cast<double>(i);
  EXPECT_THROW(fit_zr(z, r), std::invalid_argument);
}

TEST(ZrFit, NoisyMonteCarloRecoversTunedCoefficients) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> lr(-1.0, 2.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto truth = ZrCoefficients::base_station_tuned();
  std::vector<double> z, r;
  for (int i = 0; i < 20000; ++i) {
    r.push_back(std::pow(10.0, lr(rng)));
    z.push_back(r_to_z(r.back(), truth) * db_to_linear(noise(rng)));
  }
  const auto c = fit_zr(z, r);
  EXPECT_NEAR(c.a, truth.a, 0.05 * truth.a);
  EXPECT_NEAR(c.b, truth.b, 0.02 * truth.b);
  EXPECT_NEAR(c.residual_db, 1.0, 0.05);
}

TEST(ZrTuning, RayleighPathUsesSixthMoment) {
  std::vector<DsdRecord> recs;
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> lam(1.5, 4.0), n0(2000, 16000);
  for (int i = 0; i < 50; ++i) recs.push_back(exponential_dsd(n0(rng), lam(rng), 0.25));
  ZrTuningOptions opt;
  opt.noise_db = 0.0;
  const auto res = tune_zr(recs, opt);
  EXPECT_EQ(res.records_used, 50u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    double z6 = 0.0;
    for (std::size_t j = 0; j < recs[i].size(); ++j)
      if (recs[i].diameters[j] >= 0.1 && recs[i].diameters[j] <= 8.0)
        z6 += recs[i].concentrations[j] * std::pow(recs[i].diameters[j], 6) * recs[i].widths[j];
    EXPECT_NEAR(res.z[i], z6, 1e-9 * z6);
  }
  EXPECT_GT(res.coefficients.b, 1.0);
}

TEST(ZrTuning, RestrictDropsOutOfRangeBins) {
  DsdRecord r = exponential_dsd(1000, 2, 0.5, 10.0);
  std::size_t dropped = 0;
  const auto sub = restrict_record(r, 0.1, 8.0, 0.0, &dropped);
  EXPECT_EQ(dropped, 4u);  // 8.25 .. 9.75
  EXPECT_EQ(sub.size(), r.size() - 4);
}
