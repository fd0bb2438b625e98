#pragma once

// Sweep processing: averaged Doppler spectra, clutter masks, interpolation of
// the masked bins, moments, reflectivity and rain rate. Also the per-sweep
// median rain-rate profile and the two-site comparison.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bswrm/clutter.hpp"
#include "bswrm/core.hpp"
#include "bswrm/dsd.hpp"
#include "bswrm/parallel.hpp"
#include "bswrm/radar.hpp"
#include "bswrm/simulator.hpp"
#include "bswrm/spectral.hpp"

namespace bswrm {

inline constexpr const char* kVersion = "1.0.0";

struct ChainConfig {
  WindowKind window = WindowKind::blackman;
  SubsampleParams subsample;   // also fixes N_p, the shift step and the number of averaged windows
  double cv_threshold = 0.1;
  bool filter_clutter = true;
  std::size_t min_fit_bins = 5;
  GaussianFitOptions fit;
  ZrCoefficients zr = ZrCoefficients::base_station_tuned();
  RadarSystemSpec spec = system_preset("bs");  // aligned to the cube frame before use
  double correction_factor = 1.0;  // antenna F for beams without a calibrated C_g
  double snr_min = 1.0;
  unsigned threads = 0;
};

/// Spectrum averaged over the N_D shifted N_p-pulse windows of one beam.
inline RangeDopplerSpectrum averaged_spectrum(const Grid2<cdouble>& series, const ChainConfig& cfg, double slow_time,
                                              std::uint32_t beam_id = 0) {
  const auto& sp = cfg.subsample;
  sp.validate(series.cols());
  const WindowSpec window = make_window(cfg.window, sp.window_len);
  RangeDopplerSpectrum avg = compute_spectrum(series, 0, window, slow_time, beam_id);
  for (std::size_t n = 1; n < sp.n_shifts; ++n) {
    const auto s = compute_spectrum(series, n * sp.shift_step, window, slow_time, beam_id);
    for (std::size_t i = 0; i < avg.psd.size(); ++i) avg.psd.data()[i] += s.psd.data()[i];
  }
  for (auto& v : avg.psd.data()) v /= static_cast<double>(sp.n_shifts);
  return avg;
}

/// In-line CV masks, one per beam.
inline std::vector<ClutterMask> cv_masks(const IqCube& cube, const ChainConfig& cfg) {
  std::vector<ClutterMask> out(cube.n_beams());
  parallel_for(cube.n_beams(), [&](std::size_t b) {
    const auto map = cv_map(cube.beam_series(b), cfg.subsample, cfg.window, cube.frame().slow_time());
    out[b] = cv_mask(map, cfg.cv_threshold);
  }, cfg.threads);
  return out;
}

/// Radar constant actually used for each beam of the cube.
inline std::vector<double> beam_radar_constants(const IqCube& cube, const ChainConfig& cfg) {
  const RadarSystemSpec spec = align_spec_to_frame(cfg.spec, cube.frame());
  const double fallback = radar_constant(spec, cfg.correction_factor);
  std::vector<double> c;
  for (const auto& b : cube.beams()) c.push_back(b.has_radar_constant() ? b.radar_constant : fallback);
  return c;
}

/// Thermal noise at the receiver output, k_B T0 B F_n, for the cube frame.
inline double receiver_noise(const IqCube& cube, const ChainConfig& cfg) {
  return align_spec_to_frame(cfg.spec, cube.frame()).noise_power() * cfg.spec.noise_figure;
}

/// Runs the chain on one sweep. `masks`, when given, holds one mask per beam
/// and takes precedence over in-line CV masks.
inline ProductGrid process_sweep(const IqCube& cube, const ChainConfig& cfg,
                                 const std::vector<ClutterMask>* masks = nullptr) {
  const auto& sp = cfg.subsample;
  sp.validate(cube.n_pulses());
  const std::size_t np = sp.window_len;
  if (masks) {
    if (masks->size() != cube.n_beams()) throw std::invalid_argument("process_sweep: one mask per beam required");
    for (const auto& m : *masks)
      if (m.n_gates() != cube.n_gates() || m.n_bins() != np)
        throw std::invalid_argument("process_sweep: mask dimensions do not match the cube and N_p");
  }
  cfg.zr.validate();
  const FrameTiming& frame = cube.frame();
  const double ts = frame.slow_time();
  const double lambda = frame.wavelength();
  const double noise = receiver_noise(cube, cfg);
  const double noise_per_bin = ts * ts * noise;
  const double r_min = blind_zone_and_max_range(frame).first;
  const auto axis = doppler_axis(ts, np);
  const auto constants = beam_radar_constants(cube, cfg);

  ProductGrid out(cube.beams(), cube.n_gates(), cube.range_step(), cube.timestamp());
  parallel_for(cube.n_beams(), [&](std::size_t b) {
    const auto series = cube.beam_series(b);
    const auto spec = averaged_spectrum(series, cfg, ts, cube.beams()[b].id);
    std::optional<ClutterMask> mask;
    if (masks) {
      mask = (*masks)[b];
    } else if (cfg.filter_clutter) {
      mask = cv_mask(cv_map(series, sp, cfg.window, ts), cfg.cv_threshold);
    }
    for (std::size_t m = 0; m < cube.n_gates(); ++m) {
      GateProduct& g = out.at(b, m);
      const double r = gate_range(m, cube.range_step());
      if (r < r_min) {
        g.flags |= gate_flags::blind_zone;
        continue;
      }
      std::span<const double> row(spec.psd.row(m), np);
      std::vector<double> filtered(row.begin(), row.end());
      if (mask) {
        std::span<const std::uint8_t> mrow(mask->mask.row(m), np);
        if (std::any_of(mrow.begin(), mrow.end(), [](std::uint8_t v) { return v == 0; })) {
          g.flags |= gate_flags::clutter_filtered;
          const auto interp = gaussian_interpolate(row, mrow, noise_floor(row), cfg.min_fit_bins, cfg.fit);
          if (interp.fallback) g.flags |= gate_flags::interpolation_fallback;
          filtered = interp.psd;
        }
      }
      const double p_signal = received_power(filtered, spec.doppler_step) / ts - noise;
      if (!(p_signal > 0)) {
        g.flags |= gate_flags::no_power | gate_flags::below_mdz;
        continue;
      }
      g.snr_db = linear_to_db(p_signal / noise);
      if (p_signal < noise * cfg.snr_min) {
        g.flags |= gate_flags::below_mdz;
        g.snr_db = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      DopplerMoments mom;
      try {
        mom = doppler_moments(filtered, axis, lambda, noise_per_bin);
      } catch (const undefined_result&) {
        g.flags |= gate_flags::no_power;
        g.snr_db = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      g.reflectivity = invert_radar_equation(p_signal, r, constants[b]);
      g.velocity = mom.velocity;
      g.spread = mom.spread;
      g.rain_rate = z_to_r(g.reflectivity, cfg.zr);
      g.valid = true;
    }
  }, cfg.threads);
  return out;
}

/// Median rain rate of one sweep over the valid gates of the selected beams.
struct RainProfileSample {
  double timestamp = 0.0;
  std::optional<double> median;  // absent when no gate is valid
  double dispersion = std::numeric_limits<double>::quiet_NaN();  // standard deviation of R
  std::size_t n_valid = 0;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median_of: empty sample");
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2)));
}

inline RainProfileSample median_rainrate_profile(const ProductGrid& grid, std::span<const std::size_t> beams = {}) {
  std::vector<std::size_t> selected(beams.begin(), beams.end());
  if (selected.empty())
    for (std::size_t b = 0; b < grid.n_beams(); ++b) selected.push_back(b);
  std::vector<double> r;
  for (std::size_t b : selected) {
    if (b >= grid.n_beams()) throw std::invalid_argument("median_rainrate_profile: beam index out of range");
    for (std::size_t m = 0; m < grid.n_gates; ++m) {
      const auto& g = grid.at(b, m);
      if (g.valid && std::isfinite(g.rain_rate)) r.push_back(g.rain_rate);
    }
  }
  RainProfileSample out;
  out.timestamp = grid.timestamp;
  out.n_valid = r.size();
  if (r.empty()) return out;
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  out.dispersion = std::sqrt(var / static_cast<double>(r.size()));
  out.median = median_of(std::move(r));
  return out;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw undefined_result("pearson: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0 && syy > 0)) throw undefined_result("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

struct CellDifference {
  std::size_t ix = 0, iy = 0;
  double timestamp = 0.0;
  double dz_db = 0.0;  // Z_B - Z_A (dB)
  double dv = 0.0;     // V_B - V_A (m/s)
  bool opposite_velocity = false;  // V_A and V_B of opposite sign
};

struct ComparisonReport {
  std::size_t n_aligned = 0;  // sweep pairs matched in time
  std::size_t n_dropped = 0;  // sweeps of A without a partner within the tolerance
  std::optional<double> correlation;  // Pearson of the median-R series
  std::vector<double> median_a, median_b, times;
  std::vector<CellDifference> cells;
  double median_dz_db = std::numeric_limits<double>::quiet_NaN();
  double same_sign_fraction = std::numeric_limits<double>::quiet_NaN();
};

/// Pairs sweeps of A with the nearest sweep of B within `tolerance` seconds,
/// then compares median rain rates and the paired cells. Invalid gates never enter the statistics.
inline ComparisonReport compare_sites(std::span<const ProductGrid> a, std::span<const ProductGrid> b,
                                      std::span<const PairedCell> pairing, double tolerance) {
  if (pairing.empty()) throw std::invalid_argument("compare_sites: empty pairing");
  if (!(tolerance > 0)) throw std::invalid_argument("compare_sites: tolerance must be positive");
  ComparisonReport rep;
  std::vector<double> dz_all;
  std::size_t same = 0, signed_pairs = 0;
  for (const auto& ga : a) {
    const ProductGrid* best = nullptr;
    double best_dt = tolerance;
    for (const auto& gb : b) {
      const double dt = std::abs(gb.timestamp - ga.timestamp);
      if (dt <= best_dt) best = &gb, best_dt = dt;
    }
    if (!best) {
      ++rep.n_dropped;
      continue;
    }
    ++rep.n_aligned;
    const auto pa = median_rainrate_profile(ga);
    const auto pb = median_rainrate_profile(*best);
    if (pa.median && pb.median) {
      rep.median_a.push_back(*pa.median);
      rep.median_b.push_back(*pb.median);
      rep.times.push_back(ga.timestamp);
    }
    for (const auto& c : pairing) {
      if (c.beam_a >= ga.n_beams() || c.gate_a >= ga.n_gates || c.beam_b >= best->n_beams() || c.gate_b >= best->n_gates)
        throw std::invalid_argument("compare_sites: pairing does not match the product grids");
      const auto& za = ga.at(c.beam_a, c.gate_a);
      const auto& zb = best->at(c.beam_b, c.gate_b);
      if (!za.valid || !zb.valid) continue;
      CellDifference d{c.ix, c.iy, ga.timestamp, zb.dbz() - za.dbz(), zb.velocity - za.velocity,
                       za.velocity * zb.velocity < 0};
      dz_all.push_back(d.dz_db);
      if (za.velocity != 0 && zb.velocity != 0) {
        ++signed_pairs;
        same += !d.opposite_velocity;
      }
      rep.cells.push_back(d);
    }
  }
  if (rep.median_a.size() >= 2) {
    try {
      rep.correlation = pearson(rep.median_a, rep.median_b);
    } catch (const undefined_result&) {
      rep.correlation.reset();
    }
  }
  if (!dz_all.empty()) rep.median_dz_db = median_of(dz_all);
  if (signed_pairs > 0) rep.same_sign_fraction = static_cast<double>(same) / static_cast<double>(signed_pairs);
  return rep;
}

}  // namespace bswrm
