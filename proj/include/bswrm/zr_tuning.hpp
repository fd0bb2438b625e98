#pragma once

// Z-R calibration from disdrometer records: simulate (Z, R) per minute at a
// common altitude, perturb Z with zero-mean dB noise and fit the power law.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bswrm/dsd.hpp"
#include "bswrm/radar.hpp"

namespace bswrm {

struct ZrTuningOptions {
  double altitude = 0.0;       // common altitude for Z and R (m)
  double noise_db = 1.0;       // st. dev. of the Gaussian dB noise on Z
  double dielectric_factor = 0.93;
  double d_min = 0.1;          // integration range (mm)
  double d_max = 8.0;
  std::uint64_t seed = 1;
  std::optional<ScatteringTable> table;  // Rayleigh when empty
};

struct ZrTuningResult {
  ZrCoefficients coefficients;
  std::size_t records_used = 0;
  std::size_t records_skipped = 0;  // no rain or no overlap
  std::size_t bins_dropped = 0;     // bins outside [d_min, d_max]
  std::vector<double> z;            // perturbed reflectivity per used record
  std::vector<double> r;
};

/// Restricts a record to bins inside [d_min, d_max] at the common altitude.
inline DsdRecord restrict_record(const DsdRecord& rec, double d_min, double d_max, double altitude,
                                 std::size_t* dropped = nullptr) {
  DsdRecord out;
  out.timestamp = rec.timestamp;
  out.site_id = rec.site_id;
  out.altitude = altitude;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (rec.diameters[i] < d_min || rec.diameters[i] > d_max) {
      if (dropped && rec.concentrations[i] > 0) ++*dropped;
      continue;
    }
    out.diameters.push_back(rec.diameters[i]);
    out.widths.push_back(rec.widths[i]);
    out.concentrations.push_back(rec.concentrations[i]);
  }
  return out;
}

inline ZrTuningResult tune_zr(std::span<const DsdRecord> records, const ZrTuningOptions& opt = {}) {
  if (!(opt.noise_db >= 0)) throw std::invalid_argument("tune_zr: noise st. dev. must be non-negative");
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, opt.noise_db > 0 ? opt.noise_db : 1.0);

  ZrTuningResult out;
  for (const auto& rec : records) {
    const DsdRecord sub = restrict_record(rec, opt.d_min, opt.d_max, opt.altitude, &out.bins_dropped);
    if (sub.diameters.empty()) {
      ++out.records_skipped;
      continue;
    }
    double z = 0.0;
    if (opt.table) {
      try {
        z = reflectivity_from_dsd(sub, *opt.table, opt.table->wavelength(), opt.dielectric_factor);
      } catch (const std::invalid_argument&) {
        ++out.records_skipped;
        continue;
      }
    } else {
      // Rayleigh: the sixth moment, evaluated directly on the record bins.
      for (std::size_t i = 0; i < sub.size(); ++i)
        z += sub.concentrations[i] * std::pow(sub.diameters[i], 6) * sub.widths[i];
    }
    const double r = rain_intensity(sub);
    if (!(z > 0 && r > 0)) {
      ++out.records_skipped;
      continue;
    }
    out.z.push_back(opt.noise_db > 0 ? z * db_to_linear(noise(rng)) : z);
    out.r.push_back(r);
  }
  out.records_used = out.z.size();
  out.coefficients = fit_zr(out.z, out.r);
  return out;
}

}  // namespace bswrm
