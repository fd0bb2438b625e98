#pragma once

// Drop size distributions, fall speed, rain intensity and the Z-R power law.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bswrm/core.hpp"

namespace bswrm {

/// One-minute drop size distribution. Concentrations in m^-3 mm^-1 on bin
/// centres D (mm) with widths dD (mm).
struct DsdRecord {
  double timestamp = 0.0;
  std::string site_id;
  double altitude = 0.0;  // m above sea level
  std::vector<double> diameters;
  std::vector<double> widths;
  std::vector<double> concentrations;

  std::size_t size() const { return diameters.size(); }

  void validate() const {
    if (diameters.empty()) throw std::invalid_argument("DsdRecord: no diameter bins");
    if (widths.size() != diameters.size() || concentrations.size() != diameters.size())
      throw std::invalid_argument("DsdRecord: column lengths differ");
    for (std::size_t i = 0; i < diameters.size(); ++i) {
      if (!(diameters[i] > 0)) throw std::invalid_argument("DsdRecord: diameters must be positive");
      if (i > 0 && !(diameters[i] > diameters[i - 1])) throw std::invalid_argument("DsdRecord: bins not strictly increasing");
      if (!(widths[i] > 0)) throw std::invalid_argument("DsdRecord: bin widths must be positive");
      if (!(concentrations[i] >= 0)) throw std::invalid_argument("DsdRecord: negative concentration");
    }
    if (!(altitude >= -430.0)) throw std::invalid_argument("DsdRecord: altitude below -430 m");
  }

  friend bool operator==(const DsdRecord&, const DsdRecord&) = default;
};

inline constexpr double kSeaLevelAirDensity = 1.225;  // kg/m^3
inline constexpr double kIsaAlpha = 2.2558e-5;        // 1/m
inline constexpr double kIsaBeta = 4.256;

/// Standard-atmosphere air density at altitude h (m).
inline double air_density(double h) {
  if (!(h >= -430.0 && h < 1.0 / kIsaAlpha)) throw std::invalid_argument("air_density: altitude out of model domain");
  return kSeaLevelAirDensity * std::pow(1.0 - kIsaAlpha * h, kIsaBeta);
}

/// Atlas fall speed with altitude correction (m/s), clamped at zero for
/// very small drops where the fit goes negative.
inline double terminal_velocity(double diameter_mm, double altitude_m = 0.0) {
  if (!(diameter_mm > 0)) throw std::invalid_argument("terminal_velocity: diameter must be positive");
  const double v0 = 9.65 - 10.3 * std::exp(-0.6 * diameter_mm);
  if (v0 <= 0) return 0.0;
  const double ratio = kSeaLevelAirDensity / air_density(altitude_m);
  return v0 * std::pow(ratio, 0.375 + 0.025 * diameter_mm);
}

/// Rain intensity (mm/h) as the velocity-weighted third moment of the DSD.
inline double rain_intensity(const DsdRecord& dsd) {
  dsd.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < dsd.size(); ++i) {
    const double d = dsd.diameters[i];
    sum += terminal_velocity(d, dsd.altitude) * dsd.concentrations[i] * d * d * d * dsd.widths[i];
  }
  return 6.0 * kPi * 1e-4 * sum;
}

enum class ZrProvenance { marshall_palmer, tuned, fitted, custom };

inline std::string to_string(ZrProvenance p) {
  switch (p) {
    case ZrProvenance::marshall_palmer: return "marshall-palmer";
    case ZrProvenance::tuned: return "tuned";
    case ZrProvenance::fitted: return "fitted";
    case ZrProvenance::custom: return "custom";
  }
  return "custom";
}

inline ZrProvenance provenance_from_string(const std::string& s) {
  if (s == "marshall-palmer") return ZrProvenance::marshall_palmer;
  if (s == "tuned") return ZrProvenance::tuned;
  if (s == "fitted") return ZrProvenance::fitted;
  return ZrProvenance::custom;
}

/// Z = a R^b with Z in mm^6 m^-3 and R in mm/h.
struct ZrCoefficients {
  double a = 200.0;
  double b = 1.6;
  ZrProvenance provenance = ZrProvenance::marshall_palmer;
  std::size_t n_samples = 0;
  double residual_db = 0.0;  // spread of log residuals, in dB

  void validate() const {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("ZrCoefficients: a and b must be positive");
  }

  static ZrCoefficients marshall_palmer() { return {200.0, 1.6, ZrProvenance::marshall_palmer, 0, 0.0}; }
  /// Coefficients tuned on disdrometer statistics for a 4.9 GHz slant-linear system.
  static ZrCoefficients base_station_tuned() { return {92.0563, 2.1363, ZrProvenance::tuned, 0, 0.0}; }
};

inline double z_to_r(double z, const ZrCoefficients& c) {
  if (!(z > 0)) throw std::invalid_argument("z_to_r: reflectivity must be positive");
  return std::pow(z / c.a, 1.0 / c.b);
}

inline double r_to_z(double r, const ZrCoefficients& c) {
  if (!(r > 0)) throw std::invalid_argument("r_to_z: rain rate must be positive");
  return c.a * std::pow(r, c.b);
}

/// Ordinary least squares of log10 Z = log10 a + b log10 R.
inline ZrCoefficients fit_zr(std::span<const double> z, std::span<const double> r) {
  if (z.size() != r.size()) throw std::invalid_argument("fit_zr: Z and R lengths differ");
  if (z.size() < 10) throw std::invalid_argument("fit_zr: need at least 10 pairs");
  const std::size_t n = z.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(z[i] > 0 && r[i] > 0)) throw std::invalid_argument("fit_zr: pairs must be positive");
    x[i] = std::log10(r[i]);
    y[i] = std::log10(z[i]);
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw undefined_result("fit_zr: singular fit (all rain rates equal)");
  ZrCoefficients c;
  c.b = sxy / sxx;
  c.a = std::pow(10.0, my - c.b * mx);
  c.provenance = ZrProvenance::fitted;
  c.n_samples = n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = y[i] - (my + c.b * (x[i] - mx));
    ss += res * res;
  }
  c.residual_db = 10.0 * std::sqrt(ss / static_cast<double>(n > 2 ? n - 2 : 1));
  if (!(c.b > 0)) throw undefined_result("fit_zr: non-positive exponent");
  return c;
}

}  // namespace bswrm
