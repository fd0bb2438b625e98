#pragma once

// Weather radar equation: radar constant, antenna correction factor,
// Rayleigh scattering, DSD reflectivity, path attenuation and sensitivity.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bswrm/core.hpp"
#include "bswrm/dsd.hpp"

namespace bswrm {

/// Two-dimensional Gaussian power pattern with the given half-power widths.
struct GaussianPattern {
  double hpbw_az = deg_to_rad(1.0);
  double hpbw_el = deg_to_rad(1.0);

  double operator()(double d_az, double d_el) const {
    const double u = d_az / hpbw_az, v = d_el / hpbw_el;
    return std::exp(-4.0 * std::log(2.0) * (u * u + v * v));
  }
};

/// Separable power pattern of a uniformly excited rectangular array.
struct UniformRectangularArray {
  int n_az = 8;
  int n_el = 4;
  double spacing = 0.5;  // element spacing in wavelengths

  static double factor(int n, double spacing, double angle) {
    const double psi = kPi * spacing * std::sin(angle);
    const double den = static_cast<double>(n) * std::sin(psi);
    if (std::abs(den) < 1e-12) return 1.0;
    const double af = std::sin(static_cast<double>(n) * psi) / den;
    return af * af;
  }

  double operator()(double d_az, double d_el) const {
    return factor(n_az, spacing, d_az) * factor(n_el, spacing, d_el);
  }

  /// Full width at half power along one axis, by bisection inside the main lobe.
  static double half_power_width(int n, double spacing) {
    double lo = 0.0, hi = std::asin(std::min(1.0, 1.0 / (static_cast<double>(n) * spacing)));
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (factor(n, spacing, mid) > 0.5 ? lo : hi) = mid;
    }
    return 2.0 * 0.5 * (lo + hi);
  }
  double hpbw_az() const { return half_power_width(n_az, spacing); }
  double hpbw_el() const { return half_power_width(n_el, spacing); }
};

/// Power pattern sampled on a regular (az offset, el offset) grid, bilinear
/// in between and zero outside.
struct TabulatedPattern {
  std::vector<double> az;  // strictly increasing offsets (rad)
  std::vector<double> el;
  std::vector<double> values;  // row-major [el x az]

  double operator()(double d_az, double d_el) const {
    if (az.size() < 2 || el.size() < 2) return 0.0;
    if (d_az < az.front() || d_az > az.back() || d_el < el.front() || d_el > el.back()) return 0.0;
    const auto ia = static_cast<std::size_t>(std::upper_bound(az.begin(), az.end(), d_az) - az.begin());
    const auto ie = static_cast<std::size_t>(std::upper_bound(el.begin(), el.end(), d_el) - el.begin());
    const std::size_t a1 = std::min(ia, az.size() - 1), a0 = a1 - 1;
    const std::size_t e1 = std::min(ie, el.size() - 1), e0 = e1 - 1;
    const double ta = (d_az - az[a0]) / (az[a1] - az[a0]);
    const double te = (d_el - el[e0]) / (el[e1] - el[e0]);
    auto v = [&](std::size_t e, std::size_t a) { return values[e * az.size() + a]; };
    return (1 - te) * ((1 - ta) * v(e0, a0) + ta * v(e0, a1)) + te * ((1 - ta) * v(e1, a0) + ta * v(e1, a1));
  }
};

using AntennaPattern = std::variant<GaussianPattern, UniformRectangularArray, TabulatedPattern>;

inline double evaluate_pattern(const AntennaPattern& p, double d_az, double d_el) {
  return std::visit([&](const auto& pat) { return pat(d_az, d_el); }, p);
}

struct RadarSystemSpec {
  std::string name;
  double carrier = 5.6e9;        // Hz
  double peak_power = 200e3;     // W
  double noise_figure = db_to_linear(4.0);  // linear
  double pulse_length = 0.33e-6;  // s
  double bandwidth = 1.0 / 0.33e-6;  // Hz
  double max_gain = db_to_linear(43.0);  // linear
  double hpbw_az = deg_to_rad(1.0);
  double hpbw_el = deg_to_rad(1.0);
  double dielectric_factor = 0.93;  // |K_w|^2
  double range_step = kSpeedOfLight * 0.33e-6 / 2.0;  // m
  AntennaPattern pattern = GaussianPattern{};

  double wavelength() const { return kSpeedOfLight / carrier; }
  /// Thermal noise k_B T0 B at the receiver input (W).
  double noise_power() const { return kBoltzmann * kReferenceTemperature * bandwidth; }

  void validate() const {
    if (!(carrier > 0 && peak_power > 0 && noise_figure > 0 && pulse_length > 0 && bandwidth > 0 && max_gain > 0 &&
          hpbw_az > 0 && hpbw_el > 0 && range_step > 0))
      throw std::invalid_argument("RadarSystemSpec: physical quantities must be positive");
    if (!(dielectric_factor > 0 && dielectric_factor <= 1))
      throw std::invalid_argument("RadarSystemSpec: |K_w|^2 must lie in (0, 1]");
  }
};

/// Reference S, C and X band systems and the base-station variant
/// obtained from the C-band one: P_tx x 1e-3, tau_tx x 24, G_max x 0.5,
/// beam solid angle x 18, carrier 4.9 GHz.
inline RadarSystemSpec system_preset(const std::string& name) {
  RadarSystemSpec s;
  s.name = name;
  auto weather_radar = [&](double f0, double ptx) {
    s.carrier = f0;
    s.peak_power = ptx;
    s.noise_figure = db_to_linear(4.0);
    s.pulse_length = 0.33e-6;
    s.bandwidth = 1.0 / s.pulse_length;
    s.max_gain = db_to_linear(43.0);
    s.hpbw_az = s.hpbw_el = deg_to_rad(1.0);
    s.range_step = kSpeedOfLight * s.pulse_length / 2.0;
    s.pattern = GaussianPattern{s.hpbw_az, s.hpbw_el};
  };
  if (name == "s-band") {
    weather_radar(2.7e9, 750e3);
  } else if (name == "c-band") {
    weather_radar(5.6e9, 200e3);
  } else if (name == "x-band") {
    weather_radar(9.4e9, 100e3);
  } else if (name == "bs") {
    weather_radar(5.6e9, 200e3);
    s.carrier = 4.9e9;
    s.peak_power *= 1e-3;
    s.pulse_length *= 24.0;
    s.max_gain *= 0.5;
    const double widen = std::sqrt(18.0);
    s.hpbw_az *= widen;
    s.hpbw_el *= widen;
    s.pattern = GaussianPattern{s.hpbw_az, s.hpbw_el};
  } else {
    throw std::invalid_argument("unknown system preset: " + name);
  }
  return s;
}

struct QuadratureOptions {
  int points_per_beamwidth = 16;  // grid intervals per HPBW along each axis
  int min_intervals = 64;
  int max_intervals = 8192;
};

/// Antenna correction factor relating a pattern to the Gaussian beam assumed
/// in the resolution-volume term:
///   F = 8 ln2 / (pi dphi dtheta) * int int f^2(phi - phi_g, theta - theta_g) cos(phi) dphi dtheta
/// over [-pi/2, pi/2]^2, by composite Simpson.
template <typename Pattern>
double antenna_correction_factor(const Pattern& pattern, double hpbw_az, double hpbw_el, QuadratureOptions opt = {},
                                 double boresight_az = 0.0, double boresight_el = 0.0) {
  if (!(hpbw_az > 0 && hpbw_el > 0)) throw std::invalid_argument("antenna_correction_factor: beamwidths must be positive");
  auto intervals = [&](double hpbw) {
    int n = static_cast<int>(std::ceil(kPi / (hpbw / opt.points_per_beamwidth)));
    n = std::clamp(n, opt.min_intervals, opt.max_intervals);
    return n + (n % 2);
  };
  const int na = intervals(hpbw_az), ne = intervals(hpbw_el);
  const double ha = kPi / na, he = kPi / ne;
  auto simpson_weight = [](int i, int n) { return (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
  std::vector<double> wa(static_cast<std::size_t>(na + 1)), ca(static_cast<std::size_t>(na + 1));
  for (int i = 0; i <= na; ++i) {
    const double phi = -kPi / 2 + i * ha;
    wa[static_cast<std::size_t>(i)] = simpson_weight(i, na);
    ca[static_cast<std::size_t>(i)] = std::cos(phi);
  }
  double sum = 0.0;
  for (int j = 0; j <= ne; ++j) {
    const double theta = -kPi / 2 + j * he;
    double row = 0.0;
    for (int i = 0; i <= na; ++i) {
      const double phi = -kPi / 2 + i * ha;
      const double f = pattern(phi - boresight_az, theta - boresight_el);
      row += wa[static_cast<std::size_t>(i)] * f * f * ca[static_cast<std::size_t>(i)];
    }
    sum += simpson_weight(j, ne) * row;
  }
  const double integral = sum * (ha / 3.0) * (he / 3.0);
  return 8.0 * std::log(2.0) / (kPi * hpbw_az * hpbw_el) * integral;
}

inline double antenna_correction_factor(const AntennaPattern& pattern, double hpbw_az, double hpbw_el,
                                        QuadratureOptions opt = {}) {
  return std::visit([&](const auto& p) { return antenna_correction_factor(p, hpbw_az, hpbw_el, opt); }, pattern);
}

/// Radar constant C (W m^2 per mm^6 m^-3). The B*tau_tx term applies when
/// received power is measured after range compression.
inline double radar_constant(const RadarSystemSpec& s, double correction_factor, bool compression_gain = true) {
  s.validate();
  if (!(correction_factor > 0)) throw std::invalid_argument("radar_constant: correction factor must be positive");
  const double lambda = s.wavelength();
  const double transmission = s.peak_power * s.max_gain * s.max_gain * lambda * lambda / std::pow(4.0 * kPi, 3);
  const double rayleigh = std::pow(kPi, 5) * s.dielectric_factor / std::pow(lambda, 4);
  const double volume = kPi * s.hpbw_az * s.hpbw_el / (8.0 * std::log(2.0)) * s.range_step;
  const double gain = compression_gain ? s.bandwidth * s.pulse_length : 1.0;
  return 1e-18 * transmission * rayleigh * volume * correction_factor * gain;
}

/// Copies frame-level quantities (carrier, bandwidth, pulse, range step) into
/// the system description so both describe the same radar.
inline RadarSystemSpec align_spec_to_frame(RadarSystemSpec spec, const FrameTiming& frame) {
  spec.carrier = frame.carrier;
  spec.bandwidth = frame.bandwidth;
  spec.pulse_length = frame.tau_tx;
  spec.range_step = frame.range_step();
  return spec;
}

inline double forward_radar_equation(double z, double range, double c, double two_way_loss = 1.0) {
  return c * z / (range * range) * two_way_loss;
}

/// Z = P_rx r^2 / (C L^2).
inline double invert_radar_equation(double received_power, double range, double c, double two_way_loss = 1.0) {
  if (!(range > 0 && c > 0)) throw std::invalid_argument("invert_radar_equation: range and C must be positive");
  if (!(two_way_loss > 0 && two_way_loss <= 1)) throw std::invalid_argument("invert_radar_equation: L^2 outside (0, 1]");
  return received_power * range * range / (c * two_way_loss);
}

/// Rayleigh backscatter cross section (mm^2) of a drop of diameter D (mm).
inline double rayleigh_backscatter(double diameter_mm, double wavelength_m, double dielectric_factor = 0.93) {
  if (!(diameter_mm > 0)) throw std::invalid_argument("rayleigh_backscatter: diameter must be positive");
  const double lambda_mm = wavelength_m * 1e3;
  const double d2 = diameter_mm * diameter_mm;
  return std::pow(kPi, 5) * dielectric_factor * d2 * d2 * d2 / std::pow(lambda_mm, 4);
}

/// Externally computed cross sections on a diameter grid.
struct ScatteringTable {
  double frequency = 0.0;
  std::string polarization = "h";
  std::vector<double> diameters;   // mm, strictly increasing
  std::vector<double> backscatter; // mm^2
  std::vector<double> extinction;  // mm^2

  void validate() const {
    if (diameters.size() < 2) throw std::invalid_argument("ScatteringTable: need at least two rows");
    if (backscatter.size() != diameters.size() || extinction.size() != diameters.size())
      throw std::invalid_argument("ScatteringTable: column lengths differ");
    for (std::size_t i = 0; i < diameters.size(); ++i) {
      if (i > 0 && !(diameters[i] > diameters[i - 1])) throw std::invalid_argument("ScatteringTable: grid not increasing");
      if (!(backscatter[i] >= 0 && extinction[i] >= 0)) throw std::invalid_argument("ScatteringTable: negative cross section");
    }
  }

  double wavelength() const { return kSpeedOfLight / frequency; }

  /// Linear interpolation; empty outside the tabulated range.
  std::optional<std::pair<double, double>> at(double d) const {
    if (d < diameters.front() || d > diameters.back()) return std::nullopt;
    auto it = std::lower_bound(diameters.begin(), diameters.end(), d);
    auto i = static_cast<std::size_t>(it - diameters.begin());
    if (diameters[i] == d) return std::make_pair(backscatter[i], extinction[i]);
    const double t = (d - diameters[i - 1]) / (diameters[i] - diameters[i - 1]);
    return std::make_pair(backscatter[i - 1] + t * (backscatter[i] - backscatter[i - 1]),
                          extinction[i - 1] + t * (extinction[i] - extinction[i - 1]));
  }
};

/// Rayleigh table on a grid. Extinction is the Rayleigh absorption
/// pi^2 D^3 Im(-K) / lambda, zero unless `im_minus_k` is given.
inline ScatteringTable rayleigh_table(std::span<const double> diameters, double frequency,
                                      double dielectric_factor = 0.93, double im_minus_k = 0.0) {
  ScatteringTable t;
  t.frequency = frequency;
  t.polarization = "rayleigh";
  const double lambda = kSpeedOfLight / frequency;
  for (double d : diameters) {
    t.diameters.push_back(d);
    t.backscatter.push_back(rayleigh_backscatter(d, lambda, dielectric_factor));
    t.extinction.push_back(kPi * kPi * d * d * d * im_minus_k / (lambda * 1e3));
  }
  t.validate();
  return t;
}

enum class Quadrature { trapezoid, binned };

namespace detail {
// Integral of g(D) N(D) over the part of the DSD grid covered by the table.
template <typename G>
double dsd_integral(std::span<const double> d, std::span<const double> n, std::span<const double> widths,
                    Quadrature rule, G&& g) {
  if (d.size() != n.size()) throw std::invalid_argument("dsd integral: grid/value size mismatch");
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto v = g(d[i]);
    if (!v) continue;
    x.push_back(d[i]);
    y.push_back(*v * n[i]);
    if (rule == Quadrature::binned) w.push_back(widths[i]);
  }
  if (x.empty()) throw std::invalid_argument("dsd integral: DSD grid does not overlap the scattering table");
  double sum = 0.0;
  if (rule == Quadrature::binned) {
    for (std::size_t i = 0; i < x.size(); ++i) sum += y[i] * w[i];
  } else {
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return sum;
}
}  // namespace detail

/// Equivalent reflectivity (mm^6 m^-3) of N(D) sampled on a grid, trapezoid
/// rule on the overlap with the table.
inline double reflectivity_from_dsd(std::span<const double> diameters, std::span<const double> concentrations,
                                    const ScatteringTable& table, double wavelength_m, double dielectric_factor = 0.93) {
  const double lambda_mm = wavelength_m * 1e3;
  const double pre = std::pow(lambda_mm, 4) / (std::pow(kPi, 5) * dielectric_factor);
  return pre * detail::dsd_integral(diameters, concentrations, {}, Quadrature::trapezoid, [&](double d) {
           auto v = table.at(d);
           return v ? std::optional<double>(v->first) : std::nullopt;
         });
}

/// Binned form for disdrometer records: sum over bins of sigma_b N dD.
inline double reflectivity_from_dsd(const DsdRecord& dsd, const ScatteringTable& table, double wavelength_m,
                                    double dielectric_factor = 0.93) {
  dsd.validate();
  const double lambda_mm = wavelength_m * 1e3;
  const double pre = std::pow(lambda_mm, 4) / (std::pow(kPi, 5) * dielectric_factor);
  return pre * detail::dsd_integral(dsd.diameters, dsd.concentrations, dsd.widths, Quadrature::binned, [&](double d) {
           auto v = table.at(d);
           return v ? std::optional<double>(v->first) : std::nullopt;
         });
}

/// Specific attenuation k_e (m^-1) from extinction cross sections.
inline double specific_attenuation(std::span<const double> diameters, std::span<const double> concentrations,
                                   const ScatteringTable& table) {
  // mm^2 * m^-3 mm^-1 * mm = 1e-6 m^-1
  return 1e-6 * detail::dsd_integral(diameters, concentrations, {}, Quadrature::trapezoid, [&](double d) {
           auto v = table.at(d);
           return v ? std::optional<double>(v->second) : std::nullopt;
         });
}

/// Two-way loss exp(-2 int_0^r k_e dr) at every point of the range grid.
/// k_e is taken constant at its first value between r = 0 and ranges[0].
inline std::vector<double> path_integrated_attenuation(std::span<const double> ranges, std::span<const double> k_e) {
  if (ranges.size() != k_e.size() || ranges.empty()) throw std::invalid_argument("path_integrated_attenuation: size mismatch");
  std::vector<double> out(ranges.size());
  if (ranges[0] < 0) throw std::invalid_argument("path_integrated_attenuation: negative range");
  double pia = 0.0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (k_e[i] < 0) throw std::invalid_argument("path_integrated_attenuation: negative specific attenuation");
    if (i == 0) {
      pia = k_e[0] * ranges[0];
    } else {
      if (!(ranges[i] > ranges[i - 1])) throw std::invalid_argument("path_integrated_attenuation: ranges not increasing");
      pia += 0.5 * (k_e[i] + k_e[i - 1]) * (ranges[i] - ranges[i - 1]);
    }
    out[i] = std::exp(-2.0 * pia);
  }
  return out;
}

struct SensitivityPoint {
  double range = 0.0;
  double mdz_dbz = 0.0;
  double mdr_mmh = 0.0;
};

/// Minimum detectable reflectivity 10 log10(P_noise F_n SNR_min r^2 / C) and
/// the matching minimum detectable rain rate through the Z-R law.
inline std::vector<SensitivityPoint> mdz(const RadarSystemSpec& s, double c, std::span<const double> ranges,
                                         const ZrCoefficients& zr, double snr_min = 1.0) {
  if (!(c > 0 && snr_min > 0)) throw std::invalid_argument("mdz: C and SNR_min must be positive");
  const double pmin = s.noise_power() * s.noise_figure * snr_min;
  std::vector<SensitivityPoint> out;
  out.reserve(ranges.size());
  for (double r : ranges) {
    if (!(r > 0)) throw std::invalid_argument("mdz: ranges must be positive");
    const double z = pmin * r * r / c;
    out.push_back({r, linear_to_db(z), z_to_r(z, zr)});
  }
  return out;
}

/// MDZ in linear units at one range for an explicit noise level.
inline double mdz_linear(double noise_power_w, double range, double c, double snr_min = 1.0) {
  return noise_power_w * snr_min * range * range / c;
}

}  // namespace bswrm
