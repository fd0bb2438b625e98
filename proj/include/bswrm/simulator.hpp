#pragma once

// Synthetic scenes: correlated log-normal rain fields, phase-stable ground
// clutter and thermal noise, rendered into range-compressed I/Q cubes.
//
// The rain field is a simplified stand-in for a full DSD spatialization: a
// periodic Gaussian random field in dBZ with Gaussian covariance
// exp(-h^2 / L^2), advected rigidly, with k_e = coeff * Z^exponent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "bswrm/core.hpp"
#include "bswrm/fft.hpp"
#include "bswrm/parallel.hpp"
#include "bswrm/radar.hpp"

namespace bswrm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent sub-stream identified by up to three indices.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b) ^ c);
}

struct RainSample {
  double z = 0.0;       // mm^6 m^-3
  double width = 0.0;   // spectrum width (m/s)
  double k_e = 0.0;     // m^-1
  double u = 0.0, v = 0.0;  // horizontal wind (m/s)
};

/// Gridded rain summary. Cell (ix, iy) sits at origin + (ix, iy) * spacing.
struct RainField {
  std::size_t nx = 0, ny = 0;
  double spacing = 100.0;
  double x0 = 0.0, y0 = 0.0;
  Grid2<double> z;      // [iy x ix], linear
  Grid2<double> width;
  Grid2<double> k_e;
  double wind_u = 0.0, wind_v = 0.0;  // uniform wind, also the advection velocity
  bool periodic = true;

  void validate() const {
    if (nx < 2 || ny < 2) throw std::invalid_argument("RainField: grid too small");
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z.data()[i] < 0 || width.data()[i] < 0 || k_e.data()[i] < 0)
        throw std::invalid_argument("RainField: negative Z, width or k_e");
  }

  bool covers(double x, double y) const {
    if (periodic) return true;
    const double fx = (x - x0) / spacing, fy = (y - y0) / spacing;
    return fx >= 0 && fy >= 0 && fx <= static_cast<double>(nx - 1) && fy <= static_cast<double>(ny - 1);
  }

  /// Bilinear sample at (x, y) after advecting the field for `time` seconds.
  RainSample sample(double x, double y, double time = 0.0) const {
    x -= wind_u * time;
    y -= wind_v * time;
    if (!covers(x, y)) throw std::invalid_argument("RainField: point outside the field extent");
    double fx = (x - x0) / spacing, fy = (y - y0) / spacing;
    const auto wrap = [](double f, std::size_t n) {
      const double p = static_cast<double>(n);
      f = std::fmod(f, p);
      return f < 0 ? f + p : f;
    };
    if (periodic) fx = wrap(fx, nx), fy = wrap(fy, ny);
    auto i0 = static_cast<std::size_t>(std::floor(fx)), j0 = static_cast<std::size_t>(std::floor(fy));
    std::size_t i1 = i0 + 1, j1 = j0 + 1;
    if (periodic) {
      i0 %= nx, j0 %= ny, i1 %= nx, j1 %= ny;
    } else {
      i1 = std::min(i1, nx - 1), j1 = std::min(j1, ny - 1);
    }
    const double tx = fx - std::floor(fx), ty = fy - std::floor(fy);
    auto lerp = [&](const Grid2<double>& g) {
      return (1 - ty) * ((1 - tx) * g(j0, i0) + tx * g(j0, i1)) + ty * ((1 - tx) * g(j1, i0) + tx * g(j1, i1));
    };
    return {lerp(z), lerp(width), lerp(k_e), wind_u, wind_v};
  }
};

struct RainFieldConfig {
  std::uint64_t seed = 1;
  std::size_t nx = 128, ny = 128;
  double spacing = 100.0;  // m
  double x0 = -6400.0, y0 = -6400.0;
  double correlation_length = 1000.0;  // m, e-folding distance of the covariance
  double mean_dbz = 35.0;
  double sd_dbz = 5.0;
  double advection_u = 0.0, advection_v = 0.0;  // m/s
  double width = 1.0;  // spectrum width (m/s)
  double ke_coeff = 2.79e-8;  // k_e = coeff * Z^exponent (m^-1)
  double ke_exponent = 0.78;
};

/// Unit-variance periodic Gaussian field with covariance exp(-h^2 / L^2),
/// from separable convolution of white noise.
inline Grid2<double> correlated_gaussian_field(std::uint64_t seed, std::size_t nx, std::size_t ny, double spacing,
                                               double correlation_length) {
  if (!(correlation_length > spacing)) throw std::invalid_argument("rain field: correlation length must exceed grid spacing");
  std::mt19937_64 rng(stream_seed(seed, 0x7261696eULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid2<double> white(ny, nx);
  for (auto& v : white.data()) v = normal(rng);

  // Gaussian kernel with sigma_k = L / 2 gives a covariance with e-folding length L.
  const double sigma_cells = correlation_length / (2.0 * spacing);
  const auto half = static_cast<long>(std::ceil(4.0 * sigma_cells));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double energy = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double k = std::exp(-0.5 * (static_cast<double>(i) / sigma_cells) * (static_cast<double>(i) / sigma_cells));
    kernel[static_cast<std::size_t>(i + half)] = k;
    energy += k * k;
  }
  for (auto& k : kernel) k /= std::sqrt(energy);

  auto wrap = [](long i, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  Grid2<double> tmp(ny, nx);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      double s = 0.0;
      for (long i = -half; i <= half; ++i)
        s += kernel[static_cast<std::size_t>(i + half)] * white(y, wrap(static_cast<long>(x) + i, nx));
      tmp(y, x) = s;
    }
  Grid2<double> out(ny, nx);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      double s = 0.0;
      for (long i = -half; i <= half; ++i)
        s += kernel[static_cast<std::size_t>(i + half)] * tmp(wrap(static_cast<long>(y) + i, ny), x);
      out(y, x) = s;
    }
  return out;
}

inline RainField generate_rain_field(const RainFieldConfig& cfg) {
  RainField f;
  f.nx = cfg.nx;
  f.ny = cfg.ny;
  f.spacing = cfg.spacing;
  f.x0 = cfg.x0;
  f.y0 = cfg.y0;
  f.wind_u = cfg.advection_u;
  f.wind_v = cfg.advection_v;
  f.periodic = true;
  f.z = Grid2<double>(cfg.ny, cfg.nx);
  f.width = Grid2<double>(cfg.ny, cfg.nx, cfg.width);
  f.k_e = Grid2<double>(cfg.ny, cfg.nx);
  if (cfg.width < 0 || cfg.sd_dbz < 0) throw std::invalid_argument("rain field: negative width or dBZ spread");
  Grid2<double> g;
  if (cfg.sd_dbz > 0) g = correlated_gaussian_field(cfg.seed, cfg.nx, cfg.ny, cfg.spacing, cfg.correlation_length);
  for (std::size_t i = 0; i < f.z.size(); ++i) {
    const double dbz = cfg.mean_dbz + (cfg.sd_dbz > 0 ? cfg.sd_dbz * g.data()[i] : 0.0);
    const double z = db_to_linear(dbz);
    f.z.data()[i] = z;
    f.k_e.data()[i] = cfg.ke_coeff * std::pow(z, cfg.ke_exponent);
  }
  f.validate();
  return f;
}

inline RainField uniform_rain_field(double dbz, double width, double wind_u = 0.0, double wind_v = 0.0,
                                    double ke = 0.0) {
  RainField f;
  f.nx = f.ny = 2;
  f.spacing = 1e6;
  f.x0 = f.y0 = -1e6;
  f.z = Grid2<double>(2, 2, db_to_linear(dbz));
  f.width = Grid2<double>(2, 2, width);
  f.k_e = Grid2<double>(2, 2, ke);
  f.wind_u = wind_u;
  f.wind_v = wind_v;
  f.periodic = true;
  return f;
}

struct ClutterPoint {
  Vec3 position;
  double rcs = 1.0;      // m^2
  double jitter = 0.01;  // rad per pulse (iid)
};

/// Clutter return with a prescribed received power at one (beam, gate).
struct GateClutter {
  std::size_t beam = 0;
  std::size_t gate = 0;
  double power = 0.0;    // W
  double jitter = 0.01;  // rad per pulse
};

struct ClutterScene {
  std::vector<ClutterPoint> points;
  std::vector<GateClutter> gates;

  void validate() const {
    for (const auto& p : points)
      if (p.rcs < 0 || p.jitter < 0) throw std::invalid_argument("ClutterScene: negative RCS or jitter");
    for (const auto& g : gates)
      if (g.power < 0 || g.jitter < 0) throw std::invalid_argument("ClutterScene: negative power or jitter");
  }
};

/// Per-gate ground truth of a synthesized sweep.
struct GateTruth {
  double z = 0.0;
  double velocity = 0.0;  // radial, positive away
  double width = 0.0;
  double two_way_loss = 1.0;
  double rain_power = 0.0;
  double clutter_power = 0.0;
  double noise_power = 0.0;
  bool blind = false;
};

struct SceneTruth {
  Grid2<GateTruth> gates;  // [beam x gate]
};

struct Synthesis {
  IqCube cube;
  SceneTruth truth;
};

struct SynthesisOptions {
  std::uint64_t seed = 1;
  double time = 0.0;        // advection time applied to the field (s)
  double timestamp = 0.0;   // written to the cube
  bool rain = true;
  unsigned threads = 0;
};

namespace detail {

// Complex Gaussian process with a Gaussian PSD (aliased over +-3 PRFs),
// realized by spectral shaping of white noise.
inline std::vector<cdouble> gaussian_spectrum_series(std::mt19937_64& rng, std::size_t n, double slow_time,
                                                     double power, double center_hz, double width_hz) {
  std::size_t nfft = 1;
  while (nfft < 4 * n) nfft <<= 1;
  const double prf = 1.0 / slow_time;
  const double df = prf / static_cast<double>(nfft);
  std::vector<double> psd(nfft, 0.0);
  double total = 0.0;
  if (width_hz < 0.1 * df) {
    double f = std::fmod(center_hz, prf);
    if (f < 0) f += prf;
    psd[static_cast<std::size_t>(std::llround(f / df)) % nfft] = 1.0;
    total = 1.0;
  } else {
    for (std::size_t k = 0; k < nfft; ++k) {
      const double fk = static_cast<double>(k) * df;
      double v = 0.0;
      for (int a = -3; a <= 3; ++a) {
        const double d = (fk - center_hz + a * prf) / width_hz;
        v += std::exp(-0.5 * d * d);
      }
      psd[k] = v;
      total += v;
    }
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cdouble> spec(nfft);
  for (std::size_t k = 0; k < nfft; ++k) {
    const cdouble w(normal(rng), normal(rng));
    spec[k] = std::sqrt(power * psd[k] / total) * w;
  }
  auto series = fft::inverse(spec);
  series.resize(n);
  return series;
}

}  // namespace detail

/// Renders rain, clutter and noise into a range-compressed I/Q cube.
/// Beams without a calibrated radar constant get C from `spec` with F = 1.
inline Synthesis synthesize_iq(const RainField& field, const ClutterScene& clutter, const RadarSystemSpec& base_spec,
                               const FrameTiming& frame, std::vector<BeamGeometry> beams, std::size_t n_gates,
                               const SynthesisOptions& opt = {}) {
  frame.validate();
  field.validate();
  clutter.validate();
  const RadarSystemSpec spec = align_spec_to_frame(base_spec, frame);
  for (auto& b : beams)
    if (!b.has_radar_constant()) b.radar_constant = radar_constant(spec, 1.0);

  Synthesis out{IqCube(frame, beams, n_gates, opt.timestamp), {}};
  out.truth.gates = Grid2<GateTruth>(beams.size(), n_gates);
  const double lambda = frame.wavelength();
  const double ts = frame.slow_time();
  const double dr = frame.range_step();
  const std::size_t np = frame.pulses_per_beam;
  const double r_min = blind_zone_and_max_range(frame).first;
  const double noise = kBoltzmann * kReferenceTemperature * frame.bandwidth * spec.noise_figure;

  // Range of every gate must be inside the field before any work starts.
  for (const auto& b : beams)
    for (std::size_t m = 0; m < n_gates; ++m) {
      const Vec3 p = b.position_at(gate_range(m, dr));
      const double x = p.x - field.wind_u * opt.time, y = p.y - field.wind_v * opt.time;
      if (opt.rain && !field.covers(x, y)) throw std::invalid_argument("synthesize_iq: gate beyond the rain field extent");
    }

  parallel_for(beams.size(), [&](std::size_t bi) {
    const BeamGeometry& beam = beams[bi];
    const double c = beam.radar_constant;
    std::vector<double> ranges(n_gates), ke(n_gates);
    std::vector<RainSample> rain(n_gates);
    for (std::size_t m = 0; m < n_gates; ++m) {
      ranges[m] = gate_range(m, dr);
      if (opt.rain) {
        const Vec3 p = beam.position_at(ranges[m]);
        rain[m] = field.sample(p.x, p.y, opt.time);
      }
      ke[m] = rain[m].k_e;
    }
    const auto loss = path_integrated_attenuation(ranges, ke);
    const Vec3 dir = beam.direction();

    // Clutter power per gate from point scatterers and explicit gate entries.
    std::vector<std::vector<std::pair<double, double>>> gate_clutter(n_gates);  // (power, jitter)
    const GaussianPattern pattern{beam.hpbw_az, beam.hpbw_el};
    for (const auto& pt : clutter.points) {
      const Vec3 d{pt.position.x - beam.site.x, pt.position.y - beam.site.y, pt.position.z - beam.site.z};
      const double r = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
      if (!(r > 0)) continue;
      const long gate = std::lround(r / dr) - 1;
      if (gate < 0 || gate >= static_cast<long>(n_gates)) continue;
      const double az = std::atan2(d.x, d.y);
      const double el = std::asin(d.z / r);
      double daz = std::remainder(az - beam.azimuth, 2 * kPi);
      const double f = pattern(daz, el - beam.elevation);
      const double p = spec.peak_power * beam.max_gain * beam.max_gain * lambda * lambda * pt.rcs * f * f *
                       spec.bandwidth * spec.pulse_length / (std::pow(4 * kPi, 3) * std::pow(r, 4));
      gate_clutter[static_cast<std::size_t>(gate)].emplace_back(p, pt.jitter);
    }
    for (const auto& g : clutter.gates)
      if (g.beam == bi && g.gate < n_gates) gate_clutter[g.gate].emplace_back(g.power, g.jitter);

    for (std::size_t m = 0; m < n_gates; ++m) {
      GateTruth& t = out.truth.gates(bi, m);
      t.blind = ranges[m] < r_min;
      t.noise_power = noise;
      std::vector<cdouble> x(np, cdouble{});
      if (!t.blind) {
        if (opt.rain) {
          const RainSample& s = rain[m];
          t.z = s.z;
          t.velocity = s.u * dir.x + s.v * dir.y;
          t.width = s.width;
          t.two_way_loss = loss[m];
          t.rain_power = s.z > 0 ? forward_radar_equation(s.z, ranges[m], c, loss[m]) : 0.0;
          if (t.rain_power > 0) {
            std::mt19937_64 rng(stream_seed(opt.seed, bi, m, 1));
            x = detail::gaussian_spectrum_series(rng, np, ts, t.rain_power, -2.0 * t.velocity / lambda,
                                                 2.0 * t.width / lambda);
          }
        }
        std::mt19937_64 crng(stream_seed(opt.seed, bi, m, 2));
        std::uniform_real_distribution<double> phase0(-kPi, kPi);
        for (const auto& [p, jitter] : gate_clutter[m]) {
          t.clutter_power += p;
          const double amp = std::sqrt(p);
          const double base = phase0(crng);
          std::normal_distribution<double> jit(0.0, jitter > 0 ? jitter : 1.0);
          for (std::size_t k = 0; k < np; ++k) {
            const double ph = base + (jitter > 0 ? jit(crng) : 0.0);
            x[k] += std::polar(amp, ph);
          }
        }
      }
      std::mt19937_64 nrng(stream_seed(opt.seed, bi, m, 3));
      std::normal_distribution<double> normal(0.0, std::sqrt(noise / 2.0));
      for (std::size_t k = 0; k < np; ++k) {
        x[k] += cdouble(normal(nrng), normal(nrng));
        out.cube.at(bi, k, m) = cfloat(x[k]);
      }
    }
  }, opt.threads);
  return out;
}

/// Evenly spaced beams of one site.
inline std::vector<BeamGeometry> sector_beams(Vec3 site, double first_azimuth, double azimuth_step, std::size_t count,
                                              double elevation, double hpbw_az, double hpbw_el, double max_gain,
                                              std::uint32_t first_id = 0) {
  std::vector<BeamGeometry> beams;
  for (std::size_t i = 0; i < count; ++i) {
    BeamGeometry b;
    b.id = first_id + static_cast<std::uint32_t>(i);
    b.azimuth = first_azimuth + static_cast<double>(i) * azimuth_step;
    b.elevation = elevation;
    b.hpbw_az = hpbw_az;
    b.hpbw_el = hpbw_el;
    b.max_gain = max_gain;
    b.site = site;
    beams.push_back(b);
  }
  return beams;
}

/// Horizontal wind projected on the line of sight from `site` to `point`,
/// positive away from the site.
inline double radial_velocity(const Vec3& site, const Vec3& point, double u, double v) {
  const double dx = point.x - site.x, dy = point.y - site.y, dz = point.z - site.z;
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(r > 0)) throw std::invalid_argument("radial_velocity: point coincides with the site");
  return (u * dx + v * dy) / r;
}

struct SiteGeometry {
  std::vector<BeamGeometry> beams;
  std::size_t n_gates = 0;
  double range_step = 0.0;
};

struct CommonGrid {
  double x0 = 0.0, y0 = 0.0;
  std::size_t nx = 0, ny = 0;
  double spacing = 100.0;
};

struct PairedCell {
  std::size_t ix = 0, iy = 0;
  double x = 0.0, y = 0.0;
  std::size_t beam_a = 0, gate_a = 0;
  std::size_t beam_b = 0, gate_b = 0;
};

/// (beam index, gate) of a site whose resolution cell contains the horizontal
/// point: azimuth within half a beamwidth of the nearest beam and slant
/// range within half a gate of the gate centre.
inline std::optional<std::pair<std::size_t, std::size_t>> locate_gate(const SiteGeometry& site, double x, double y) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  double best_off = 0.0;
  for (std::size_t b = 0; b < site.beams.size(); ++b) {
    const BeamGeometry& beam = site.beams[b];
    const double dx = x - beam.site.x, dy = y - beam.site.y;
    const double rho = std::hypot(dx, dy);
    if (!(rho > 0)) continue;
    const double off = std::abs(std::remainder(std::atan2(dx, dy) - beam.azimuth, 2 * kPi));
    if (off > beam.hpbw_az / 2) continue;
    const double slant = rho / std::cos(beam.elevation);
    const long gate = std::lround(slant / site.range_step) - 1;
    if (gate < 0 || gate >= static_cast<long>(site.n_gates)) continue;
    if (!best || off < best_off) {
      best = std::make_pair(b, static_cast<std::size_t>(gate));
      best_off = off;
    }
  }
  return best;
}

/// Cells of the common grid sampled by both sites.
inline std::vector<PairedCell> project_two_sites(const SiteGeometry& a, const SiteGeometry& b, const CommonGrid& grid) {
  std::vector<PairedCell> out;
  for (std::size_t iy = 0; iy < grid.ny; ++iy)
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x0 + static_cast<double>(ix) * grid.spacing;
      const double y = grid.y0 + static_cast<double>(iy) * grid.spacing;
      const auto ga = locate_gate(a, x, y);
      if (!ga) continue;
      const auto gb = locate_gate(b, x, y);
      if (!gb) continue;
      out.push_back({ix, iy, x, y, ga->first, ga->second, gb->first, gb->second});
    }
  return out;
}

}  // namespace bswrm
