#pragma once

// Domain types shared by the whole processing chain: frame timing, beam
// geometry, I/Q cubes, range-Doppler spectra, clutter masks and products.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bswrm {

using cdouble = std::complex<double>;
using cfloat = std::complex<float>;

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K
inline constexpr double kReferenceTemperature = 290.0; // K
inline constexpr double kPi = std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Thrown when a computed quantity is undefined for the given data (e.g.
/// moments of an all-zero spectrum, a singular fit).
class undefined_result : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense 2-D array.
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Grid2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const Grid2&, const Grid2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Pulse timing of the weather-radar slot inside the base-station frame.
/// The slow-time interval is always the sum of the four sub-intervals.
struct FrameTiming {
  double tau_tx = 0.0;  // transmit pulse length (s)
  double tau_gu = 0.0;  // Tx/Rx switching guard (s)
  double tau_rx = 0.0;  // receive window (s)
  double tau_id = 0.0;  // idle time handed back to the comms service (s)
  std::uint32_t pulses_per_beam = 0;
  double bandwidth = 0.0;      // occupied bandwidth B (Hz)
  double adc_bandwidth = 0.0;  // sampling bandwidth B_adc (Hz)
  double carrier = 0.0;        // f0 (Hz)

  double slow_time() const { return tau_tx + tau_gu + tau_rx + tau_id; }
  double wavelength() const { return kSpeedOfLight / carrier; }
  double range_step() const { return kSpeedOfLight / (2.0 * adc_bandwidth); }
  std::size_t max_gates() const {
    return static_cast<std::size_t>(std::floor(kSpeedOfLight * tau_rx / 2.0 / range_step() * (1.0 + 1e-12)));
  }

  void validate() const {
    if (!(tau_tx > 0 && tau_gu > 0 && tau_rx > 0 && tau_id > 0))
      throw std::invalid_argument("FrameTiming: all durations must be strictly positive");
    if (pulses_per_beam < 2) throw std::invalid_argument("FrameTiming: need at least two pulses per beam");
    if (!(bandwidth > 0 && adc_bandwidth > 0 && carrier > 0))
      throw std::invalid_argument("FrameTiming: bandwidths and carrier must be positive");
    if (bandwidth > adc_bandwidth) throw std::invalid_argument("FrameTiming: bandwidth exceeds ADC bandwidth");
    if (tau_tx * bandwidth < 1.0) throw std::invalid_argument("FrameTiming: tau_tx * B must be >= 1");
  }
};

/// Blind-zone edge and maximum unambiguous range, in metres.
inline std::pair<double, double> blind_zone_and_max_range(const FrameTiming& f) {
  return {kSpeedOfLight * (f.tau_tx + f.tau_gu) / 2.0, kSpeedOfLight * f.tau_rx / 2.0};
}

/// Doppler frequencies k*df for k = -n/2 .. n/2-1 with df = 1/(n*T_s).
inline std::vector<double> doppler_axis(double slow_time, std::size_t n_pulses) {
  if (n_pulses < 2 || n_pulses % 2 != 0)
    throw std::invalid_argument("doppler_axis: n_pulses must be even and >= 2");
  const double df = 1.0 / (static_cast<double>(n_pulses) * slow_time);
  std::vector<double> axis(n_pulses);
  const auto half = static_cast<long>(n_pulses / 2);
  for (long k = -half; k < half; ++k) axis[static_cast<std::size_t>(k + half)] = static_cast<double>(k) * df;
  return axis;
}

inline std::vector<double> doppler_axis(const FrameTiming& frame, std::size_t n_pulses) {
  return doppler_axis(frame.slow_time(), n_pulses);
}

/// Range of gate m (0-based): gate m covers r = (m+1)*dr.
inline double gate_range(std::size_t gate, double range_step) {
  return static_cast<double>(gate + 1) * range_step;
}

struct Vec3 {
  double x = 0, y = 0, z = 0;  // east, north, up (m)
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Pointing and pattern summary of one beam. Azimuth is clockwise from north.
struct BeamGeometry {
  std::uint32_t id = 0;
  double azimuth = 0.0;    // rad
  double elevation = 0.0;  // rad, negative for downtilted beams
  double hpbw_az = deg_to_rad(1.0);
  double hpbw_el = deg_to_rad(1.0);
  double max_gain = 1.0;  // linear
  Vec3 site;
  double radar_constant = std::numeric_limits<double>::quiet_NaN();  // C_g, NaN when not calibrated

  bool has_radar_constant() const { return std::isfinite(radar_constant) && radar_constant > 0; }

  void validate() const {
    if (!(hpbw_az > 0 && hpbw_az < kPi && hpbw_el > 0 && hpbw_el < kPi))
      throw std::invalid_argument("BeamGeometry: beamwidths must lie in (0, pi)");
    if (!(max_gain > 0)) throw std::invalid_argument("BeamGeometry: max_gain must be positive");
  }

  /// Unit line-of-sight vector.
  Vec3 direction() const {
    const double ce = std::cos(elevation);
    return {ce * std::sin(azimuth), ce * std::cos(azimuth), std::sin(elevation)};
  }

  Vec3 position_at(double range) const {
    const Vec3 d = direction();
    return {site.x + range * d.x, site.y + range * d.y, site.z + range * d.z};
  }

  friend bool operator==(const BeamGeometry& a, const BeamGeometry& b) {
    auto same = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
    return a.id == b.id && a.azimuth == b.azimuth && a.elevation == b.elevation && a.hpbw_az == b.hpbw_az &&
           a.hpbw_el == b.hpbw_el && a.max_gain == b.max_gain && a.site == b.site &&
           same(a.radar_constant, b.radar_constant);
  }
};

/// Complex samples for every (beam, pulse, gate), stored beam-major, then
/// pulse, then gate. Samples are range-compressed unless stated otherwise.
class IqCube {
 public:
  IqCube() = default;
  IqCube(FrameTiming frame, std::vector<BeamGeometry> beams, std::size_t n_gates, double timestamp = 0.0)
      : frame_(frame), beams_(std::move(beams)), n_gates_(n_gates), timestamp_(timestamp) {
    frame_.validate();
    for (const auto& b : beams_) b.validate();
    if (beams_.empty()) throw std::invalid_argument("IqCube: at least one beam required");
    if (n_gates_ == 0) throw std::invalid_argument("IqCube: at least one range gate required");
    if (n_gates_ > frame_.max_gates())
      throw std::invalid_argument("IqCube: gates extend beyond the maximum unambiguous range");
    samples_.assign(beams_.size() * frame_.pulses_per_beam * n_gates_, cfloat{});
  }

  const FrameTiming& frame() const { return frame_; }
  const std::vector<BeamGeometry>& beams() const { return beams_; }
  std::size_t n_beams() const { return beams_.size(); }
  std::size_t n_pulses() const { return frame_.pulses_per_beam; }
  std::size_t n_gates() const { return n_gates_; }
  double range_step() const { return frame_.range_step(); }
  double timestamp() const { return timestamp_; }
  /// Sweep duration N_g * N_p' * T_s.
  double sweep_period() const { return static_cast<double>(n_beams() * n_pulses()) * frame_.slow_time(); }

  cfloat& at(std::size_t beam, std::size_t pulse, std::size_t gate) {
    return samples_[(beam * n_pulses() + pulse) * n_gates_ + gate];
  }
  const cfloat& at(std::size_t beam, std::size_t pulse, std::size_t gate) const {
    return samples_[(beam * n_pulses() + pulse) * n_gates_ + gate];
  }

  /// Slow-time series of one beam as a [gate x pulse] grid in double precision.
  Grid2<cdouble> beam_series(std::size_t beam) const {
    Grid2<cdouble> out(n_gates_, n_pulses());
    for (std::size_t p = 0; p < n_pulses(); ++p)
      for (std::size_t m = 0; m < n_gates_; ++m) out(m, p) = cdouble(at(beam, p, m));
    return out;
  }

  std::vector<cfloat>& samples() { return samples_; }
  const std::vector<cfloat>& samples() const { return samples_; }

 private:
  FrameTiming frame_;
  std::vector<BeamGeometry> beams_;
  std::size_t n_gates_ = 0;
  double timestamp_ = 0.0;
  std::vector<cfloat> samples_;
};

enum class WindowKind { rectangular, blackman, blackman_nuttall };

inline std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::rectangular: return "rectangular";
    case WindowKind::blackman: return "blackman";
    case WindowKind::blackman_nuttall: return "blackman-nuttall";
  }
  return "unknown";
}

inline WindowKind window_from_string(const std::string& s) {
  if (s == "rectangular" || s == "rect") return WindowKind::rectangular;
  if (s == "blackman") return WindowKind::blackman;
  if (s == "blackman-nuttall" || s == "blackman_nuttall") return WindowKind::blackman_nuttall;
  throw std::invalid_argument("unknown window kind: " + s);
}

/// Complex amplitude spectrum and PSD over [gate x Doppler bin]; column j is
/// Doppler index k = j - N_p/2.
struct RangeDopplerSpectrum {
  Grid2<cdouble> amplitude;
  Grid2<double> psd;
  double doppler_step = 0.0;
  std::size_t n_pulses = 0;
  WindowKind window = WindowKind::blackman;
  std::uint32_t beam_id = 0;
};

enum class MaskKind { cv_driven, persistency_driven };

inline std::string to_string(MaskKind k) { return k == MaskKind::cv_driven ? "cv" : "persistency"; }

/// Binary range-Doppler map, 0 marks clutter. Same column convention as
/// RangeDopplerSpectrum.
struct ClutterMask {
  Grid2<std::uint8_t> mask;
  MaskKind kind = MaskKind::cv_driven;
  std::size_t offset = 0;
  double threshold = 0.0;

  std::size_t n_gates() const { return mask.rows(); }
  std::size_t n_bins() const { return mask.cols(); }
  std::size_t clutter_count() const {
    std::size_t n = 0;
    for (auto v : mask.data()) n += (v == 0);
    return n;
  }
};

/// Columns outside the differential-phase half band [-N/4, N/4-1].
inline bool outside_half_band(std::size_t column, std::size_t n_bins) {
  const long k = static_cast<long>(column) - static_cast<long>(n_bins / 2);
  const long q = static_cast<long>(n_bins / 4);
  return k < -q || k > q - 1;
}

/// Sets every bin outside the half band to 1 (clutter-free).
inline void enforce_outer_band(Grid2<std::uint8_t>& mask) {
  for (std::size_t m = 0; m < mask.rows(); ++m)
    for (std::size_t j = 0; j < mask.cols(); ++j)
      if (outside_half_band(j, mask.cols())) mask(m, j) = 1;
}

namespace gate_flags {
inline constexpr std::uint8_t blind_zone = 1u << 0;
inline constexpr std::uint8_t below_mdz = 1u << 1;
inline constexpr std::uint8_t no_power = 1u << 2;
inline constexpr std::uint8_t interpolation_fallback = 1u << 3;
inline constexpr std::uint8_t clutter_filtered = 1u << 4;
}  // namespace gate_flags

/// Moments and retrieval for one gate. Invalid gates hold NaN in every
/// numeric field; zero is never used as a placeholder.
struct GateProduct {
  double reflectivity = std::numeric_limits<double>::quiet_NaN();  // mm^6 m^-3
  double velocity = std::numeric_limits<double>::quiet_NaN();      // m/s, positive away
  double spread = std::numeric_limits<double>::quiet_NaN();        // m/s
  double rain_rate = std::numeric_limits<double>::quiet_NaN();     // mm/h
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
  std::uint8_t flags = 0;

  double dbz() const { return 10.0 * std::log10(reflectivity); }
};

struct ProductGrid {
  std::vector<BeamGeometry> beams;
  std::size_t n_gates = 0;
  double range_step = 0.0;
  double timestamp = 0.0;
  Grid2<GateProduct> gates;  // [beam x gate]

  ProductGrid() = default;
  ProductGrid(std::vector<BeamGeometry> b, std::size_t gates_per_beam, double dr, double ts)
      : beams(std::move(b)), n_gates(gates_per_beam), range_step(dr), timestamp(ts),
        gates(beams.size(), gates_per_beam) {}

  std::size_t n_beams() const { return beams.size(); }
  GateProduct& at(std::size_t beam, std::size_t gate) { return gates(beam, gate); }
  const GateProduct& at(std::size_t beam, std::size_t gate) const { return gates(beam, gate); }
};

}  // namespace bswrm
