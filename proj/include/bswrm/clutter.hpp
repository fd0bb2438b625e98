#pragma once

// Ground-clutter identification and suppression: staggered sub-sampling,
// differential phase, circular variance, CV and persistency masks, masking
// and Gaussian spectral interpolation of the removed bins.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bswrm/core.hpp"
#include "bswrm/spectral.hpp"

namespace bswrm {

/// Offset/shift layout for the staggered differential-phase estimate.
struct SubsampleParams {
  std::size_t offset = 20;       // o, even
  std::size_t shift_step = 5;    // delta s
  std::size_t n_shifts = 13;     // N_D
  std::size_t window_len = 64;   // N_p

  /// Samples per staggered series, (N_p - o) / 2.
  std::size_t series_len() const { return (window_len - offset) / 2; }
  /// Length after zero padding with o/2 samples, N_p / 2.
  std::size_t padded_len() const { return window_len / 2; }
  /// Start-to-start lag between the two series, in pulses.
  std::size_t lag_pulses() const { return offset + 1; }

  static std::size_t max_shifts(std::size_t total_pulses, std::size_t window_len, std::size_t shift_step) {
    if (window_len > total_pulses || shift_step == 0) return 0;
    return (total_pulses - window_len) / shift_step + 1;
  }

  void validate(std::size_t total_pulses) const {
    if (offset % 2 != 0) throw std::invalid_argument("SubsampleParams: offset must be even");
    if (shift_step < 1 || n_shifts < 1) throw std::invalid_argument("SubsampleParams: shift_step and n_shifts must be >= 1");
    if (window_len % 4 != 0) throw std::invalid_argument("SubsampleParams: window length must be a multiple of 4");
    if (offset >= window_len || window_len - offset < 4)
      throw std::invalid_argument("SubsampleParams: need at least two samples per staggered series");
    if (window_len >= total_pulses) throw std::invalid_argument("SubsampleParams: window must be shorter than the pulse train");
    if ((n_shifts - 1) * shift_step + window_len > total_pulses)
      throw std::invalid_argument("SubsampleParams: last window does not fit in the pulse train");
  }
};

/// Two staggered series from the window starting at pulse `shift`:
/// x1[p] = x[2p + s], x2[p] = x[2p + 1 + o + s], p = 0 .. (N_p - o)/2 - 1.
inline std::pair<std::vector<cdouble>, std::vector<cdouble>> subsample(std::span<const cdouble> x,
                                                                     const SubsampleParams& params,
                                                                     std::size_t shift) {
  if (params.offset % 2 != 0 || params.offset >= params.window_len)
    throw std::invalid_argument("subsample: invalid offset");
  if (shift + params.window_len > x.size()) throw std::invalid_argument("subsample: window exceeds the pulse series");
  const std::size_t n = params.series_len();
  std::vector<cdouble> x1(n), x2(n);
  for (std::size_t p = 0; p < n; ++p) {
    x1[p] = x[2 * p + shift];
    x2[p] = x[2 * p + 1 + params.offset + shift];
  }
  return {std::move(x1), std::move(x2)};
}

/// Differential phase arg(X1 * conj(X2)) on the N_p/2 bins of the half band.
/// Index j holds Doppler index k = j - N_p/4. Bins where both spectra vanish
/// (relative to the row peak) or the product is exactly zero are empty.
/// `window` has the length of the staggered series; both series are zero
/// padded to `padded_len` and transformed with sample interval 2*T_s.
inline std::vector<std::optional<double>> differential_phase(std::span<const cdouble> x1, std::span<const cdouble> x2,
                                                             const WindowSpec& window, std::size_t padded_len,
                                                             double slow_time) {
  if (x1.size() != x2.size()) throw std::invalid_argument("differential_phase: series length mismatch");
  if (window.length() != x1.size()) throw std::invalid_argument("differential_phase: window length mismatch");
  if (padded_len < x1.size()) throw std::invalid_argument("differential_phase: padded length shorter than series");
  WindowSpec padded = window;
  padded.coefficients.resize(padded_len, 0.0);
  std::vector<cdouble> a(padded_len), b(padded_len);
  std::copy(x1.begin(), x1.end(), a.begin());
  std::copy(x2.begin(), x2.end(), b.begin());
  const auto s1 = windowed_spectrum(a, padded, 2.0 * slow_time);
  const auto s2 = windowed_spectrum(b, padded, 2.0 * slow_time);

  double peak = 0.0;
  for (std::size_t j = 0; j < padded_len; ++j) peak = std::max({peak, std::abs(s1[j]), std::abs(s2[j])});
  const double tiny = 10.0 * std::numeric_limits<double>::epsilon() * peak;

  std::vector<std::optional<double>> phase(padded_len);
  for (std::size_t j = 0; j < padded_len; ++j) {
    const cdouble prod = s1[j] * std::conj(s2[j]);
    const bool both_small = std::abs(s1[j]) <= tiny && std::abs(s2[j]) <= tiny;
    if (both_small || prod == cdouble{}) continue;
    phase[j] = std::arg(prod);
  }
  return phase;
}

struct CircularVariance {
  double sigma = 1.0;
  std::size_t n_valid = 0;
  bool flagged = true;  // no valid phase at all
};

/// 1 - |mean unit phasor|^2 over the valid phases.
inline CircularVariance circular_variance(std::span<const std::optional<double>> phases) {
  double re = 0.0, im = 0.0;
  std::size_t n = 0;
  for (const auto& p : phases) {
    if (!p) continue;
    re += std::cos(*p);
    im += std::sin(*p);
    ++n;
  }
  if (n == 0) return {};
  re /= static_cast<double>(n);
  im /= static_cast<double>(n);
  const double sigma = std::clamp(1.0 - (re * re + im * im), 0.0, 1.0);
  return {sigma, n, false};
}

inline CircularVariance circular_variance(std::span<const double> phases) {
  std::vector<std::optional<double>> v(phases.begin(), phases.end());
  return circular_variance(std::span<const std::optional<double>>(v));
}

/// Circular variance over [gate x N_p] with the spectrum column convention.
/// Columns outside the half band hold 1.
struct CvMap {
  Grid2<double> sigma;
  Grid2<std::uint8_t> flagged;
  std::size_t offset = 0;
  std::size_t lag_pulses = 0;
};

/// CV of every range gate of one beam. `series` is [gate x pulse] over the
/// full N_p' pulse train.
inline CvMap cv_map(const Grid2<cdouble>& series, const SubsampleParams& params, WindowKind window_kind,
                    double slow_time) {
  params.validate(series.cols());
  const std::size_t np = params.window_len;
  const std::size_t half = params.padded_len();
  const std::size_t quarter = np / 4;
  const WindowSpec window = make_window(window_kind, params.series_len());

  CvMap out;
  out.sigma = Grid2<double>(series.rows(), np, 1.0);
  out.flagged = Grid2<std::uint8_t>(series.rows(), np, 0);
  out.offset = params.offset;
  out.lag_pulses = params.lag_pulses();

  std::vector<std::vector<std::optional<double>>> by_bin(half, std::vector<std::optional<double>>(params.n_shifts));
  for (std::size_t m = 0; m < series.rows(); ++m) {
    std::span<const cdouble> x(series.row(m), series.cols());
    for (std::size_t n = 0; n < params.n_shifts; ++n) {
      const auto [x1, x2] = subsample(x, params, n * params.shift_step);
      const auto phase = differential_phase(x1, x2, window, half, slow_time);
      for (std::size_t j = 0; j < half; ++j) by_bin[j][n] = phase[j];
    }
    for (std::size_t j = 0; j < half; ++j) {
      const auto cv = circular_variance(std::span<const std::optional<double>>(by_bin[j]));
      out.sigma(m, j + quarter) = cv.sigma;
      out.flagged(m, j + quarter) = cv.flagged ? 1 : 0;
    }
  }
  return out;
}

/// Mask = 0 where sigma <= threshold; bins outside the half band stay 1.
inline ClutterMask cv_mask(const Grid2<double>& sigma, double threshold, std::size_t offset = 0) {
  ClutterMask out;
  out.kind = MaskKind::cv_driven;
  out.offset = offset;
  out.threshold = threshold;
  out.mask = Grid2<std::uint8_t>(sigma.rows(), sigma.cols(), 1);
  for (std::size_t m = 0; m < sigma.rows(); ++m)
    for (std::size_t j = 0; j < sigma.cols(); ++j) {
      const double s = sigma(m, j);
      if (s < 0.0 || s > 1.0) throw std::invalid_argument("cv_mask: circular variance outside [0, 1]");
      out.mask(m, j) = s <= threshold ? 0 : 1;
    }
  enforce_outer_band(out.mask);
  return out;
}

inline ClutterMask cv_mask(const CvMap& map, double threshold) { return cv_mask(map.sigma, threshold, map.offset); }

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Count of scenes in which each bin was flagged as clutter.
struct PersistencyMap {
  Grid2<std::uint32_t> counts;
  std::uint32_t n_scenes = 0;
  double window_seconds = 0.0;
  std::size_t offset = 0;

  /// Per-bin integer addition; commutative and associative.
  void merge(const PersistencyMap& other) {
    if (n_scenes == 0 && counts.size() == 0) {
      *this = other;
      return;
    }
    if (!counts.same_shape(other.counts)) throw std::invalid_argument("PersistencyMap::merge: shape mismatch");
    if (offset != other.offset) throw std::invalid_argument("PersistencyMap::merge: offset mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts.data()[i] += other.counts.data()[i];
    n_scenes += other.n_scenes;
    window_seconds += other.window_seconds;
  }
};

inline PersistencyMap accumulate_persistency(std::span<const ClutterMask> masks, double window_seconds = 0.0) {
  if (masks.empty()) throw std::invalid_argument("accumulate_persistency: no masks");
  PersistencyMap out;
  out.counts = Grid2<std::uint32_t>(masks.front().n_gates(), masks.front().n_bins(), 0);
  out.offset = masks.front().offset;
  out.window_seconds = window_seconds;
  for (const auto& m : masks) {
    if (!m.mask.same_shape(masks.front().mask)) throw std::invalid_argument("accumulate_persistency: shape mismatch");
    if (m.offset != out.offset) throw std::invalid_argument("accumulate_persistency: offset mismatch");
    for (std::size_t i = 0; i < m.mask.size(); ++i) out.counts.data()[i] += (m.mask.data()[i] == 0);
    ++out.n_scenes;
  }
  return out;
}

/// Mask = 0 where the persistency count exceeds the threshold.
inline ClutterMask persistency_mask(const PersistencyMap& map, double threshold) {
  if (!(threshold >= 0.0 && threshold <= static_cast<double>(map.n_scenes)))
    throw std::invalid_argument("persistency_mask: threshold outside [0, n_scenes]");
  ClutterMask out;
  out.kind = MaskKind::persistency_driven;
  out.offset = map.offset;
  out.threshold = threshold;
  out.mask = Grid2<std::uint8_t>(map.counts.rows(), map.counts.cols(), 1);
  for (std::size_t i = 0; i < map.counts.size(); ++i)
    out.mask.data()[i] = static_cast<double>(map.counts.data()[i]) > threshold ? 0 : 1;
  enforce_outer_band(out.mask);
  return out;
}

/// Quantile of the persistency counts over the half-band bins, typically
/// taken on a clutter-only calibration set.
inline double persistency_threshold(const PersistencyMap& map, double q = 0.95) {
  std::vector<double> v;
  for (std::size_t m = 0; m < map.counts.rows(); ++m)
    for (std::size_t j = 0; j < map.counts.cols(); ++j)
      if (!outside_half_band(j, map.counts.cols())) v.push_back(static_cast<double>(map.counts(m, j)));
  return quantile(std::move(v), q);
}

/// Element-wise product of the spectrum with the 0/1 mask.
template <typename T>
Grid2<T> apply_mask(const Grid2<T>& spectrum, const ClutterMask& mask) {
  if (spectrum.rows() != mask.mask.rows() || spectrum.cols() != mask.mask.cols())
    throw std::invalid_argument("apply_mask: shape mismatch");
  Grid2<T> out = spectrum;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask.mask.data()[i] == 0) out.data()[i] = T{};
  return out;
}

/// Median of the lowest decile of the PSD bins.
inline double noise_floor(std::span<const double> psd) {
  if (psd.empty()) throw std::invalid_argument("noise_floor: empty row");
  std::vector<double> v(psd.begin(), psd.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = std::max<std::size_t>(1, v.size() / 10);
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct GaussianFit {
  double amplitude = 0.0;
  double center = 0.0;  // Doppler index units
  double width = 1.0;   // Doppler index units, always > 0
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct GaussianFitOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;
};

/// Levenberg-Marquardt fit of A exp(-(k - mu)^2 / (2 Sigma^2)) to (k, S)
/// samples, initialized from the weighted moments.
inline GaussianFit fit_gaussian(std::span<const double> k, std::span<const double> s, GaussianFitOptions opt = {}) {
  if (k.size() != s.size() || k.size() < 3) throw std::invalid_argument("fit_gaussian: need at least three samples");
  double peak = 0.0, total = 0.0, first = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    peak = std::max(peak, s[i]);
    total += s[i];
    first += k[i] * s[i];
  }
  if (!(peak > 0)) throw undefined_result("fit_gaussian: no positive samples");
  double mu = first / total;
  double second = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) second += (k[i] - mu) * (k[i] - mu) * s[i];
  double sig = std::max(std::sqrt(second / total), 0.5);
  double amp = 1.0;  // in units of `peak`

  auto cost = [&](double a, double m, double w) {
    double c = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = k[i] - m;
      const double r = s[i] / peak - a * std::exp(-d * d / (2 * w * w));
      c += r * r;
    }
    return c;
  };

  GaussianFit fit;
  double lambda = 1e-3;
  double current = cost(amp, mu, sig);
  for (int it = 0; it < opt.max_iterations; ++it) {
    fit.iterations = it + 1;
    std::array<double, 9> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = k[i] - mu;
      const double e = std::exp(-d * d / (2 * sig * sig));
      const double r = s[i] / peak - amp * e;
      const std::array<double, 3> jac{e, amp * e * d / (sig * sig), amp * e * d * d / (sig * sig * sig)};
      for (int a = 0; a < 3; ++a) {
        jtr[a] += jac[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a * 3 + b] += jac[a] * jac[b];
      }
    }
    bool stepped = false;
    for (int attempt = 0; attempt < 30 && !stepped; ++attempt) {
      std::array<double, 9> m = jtj;
      for (int a = 0; a < 3; ++a) m[a * 4] *= (1.0 + lambda);
      // Cramer's rule on the damped 3x3 normal equations.
      auto det3 = [](const std::array<double, 9>& q) {
        return q[0] * (q[4] * q[8] - q[5] * q[7]) - q[1] * (q[3] * q[8] - q[5] * q[6]) +
               q[2] * (q[3] * q[7] - q[4] * q[6]);
      };
      const double det = det3(m);
      if (det == 0.0 || !std::isfinite(det)) {
        lambda *= 10;
        continue;
      }
      std::array<double, 3> delta{};
      for (int c = 0; c < 3; ++c) {
        auto mc = m;
        for (int r = 0; r < 3; ++r) mc[r * 3 + c] = jtr[r];
        delta[c] = det3(mc) / det;
      }
      const double na = amp + delta[0], nm = mu + delta[1], ns = sig + delta[2];
      if (!(ns > 0) || !std::isfinite(na) || !std::isfinite(nm)) {
        lambda *= 10;
        continue;
      }
      const double trial = cost(na, nm, ns);
      if (trial <= current) {
        const double change = std::max({std::abs(delta[0]) / std::max(std::abs(na), 1e-300),
                                         std::abs(delta[1]) / std::max(std::abs(nm), 1.0),
                                         std::abs(delta[2]) / ns});
        amp = na, mu = nm, sig = ns;
        current = trial;
        lambda = std::max(lambda / 10, 1e-12);
        stepped = true;
        if (change < opt.tolerance) fit.converged = true;
      } else {
        lambda *= 10;
      }
    }
    if (!stepped) {
      fit.converged = true;  // no descent direction left
      break;
    }
    if (fit.converged) break;
  }
  fit.amplitude = amp * peak;
  fit.center = mu;
  fit.width = sig;
  fit.rms_residual = std::sqrt(current / static_cast<double>(s.size())) * peak;
  return fit;
}

struct InterpolationResult {
  std::vector<double> psd;
  bool fallback = false;
  std::optional<GaussianFit> fit;
};

/// Replaces masked bins (mask == 0) of one PSD row by a Gaussian fitted to the
/// unmasked bins above the noise floor. With fewer than `min_bins` usable
/// bins the masked bins are set to the noise floor and `fallback` is set.
inline InterpolationResult gaussian_interpolate(std::span<const double> psd, std::span<const std::uint8_t> mask,
                                                double floor, std::size_t min_bins = 5,
                                                GaussianFitOptions opt = {}) {
  if (psd.size() != mask.size()) throw std::invalid_argument("gaussian_interpolate: mask/psd size mismatch");
  InterpolationResult out;
  out.psd.assign(psd.begin(), psd.end());
  const bool any_masked = std::any_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v == 0; });
  if (!any_masked) return out;

  const long half = static_cast<long>(psd.size() / 2);
  std::vector<double> ks, ss;
  for (std::size_t j = 0; j < psd.size(); ++j)
    if (mask[j] != 0 && psd[j] > floor) {
      ks.push_back(static_cast<double>(static_cast<long>(j) - half));
      ss.push_back(psd[j]);
    }
  if (ks.size() < std::max<std::size_t>(min_bins, 3)) {
    for (std::size_t j = 0; j < psd.size(); ++j)
      if (mask[j] == 0) out.psd[j] = floor;
    out.fallback = true;
    return out;
  }
  const GaussianFit fit = fit_gaussian(ks, ss, opt);
  for (std::size_t j = 0; j < psd.size(); ++j)
    if (mask[j] == 0) {
      const double d = static_cast<double>(static_cast<long>(j) - half) - fit.center;
      out.psd[j] = fit.amplitude * std::exp(-d * d / (2 * fit.width * fit.width));
    }
  out.fit = fit;
  return out;
}

}  // namespace bswrm
