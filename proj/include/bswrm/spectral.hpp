#pragma once

// Range compression, windowed periodogram and spectral moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bswrm/core.hpp"
#include "bswrm/fft.hpp"

namespace bswrm {

/// Taper applied along slow time. `normalizer` is sqrt(sum |w|^2).
struct WindowSpec {
  WindowKind kind = WindowKind::blackman;
  std::vector<double> coefficients;
  double normalizer = 0.0;

  std::size_t length() const { return coefficients.size(); }
};

inline WindowSpec make_window(WindowKind kind, std::size_t length) {
  if (length == 0) throw std::invalid_argument("make_window: zero length");
  WindowSpec w;
  w.kind = kind;
  w.coefficients.resize(length, 1.0);
  if (kind != WindowKind::rectangular && length > 1) {
    // Symmetric four-term cosine sums.
    double a0, a1, a2, a3;
    if (kind == WindowKind::blackman) {
      a0 = 0.42, a1 = 0.5, a2 = 0.08, a3 = 0.0;
    } else {
      a0 = 0.3635819, a1 = 0.4891775, a2 = 0.1365995, a3 = 0.0106411;
    }
    const double denom = static_cast<double>(length - 1);
    for (std::size_t n = 0; n < length; ++n) {
      const double t = 2.0 * kPi * static_cast<double>(n) / denom;
      w.coefficients[n] = a0 - a1 * std::cos(t) + a2 * std::cos(2 * t) - a3 * std::cos(3 * t);
    }
    // Blackman is exactly zero at the ends only up to rounding.
    for (auto& c : w.coefficients) c = std::max(c, 0.0);
  }
  double energy = 0.0;
  for (double c : w.coefficients) energy += c * c;
  w.normalizer = std::sqrt(energy);
  if (!(w.normalizer > 0)) throw std::invalid_argument("make_window: degenerate window");
  return w;
}

/// Complex cross-correlation of one received pulse against the transmitted
/// replica: out[m] = sum_n rx[m+n] * conj(replica[n]). Output has the length
/// of rx (one value per range gate).
inline std::vector<cdouble> range_compress(std::span<const cdouble> rx, std::span<const cdouble> replica) {
  if (replica.empty()) throw std::invalid_argument("range_compress: empty replica");
  if (replica.size() > rx.size()) throw std::invalid_argument("range_compress: replica longer than received signal");
  std::size_t n = 1;
  while (n < rx.size() + replica.size()) n <<= 1;
  std::vector<cdouble> a(n), b(n);
  std::copy(rx.begin(), rx.end(), a.begin());
  std::copy(replica.begin(), replica.end(), b.begin());
  auto fa = fft::forward(a);
  auto fb = fft::forward(b);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= std::conj(fb[i]);
  auto corr = fft::inverse(fa);
  std::vector<cdouble> out(rx.size());
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < rx.size(); ++m) out[m] = corr[m] * scale;
  return out;
}

/// Windowed Doppler spectrum of one slow-time series,
///   X(k) = (T_s / W) * sum_p x(p) w(p) exp(-j 2 pi k p / N),
/// for k = -N/2 .. N/2-1 stored at index k + N/2.
inline std::vector<cdouble> windowed_spectrum(std::span<const cdouble> x, const WindowSpec& window, double slow_time) {
  const std::size_t n = x.size();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("windowed_spectrum: series length must be even and >= 2");
  if (window.length() != n) throw std::invalid_argument("windowed_spectrum: window length mismatch");
  std::vector<cdouble> weighted(n);
  for (std::size_t p = 0; p < n; ++p) weighted[p] = x[p] * window.coefficients[p];
  const auto raw = fft::forward(weighted);
  const double scale = slow_time / window.normalizer;
  std::vector<cdouble> out(n);
  const std::size_t half = n / 2;
  // fftshift: DFT bin (k mod N) -> column k + N/2
  for (std::size_t j = 0; j < n; ++j) out[j] = raw[(j + half) % n] * scale;
  return out;
}

inline std::vector<double> power_spectral_density(std::span<const cdouble> spectrum) {
  std::vector<double> s(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) s[i] = std::norm(spectrum[i]);
  return s;
}

/// Integral of the PSD over the Doppler band.
inline double received_power(std::span<const double> psd, double doppler_step) {
  double sum = 0.0;
  for (double v : psd) sum += v;
  return doppler_step * sum;
}

struct DopplerMoments {
  double mean_frequency = 0.0;  // f_D (Hz)
  double spread_frequency = 0.0;  // Hz
  double velocity = 0.0;  // V_D = -(lambda/2) f_D, positive away from the radar
  double spread = 0.0;    // W_D = (lambda/2) * spread_frequency
};

/// First and second spectral moments. Throws undefined_result for a
/// spectrum without power.
inline DopplerMoments doppler_moments(std::span<const double> psd, std::span<const double> axis, double wavelength) {
  if (psd.size() != axis.size()) throw std::invalid_argument("doppler_moments: axis/psd size mismatch");
  double total = 0.0, first = 0.0;
  std::size_t nonzero = 0, last = 0;
  for (std::size_t i = 0; i < psd.size(); ++i) {
    if (psd[i] < 0) throw std::invalid_argument("doppler_moments: negative PSD");
    if (psd[i] > 0) ++nonzero, last = i;
    total += psd[i];
    first += axis[i] * psd[i];
  }
  if (!(total > 0)) throw undefined_result("doppler_moments: zero total power");
  DopplerMoments mom;
  if (nonzero == 1) {
    mom.mean_frequency = axis[last];
    mom.spread_frequency = 0.0;
  } else {
    mom.mean_frequency = first / total;
    double second = 0.0;
    for (std::size_t i = 0; i < psd.size(); ++i) {
      const double d = axis[i] - mom.mean_frequency;
      second += d * d * psd[i];
    }
    mom.spread_frequency = std::sqrt(second / total);
  }
  mom.velocity = -0.5 * wavelength * mom.mean_frequency;
  mom.spread = 0.5 * wavelength * mom.spread_frequency;
  return mom;
}

/// Moments with a flat per-bin noise level removed from the sums (no
/// clamping, so the estimates stay unbiased). Spread is 0 when the corrected
/// second moment goes negative.
inline DopplerMoments doppler_moments(std::span<const double> psd, std::span<const double> axis, double wavelength,
                                      double noise_per_bin) {
  if (psd.size() != axis.size()) throw std::invalid_argument("doppler_moments: axis/psd size mismatch");
  double total = 0.0, first = 0.0;
  for (std::size_t i = 0; i < psd.size(); ++i) {
    total += psd[i] - noise_per_bin;
    first += axis[i] * (psd[i] - noise_per_bin);
  }
  if (!(total > 0)) throw undefined_result("doppler_moments: no power above the noise level");
  DopplerMoments mom;
  mom.mean_frequency = first / total;
  double second = 0.0;
  for (std::size_t i = 0; i < psd.size(); ++i) {
    const double d = axis[i] - mom.mean_frequency;
    second += d * d * (psd[i] - noise_per_bin);
  }
  mom.spread_frequency = second > 0 ? std::sqrt(second / total) : 0.0;
  mom.velocity = -0.5 * wavelength * mom.mean_frequency;
  mom.spread = 0.5 * wavelength * mom.spread_frequency;
  return mom;
}

/// Spectrum of every gate for the N_p-pulse window starting at `first_pulse`.
/// `series` is [gate x pulse].
inline RangeDopplerSpectrum compute_spectrum(const Grid2<cdouble>& series, std::size_t first_pulse,
                                             const WindowSpec& window, double slow_time, std::uint32_t beam_id = 0) {
  const std::size_t np = window.length();
  if (first_pulse + np > series.cols()) throw std::invalid_argument("compute_spectrum: window exceeds pulse series");
  RangeDopplerSpectrum out;
  out.amplitude = Grid2<cdouble>(series.rows(), np);
  out.psd = Grid2<double>(series.rows(), np);
  out.doppler_step = 1.0 / (static_cast<double>(np) * slow_time);
  out.n_pulses = np;
  out.window = window.kind;
  out.beam_id = beam_id;
  for (std::size_t m = 0; m < series.rows(); ++m) {
    std::span<const cdouble> x(series.row(m) + first_pulse, np);
    const auto spec = windowed_spectrum(x, window, slow_time);
    for (std::size_t j = 0; j < np; ++j) {
      out.amplitude(m, j) = spec[j];
      out.psd(m, j) = std::norm(spec[j]);
    }
  }
  return out;
}

}  // namespace bswrm
