#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bswrm/core.hpp"

namespace bswrm::test {

/// Direct O(N^2) evaluation of the windowed spectrum, same index convention.
inline std::vector<cdouble> direct_spectrum(const std::vector<cdouble>& x, const std::vector<double>& w, double ts) {
  const std::size_t n = x.size();
  double energy = 0.0;
  for (double v : w) energy += v * v;
  const double scale = ts / std::sqrt(energy);
  std::vector<cdouble> out(n);
  const long half = static_cast<long>(n / 2);
  for (long k = -half; k < half; ++k) {
    cdouble s{};
    for (std::size_t p = 0; p < n; ++p) {
      const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(p) / static_cast<double>(n);
      s += x[p] * w[p] * cdouble(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(k + half)] = s * scale;
  }
  return out;
}

inline std::vector<cdouble> random_series(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cdouble> x(n);
  for (auto& v : x) v = cdouble(g(rng), g(rng));
  return x;
}

inline FrameTiming golden_frame(std::uint32_t pulses = 128) {
  return FrameTiming{8e-6, 2e-6, 128.8e-6, 2.36e-3, pulses, 1e6, 1.5e6, 4.9e9};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bswrm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace bswrm::test
