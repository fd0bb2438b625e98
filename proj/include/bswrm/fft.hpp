#pragma once

// Thin FFTW wrapper. Plans are created once per (length, direction) under a
// lock; execution uses the new-array interface and is thread-safe.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bswrm::fft {

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void run(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign) {
  if (in.size() != out.size()) throw std::invalid_argument("fft: size mismatch");
  if (in.empty()) return;
  fftw_plan plan = PlanCache::instance().get(static_cast<int>(in.size()), sign);
  // FFTW does not modify the input of an out-of-place complex transform.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Unnormalized forward DFT: out[k] = sum_n in[n] exp(-j 2 pi k n / N).
inline std::vector<std::complex<double>> forward(std::span<const std::complex<double>> in) {
  std::vector<std::complex<double>> out(in.size());
  detail::run(in, out, FFTW_FORWARD);
  return out;
}

/// Unnormalized inverse DFT: out[n] = sum_k in[k] exp(+j 2 pi k n / N).
inline std::vector<std::complex<double>> inverse(std::span<const std::complex<double>> in) {
  std::vector<std::complex<double>> out(in.size());
  detail::run(in, out, FFTW_BACKWARD);
  return out;
}

}  // namespace bswrm::fft
