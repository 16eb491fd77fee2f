// Copyright 2026 The BTSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BTSE_SYNTH_CONVOLUTION_HPP_
#define BTSE_SYNTH_CONVOLUTION_HPP_

#include <algorithm>
#include <bit>
#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::synth {

namespace detail {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
inline std::mutex& FftwPlannerMutex() {
  static std::mutex mu;
  return mu;
}

template <typename T>
struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))), size(n) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  T* data;
  std::size_t size;
};

class FftwPlan {
 public:
  FftwPlan(int n, double* real, fftw_complex* spectrum, bool forward) {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan_ = forward ? fftw_plan_dft_r2c_1d(n, real, spectrum, FFTW_ESTIMATE)
                    : fftw_plan_dft_c2r_1d(n, spectrum, real, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw Error("FFTW failed to create a plan");
  }
  ~FftwPlan() {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(plan_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  void Execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace detail

/// Full linear convolution (length |x| + |h| - 1) by FFT overlap-save,
/// computed in double precision.
inline std::vector<float> FftConvolve(std::span<const float> x,
                                      std::span<const float> h) {
  if (h.empty()) throw ArgumentError("impulse response is empty");
  if (x.empty()) return {};
  const std::size_t m = h.size();
  const std::size_t out_len = x.size() + m - 1;
  const std::size_t n = std::max<std::size_t>(256, std::bit_ceil(2 * m));
  const std::size_t step = n - m + 1;
  const std::size_t bins = n / 2 + 1;

  detail::FftwBuffer<double> time(n);
  detail::FftwBuffer<fftw_complex> spec(bins);
  detail::FftwBuffer<fftw_complex> filter(bins);
  const detail::FftwPlan forward(static_cast<int>(n), time.data, spec.data, true);
  const detail::FftwPlan inverse(static_cast<int>(n), time.data, spec.data, false);

  std::fill(time.data, time.data + n, 0.0);
  std::copy(h.begin(), h.end(), time.data);
  forward.Execute();
  for (std::size_t k = 0; k < bins; ++k) {
    filter.data[k][0] = spec.data[k][0];
    filter.data[k][1] = spec.data[k][1];
  }

  std::vector<float> out(out_len);
  const double norm = 1.0 / static_cast<double>(n);
  // Block b produces outputs [b * step, b * step + step) from inputs starting
  // m - 1 samples earlier.
  for (std::size_t start = 0; start < out_len; start += step) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(start + i) -
                                 static_cast<std::ptrdiff_t>(m - 1);
      time.data[i] = (src >= 0 && static_cast<std::size_t>(src) < x.size())
                         ? static_cast<double>(x[src])
                         : 0.0;
    }
    forward.Execute();
    for (std::size_t k = 0; k < bins; ++k) {
      const std::complex<double> a(spec.data[k][0], spec.data[k][1]);
      const std::complex<double> b(filter.data[k][0], filter.data[k][1]);
      const std::complex<double> p = a * b;
      spec.data[k][0] = p.real();
      spec.data[k][1] = p.imag();
    }
    inverse.Execute();
    const std::size_t count = std::min(step, out_len - start);
    for (std::size_t i = 0; i < count; ++i) {
      out[start + i] = static_cast<float>(time.data[m - 1 + i] * norm);
    }
  }
  return out;
}

/// Renders a mono source through a stereo impulse response. The result is
/// truncated to the source length unless `keep_tail` is set.
inline BinauralSignal Spatialize(const MonoSignal& source,
                                 const BinauralSignal& impulse_response,
                                 bool keep_tail = false) {
  if (impulse_response.empty()) throw ArgumentError("impulse response is empty");
  if (source.sample_rate_hz() != impulse_response.sample_rate_hz()) {
    throw ArgumentError("source and impulse response sample rates differ (" +
                        std::to_string(source.sample_rate_hz()) + " vs " +
                        std::to_string(impulse_response.sample_rate_hz()) + ")");
  }
  auto left = FftConvolve(source.view(), impulse_response.left().view());
  auto right = FftConvolve(source.view(), impulse_response.right().view());
  if (!keep_tail) {
    left.resize(source.size());
    right.resize(source.size());
  }
  return BinauralSignal(std::move(left), std::move(right), source.sample_rate_hz());
}

}  // namespace btse::synth

#endif  // BTSE_SYNTH_CONVOLUTION_HPP_
