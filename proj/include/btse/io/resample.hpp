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

#ifndef BTSE_IO_RESAMPLE_HPP_
#define BTSE_IO_RESAMPLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::io {

/// Band-limited rational resampler: Kaiser-windowed sinc with 64 taps per
/// output phase (measured at the lower of the two rates), beta = 8.6, and a
/// cutoff at 90% of the lower Nyquist frequency.
struct ResamplerDesign {
  int taps_per_phase = 64;
  double kaiser_beta = 8.6;
  double rolloff = 0.9;
};

namespace detail {

// Zeroth-order modified Bessel function of the first kind (power series).
inline double BesselI0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

inline double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Resamples to `target_hz`. Output length is round(len * target / source).
inline MonoSignal Resample(const MonoSignal& signal, int target_hz,
                           const ResamplerDesign& design = {}) {
  if (target_hz <= 0) {
    throw ArgumentError("target sample rate must be positive, got " +
                        std::to_string(target_hz));
  }
  const int source_hz = signal.sample_rate_hz();
  if (source_hz == target_hz) return signal;

  const std::int64_t g = std::gcd(source_hz, target_hz);
  const std::int64_t up = target_hz / g;    // output steps per unit
  const std::int64_t down = source_hz / g;  // input steps per unit
  const double ratio = static_cast<double>(target_hz) / source_hz;
  const double stretch = std::min(1.0, ratio);
  // Cutoff in cycles per input sample.
  const double cutoff = 0.5 * design.rolloff * stretch;
  const double half_width = 0.5 * design.taps_per_phase / stretch;
  const int reach = static_cast<int>(std::ceil(half_width));
  const int taps = 2 * reach;
  const double i0_beta = detail::BesselI0(design.kaiser_beta);

  auto kernel = [&](double tau) {
    const double r = tau / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double w =
        detail::BesselI0(design.kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta;
    return 2.0 * cutoff * detail::Sinc(2.0 * cutoff * tau) * w;
  };

  // One table row per fractional phase p/up; row entry t weights input
  // sample (base - reach + 1 + t).
  const bool tabulate = up * taps <= (std::int64_t{1} << 24);
  std::vector<float> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      for (int t = 0; t < taps; ++t) {
        const double tau = frac - (t - reach + 1);
        table[p * taps + t] = static_cast<float>(kernel(tau));
      }
    }
  }

  const auto in_len = static_cast<std::int64_t>(signal.size());
  const auto out_len = static_cast<std::int64_t>(
      std::llround(static_cast<double>(in_len) * target_hz / source_hz));
  const std::vector<float>& x = signal.samples();
  std::vector<float> out(static_cast<std::size_t>(out_len));
  std::vector<float> row(taps);
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    const float* weights;
    if (tabulate) {
      weights = &table[phase * taps];
    } else {
      const double frac = static_cast<double>(phase) / up;
      for (int t = 0; t < taps; ++t) {
        row[t] = static_cast<float>(kernel(frac - (t - reach + 1)));
      }
      weights = row.data();
    }
    double acc = 0.0;
    const std::int64_t first = base - reach + 1;
    for (int t = 0; t < taps; ++t) {
      const std::int64_t k = first + t;
      if (k < 0 || k >= in_len) continue;
      acc += static_cast<double>(weights[t]) * x[k];
    }
    out[n] = static_cast<float>(acc);
  }
  return MonoSignal(std::move(out), target_hz);
}

inline BinauralSignal Resample(const BinauralSignal& signal, int target_hz,
                               const ResamplerDesign& design = {}) {
  return {Resample(signal.left(), target_hz, design),
          Resample(signal.right(), target_hz, design)};
}

}  // namespace btse::io

#endif  // BTSE_IO_RESAMPLE_HPP_
