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

// Ungated K-weighted loudness: the two-stage BS.1770 pre-filter (high shelf
// followed by a high-pass) applied per channel, mean square over the whole
// signal, channels summed with unit weight, -0.691 dB offset. Gating is not
// applied, so loudness is exactly linear in gain.

#ifndef BTSE_IO_LOUDNESS_HPP_
#define BTSE_IO_LOUDNESS_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::io {

/// Integrated loudness in LUFS, or the silent marker for all-zero input.
struct LoudnessValue {
  double lufs = 0.0;
  bool silent = false;

  static LoudnessValue Silent() { return {0.0, true}; }
};

/// Shortest measurable signal.
inline constexpr double kMinLoudnessWindowS = 0.4;
inline constexpr double kLoudnessOffsetDb = -0.691;

struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{};  // a[0] == 1

  /// Direct form II transposed, zero initial state.
  void Filter(std::span<double> x) const {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = b[0] * in + z1;
      z1 = b[1] * in - a[1] * out + z2;
      z2 = b[2] * in - a[2] * out;
      v = out;
    }
  }

  /// Magnitude response at `freq_hz`.
  double Gain(double freq_hz, double sample_rate_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    auto eval = [w](const std::array<double, 3>& c) {
      const double re = c[0] + c[1] * std::cos(w) + c[2] * std::cos(2 * w);
      const double im = -c[1] * std::sin(w) - c[2] * std::sin(2 * w);
      return std::hypot(re, im);
    };
    return eval(b) / eval(a);
  }
};

/// K-weighting coefficients for an arbitrary sample rate (bilinear design of
/// the reference analog prototypes).
inline std::array<Biquad, 2> KWeightingFilters(double sample_rate_hz) {
  std::array<Biquad, 2> stages;
  {
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / sample_rate_hz);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    stages[0].b = {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0,
                   (vh - vb * k / q + k * k) / a0};
    stages[0].a = {1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / sample_rate_hz);
    const double a0 = 1.0 + k / q + k * k;
    stages[1].b = {1.0, -2.0, 1.0};
    stages[1].a = {1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  return stages;
}

namespace detail {

inline double KWeightedMeanSquare(const MonoSignal& channel) {
  std::vector<double> x(channel.samples().begin(), channel.samples().end());
  for (const Biquad& stage : KWeightingFilters(channel.sample_rate_hz())) {
    stage.Filter(x);
  }
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return sum / static_cast<double>(x.size());
}

inline bool AllZero(const MonoSignal& channel) {
  for (float v : channel.samples()) {
    if (v != 0.0f) return false;
  }
  return true;
}

inline void CheckMeasurable(const MonoSignal& channel) {
  if (channel.duration_s() < kMinLoudnessWindowS) {
    throw ArgumentError("loudness needs at least 400 ms of audio, got " +
                        std::to_string(channel.duration_s() * 1000.0) + " ms");
  }
}

inline LoudnessValue FromPower(double power) {
  if (!(power > 0.0)) return LoudnessValue::Silent();
  return {kLoudnessOffsetDb + 10.0 * std::log10(power), false};
}

}  // namespace detail

inline LoudnessValue LoudnessLufs(const MonoSignal& signal) {
  detail::CheckMeasurable(signal);
  if (detail::AllZero(signal)) return LoudnessValue::Silent();
  return detail::FromPower(detail::KWeightedMeanSquare(signal));
}

inline LoudnessValue LoudnessLufs(const BinauralSignal& signal) {
  detail::CheckMeasurable(signal.left());
  if (detail::AllZero(signal.left()) && detail::AllZero(signal.right())) {
    return LoudnessValue::Silent();
  }
  return detail::FromPower(detail::KWeightedMeanSquare(signal.left()) +
                           detail::KWeightedMeanSquare(signal.right()));
}

/// Linear gain that moves `current` to `target_lufs`.
inline double GainToLufs(const LoudnessValue& current, double target_lufs) {
  if (current.silent) {
    throw ArgumentError("cannot scale a silent signal to a loudness target");
  }
  return std::pow(10.0, (target_lufs - current.lufs) / 20.0);
}

template <typename Signal>
Signal ScaleToLufs(const Signal& signal, double target_lufs) {
  return Scale(signal, GainToLufs(LoudnessLufs(signal), target_lufs));
}

}  // namespace btse::io

#endif  // BTSE_IO_LOUDNESS_HPP_
