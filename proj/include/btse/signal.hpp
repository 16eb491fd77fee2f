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

#ifndef BTSE_SIGNAL_HPP_
#define BTSE_SIGNAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "btse/errors.hpp"

namespace btse {

/// Canonical processing rate for synthesis and the network.
inline constexpr int kCanonicalRateHz = 44100;

/// A single channel of audio. Samples are nominally in [-1, 1] but may exceed
/// full scale (mixtures are never clipped); they are always finite.
class MonoSignal {
 public:
  MonoSignal() = default;

  MonoSignal(std::vector<float> samples, int sample_rate_hz)
      : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (sample_rate_hz_ <= 0) {
      throw ArgumentError("sample rate must be positive, got " +
                          std::to_string(sample_rate_hz_));
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i])) {
        throw ArgumentError("non-finite sample at index " + std::to_string(i));
      }
    }
  }

  static MonoSignal Zeros(std::size_t length, int sample_rate_hz) {
    return MonoSignal(std::vector<float>(length, 0.0f), sample_rate_hz);
  }

  const std::vector<float>& samples() const { return samples_; }
  std::span<const float> view() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int sample_rate_hz() const { return sample_rate_hz_; }
  float operator[](std::size_t i) const { return samples_[i]; }

  double duration_s() const {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  /// Moves the sample buffer out, leaving this signal empty.
  std::vector<float> release() && { return std::move(samples_); }

  friend bool operator==(const MonoSignal&, const MonoSignal&) = default;

 private:
  std::vector<float> samples_;
  int sample_rate_hz_ = kCanonicalRateHz;
};

/// Two time-aligned channels sharing one sample rate.
class BinauralSignal {
 public:
  BinauralSignal() = default;

  BinauralSignal(MonoSignal left, MonoSignal right)
      : left_(std::move(left)), right_(std::move(right)) {
    if (left_.size() != right_.size()) {
      throw ShapeError("binaural channels differ in length: " +
                       std::to_string(left_.size()) + " vs " +
                       std::to_string(right_.size()));
    }
    if (left_.sample_rate_hz() != right_.sample_rate_hz()) {
      throw ShapeError("binaural channels differ in sample rate");
    }
  }

  BinauralSignal(std::vector<float> left, std::vector<float> right,
                 int sample_rate_hz)
      : BinauralSignal(MonoSignal(std::move(left), sample_rate_hz),
                       MonoSignal(std::move(right), sample_rate_hz)) {}

  static BinauralSignal Zeros(std::size_t length, int sample_rate_hz) {
    return {MonoSignal::Zeros(length, sample_rate_hz),
            MonoSignal::Zeros(length, sample_rate_hz)};
  }

  /// Same signal on both ears.
  static BinauralSignal Diotic(const MonoSignal& mono) { return {mono, mono}; }

  const MonoSignal& left() const { return left_; }
  const MonoSignal& right() const { return right_; }
  const MonoSignal& channel(int index) const {
    return index == 0 ? left_ : right_;
  }
  std::size_t size() const { return left_.size(); }
  bool empty() const { return left_.empty(); }
  int sample_rate_hz() const { return left_.sample_rate_hz(); }

  friend bool operator==(const BinauralSignal&,
                         const BinauralSignal&) = default;

 private:
  MonoSignal left_;
  MonoSignal right_;
};

/// Returns the first `length` samples of `signal` (or all of it if shorter).
inline MonoSignal Truncate(const MonoSignal& signal, std::size_t length) {
  const std::size_t n = std::min(length, signal.size());
  return MonoSignal(std::vector<float>(signal.samples().begin(),
                                       signal.samples().begin() + n),
                    signal.sample_rate_hz());
}

inline BinauralSignal Truncate(const BinauralSignal& signal,
                               std::size_t length) {
  return {Truncate(signal.left(), length), Truncate(signal.right(), length)};
}

inline MonoSignal Scale(const MonoSignal& signal, double gain) {
  std::vector<float> out(signal.samples());
  for (float& v : out) v = static_cast<float>(v * gain);
  return MonoSignal(std::move(out), signal.sample_rate_hz());
}

inline BinauralSignal Scale(const BinauralSignal& signal, double gain) {
  return {Scale(signal.left(), gain), Scale(signal.right(), gain)};
}

/// Sample-wise a - b; lengths and rates must match.
inline MonoSignal Subtract(const MonoSignal& a, const MonoSignal& b) {
  if (a.size() != b.size() || a.sample_rate_hz() != b.sample_rate_hz()) {
    throw ShapeError("cannot subtract signals of different shape");
  }
  std::vector<float> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return MonoSignal(std::move(out), a.sample_rate_hz());
}

inline BinauralSignal Subtract(const BinauralSignal& a,
                               const BinauralSignal& b) {
  return {Subtract(a.left(), b.left()), Subtract(a.right(), b.right())};
}

}  // namespace btse

#endif  // BTSE_SIGNAL_HPP_
