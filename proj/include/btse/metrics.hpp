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

// Separation-quality and spatial-cue metrics. All accumulation is in double.
// Ratios are capped at 10*log10(1/kSaturationEps) = 80 dB so that a perfect
// reconstruction still yields a finite, comparable number.

#ifndef BTSE_METRICS_HPP_
#define BTSE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::metrics {

inline constexpr double kSaturationEps = 1e-8;
inline constexpr double kSaturationDb = 80.0;

namespace detail {

inline double Energy(std::span<const float> x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

inline double Dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline void CheckSameLength(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": lengths differ (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

inline void CheckSameShape(const BinauralSignal& a, const BinauralSignal& b,
                           const char* what) {
  CheckSameLength(a.size(), b.size(), what);
}

inline double CappedRatioDb(double signal, double noise) {
  return 10.0 * std::log10(signal / std::max(noise, kSaturationEps * signal));
}

}  // namespace detail

/// 10 log10(|ref|^2 / |ref - est|^2), capped at 80 dB.
inline double Snr(std::span<const float> est, std::span<const float> ref) {
  detail::CheckSameLength(est.size(), ref.size(), "snr");
  const double signal = detail::Energy(ref);
  if (!(signal > 0.0)) throw MetricError("snr: reference is all zeros");
  double noise = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(ref[i]) - est[i];
    noise += d * d;
  }
  return detail::CappedRatioDb(signal, noise);
}

inline double Snr(const MonoSignal& est, const MonoSignal& ref) {
  return Snr(est.view(), ref.view());
}

/// Negative mean of the per-channel SNRs. Sensitive to both sample alignment
/// and gain.
inline double SnrLoss(const BinauralSignal& est, const BinauralSignal& ref) {
  detail::CheckSameShape(est, ref, "snr_loss");
  return -(0.5 * Snr(est.left(), ref.left()) + 0.5 * Snr(est.right(), ref.right()));
}

/// Scale-invariant SNR: projects `est` onto `ref` and compares the projection
/// with the residual.
inline double SiSnr(std::span<const float> est, std::span<const float> ref) {
  detail::CheckSameLength(est.size(), ref.size(), "si_snr");
  const double ref_energy = detail::Energy(ref);
  if (!(ref_energy > 0.0)) throw MetricError("si_snr: reference is all zeros");
  if (!(detail::Energy(est) > 0.0)) throw MetricError("si_snr: estimate is all zeros");
  const double alpha = detail::Dot(est, ref) / ref_energy;
  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = alpha * ref[i];
    const double r = est[i] - t;
    target += t * t;
    residual += r * r;
  }
  if (!(target > 0.0)) {
    throw MetricError("si_snr: estimate is orthogonal to the reference");
  }
  return detail::CappedRatioDb(target, residual);
}

inline double SiSnr(const MonoSignal& est, const MonoSignal& ref) {
  return SiSnr(est.view(), ref.view());
}

/// Channel-averaged SI-SNR.
inline double SiSnr(const BinauralSignal& est, const BinauralSignal& ref) {
  detail::CheckSameShape(est, ref, "si_snr");
  return 0.5 * (SiSnr(est.left(), ref.left()) + SiSnr(est.right(), ref.right()));
}

/// Improvement of the estimate over the unprocessed mixture.
inline double SiSnrImprovement(const BinauralSignal& est,
                               const BinauralSignal& mixture,
                               const BinauralSignal& ref) {
  detail::CheckSameShape(est, ref, "si_snri");
  detail::CheckSameShape(mixture, ref, "si_snri");
  return SiSnr(est, ref) - SiSnr(mixture, ref);
}

/// Lag of R relative to L (samples) maximizing the raw cross-correlation
/// sum_n L[n] R[n + lag] over |lag| <= max_lag. Positive: left leads. Ties go
/// to the smallest |lag|, then to the positive lag.
inline int ItdLagSamples(std::span<const float> left, std::span<const float> right,
                         int max_lag) {
  const auto n = static_cast<long>(left.size());
  int best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  auto corr = [&](int lag) {
    double s = 0.0;
    const long lo = std::max(0L, -static_cast<long>(lag));
    const long hi = std::min(n, n - lag);
    for (long i = lo; i < hi; ++i) s += static_cast<double>(left[i]) * right[i + lag];
    return s;
  };
  // Visit lags in order of increasing |lag| so strict '>' implements the
  // tie-break.
  for (int mag = 0; mag <= max_lag; ++mag) {
    for (int lag : {mag, -mag}) {
      if (mag == 0 && lag < 0) continue;
      const double c = corr(lag);
      if (c > best) {
        best = c;
        best_lag = lag;
      }
    }
  }
  return best_lag;
}

/// Interaural time difference in microseconds, search limited to
/// +/- max_lag_ms.
inline double ItdUs(const BinauralSignal& signal, double max_lag_ms = 1.0) {
  if (!(detail::Energy(signal.left().view()) > 0.0) ||
      !(detail::Energy(signal.right().view()) > 0.0)) {
    throw MetricError("itd: a channel is silent");
  }
  const double fs = signal.sample_rate_hz();
  const int max_lag = static_cast<int>(std::floor(max_lag_ms * fs / 1000.0 + 1e-9));
  const int lag = ItdLagSamples(signal.left().view(), signal.right().view(), max_lag);
  return lag / fs * 1e6;
}

/// Interaural level difference 10 log10(|L|^2 / |R|^2) in dB.
inline double IldDb(const BinauralSignal& signal) {
  const double el = detail::Energy(signal.left().view());
  const double er = detail::Energy(signal.right().view());
  if (!(el > 0.0) || !(er > 0.0)) throw MetricError("ild: a channel is silent");
  // Difference of logs keeps swap antisymmetry exact.
  return 10.0 * (std::log10(el) - std::log10(er));
}

struct SpatialDelta {
  double itd_us = 0.0;
  double ild_db = 0.0;
};

inline SpatialDelta DeltaSpatial(const BinauralSignal& est, const BinauralSignal& ref) {
  detail::CheckSameShape(est, ref, "delta_spatial");
  return {std::abs(ItdUs(est) - ItdUs(ref)), std::abs(IldDb(est) - IldDb(ref))};
}

/// Mean spatial deltas over consecutive full chunks of `chunk_ms`. Chunks where
/// the reference is below `silence_db` dBFS (mean square) on both channels are
/// skipped.
inline SpatialDelta DeltaSpatialChunked(const BinauralSignal& est,
                                        const BinauralSignal& ref,
                                        double chunk_ms = 250.0,
                                        double silence_db = -60.0) {
  detail::CheckSameShape(est, ref, "delta_spatial_chunked");
  const int fs = ref.sample_rate_hz();
  const auto chunk = static_cast<std::size_t>(std::llround(chunk_ms * fs / 1000.0));
  if (chunk == 0 || ref.size() < chunk) {
    throw ArgumentError("delta_spatial_chunked: signal shorter than one chunk");
  }
  auto level_db = [chunk](std::span<const float> x) {
    const double ms = detail::Energy(x) / static_cast<double>(chunk);
    return ms > 0.0 ? 10.0 * std::log10(ms) : -std::numeric_limits<double>::infinity();
  };
  auto slice = [&](const BinauralSignal& s, std::size_t start) {
    auto l = s.left().view().subspan(start, chunk);
    auto r = s.right().view().subspan(start, chunk);
    return BinauralSignal(std::vector<float>(l.begin(), l.end()),
                          std::vector<float>(r.begin(), r.end()), fs);
  };

  SpatialDelta sum;
  int used = 0;
  for (std::size_t start = 0; start + chunk <= ref.size(); start += chunk) {
    const double ll = level_db(ref.left().view().subspan(start, chunk));
    const double lr = level_db(ref.right().view().subspan(start, chunk));
    if (ll < silence_db && lr < silence_db) continue;
    const SpatialDelta d = DeltaSpatial(slice(est, start), slice(ref, start));
    sum.itd_us += d.itd_us;
    sum.ild_db += d.ild_db;
    ++used;
  }
  if (used == 0) throw MetricError("delta_spatial_chunked: every chunk is silent");
  return {sum.itd_us / used, sum.ild_db / used};
}

struct MetricsReport {
  double si_snr_db = 0.0;
  double si_snri_db = 0.0;
  double snr_db = 0.0;
  double delta_itd_us = 0.0;
  double delta_ild_db = 0.0;
  double loss_value = 0.0;
  bool saturated = false;  // a ratio hit the 80 dB cap
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MetricsReport, si_snr_db, si_snri_db, snr_db,
                                   delta_itd_us, delta_ild_db, loss_value, saturated)

/// Computes every metric for (estimate, reference, mixture). Errors name the
/// metric that failed.
inline MetricsReport Evaluate(const BinauralSignal& est, const BinauralSignal& ref,
                              const BinauralSignal& mixture) {
  auto guarded = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const MetricError& e) {
      throw MetricError(std::string(name) + " failed: " + e.what());
    }
  };
  MetricsReport r;
  r.si_snr_db = guarded("si_snr", [&] { return SiSnr(est, ref); });
  r.si_snri_db = guarded("si_snri", [&] { return SiSnrImprovement(est, mixture, ref); });
  const double snr_l = guarded("snr", [&] { return Snr(est.left(), ref.left()); });
  const double snr_r = guarded("snr", [&] { return Snr(est.right(), ref.right()); });
  r.snr_db = 0.5 * (snr_l + snr_r);
  r.loss_value = -r.snr_db;
  const SpatialDelta d = guarded("delta_spatial", [&] { return DeltaSpatial(est, ref); });
  r.delta_itd_us = d.itd_us;
  r.delta_ild_db = d.ild_db;
  const double cap = kSaturationDb - 1e-9;
  r.saturated = snr_l >= cap || snr_r >= cap || r.si_snr_db >= cap;
  return r;
}

}  // namespace btse::metrics

#endif  // BTSE_METRICS_HPP_
