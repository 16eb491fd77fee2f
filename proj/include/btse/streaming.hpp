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

#ifndef BTSE_STREAMING_HPP_
#define BTSE_STREAMING_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"
#include "btse/net/model.hpp"
#include "btse/ontology.hpp"
#include "btse/signal.hpp"

namespace btse::stream {

using net::StereoBlock;

/// Per-stream inference state. Emitted chunk k (2 x KL samples) covers input
/// samples [k*KL, (k+1)*KL) and depends only on inputs [0, (k+1)*KL + L).
///
/// Not reentrant: serialize Push calls per session. Sessions sharing one
/// Model may run in parallel.
class StreamSession {
 public:
  StreamSession(std::shared_ptr<const net::Model> model,
                const ontology::QueryVector& query)
      : model_(std::move(model)),
        label_(net::EmbedQuery(*model_, query)),
        enc_state_(net::EncoderState::Zeros(model_->config())),
        dec_state_(net::DecoderState::Zeros(model_->config())) {
    const auto capacity = static_cast<std::size_t>(2 * window());
    for (auto& ch : pending_) ch.reserve(capacity);
  }

  /// Appends samples and returns every chunk that became computable.
  std::vector<StereoBlock> Push(std::span<const float> left,
                                std::span<const float> right) {
    if (left.size() != right.size()) {
      throw ShapeError("push_samples: channel lengths differ (" +
                       std::to_string(left.size()) + " vs " +
                       std::to_string(right.size()) + ")");
    }
    std::vector<StereoBlock> out;
    const auto win = static_cast<std::size_t>(window());
    std::size_t pos = 0;
    while (pos < left.size()) {
      const std::size_t take = std::min(left.size() - pos, win - pending_[0].size());
      pending_[0].insert(pending_[0].end(), left.begin() + pos, left.begin() + pos + take);
      pending_[1].insert(pending_[1].end(), right.begin() + pos, right.begin() + pos + take);
      pos += take;
      if (pending_[0].size() == win) out.push_back(EmitChunk());
    }
    return out;
  }

  std::vector<StereoBlock> Push(const BinauralSignal& signal) {
    return Push(signal.left().view(), signal.right().view());
  }

  const net::ModelConfig& config() const { return model_->config(); }
  std::int64_t emitted_samples() const { return emitted_samples_; }
  std::size_t pending_samples() const { return pending_[0].size(); }
  const net::EncoderState& encoder_state() const { return enc_state_; }
  const net::DecoderState& decoder_state() const { return dec_state_; }

 private:
  int window() const { return model_->config().window_samples(); }

  StereoBlock EmitChunk() {
    const net::ModelConfig& c = model_->config();
    StereoBlock win(2, c.window_samples());
    for (int ch = 0; ch < 2; ++ch) {
      win.row(ch) = Eigen::Map<const Eigen::RowVectorXf>(pending_[ch].data(),
                                                         c.window_samples());
      // Keep the L lookahead samples: they start the next window.
      pending_[ch].erase(pending_[ch].begin(),
                         pending_[ch].begin() + c.chunk_samples());
    }
    StereoBlock chunk = net::ProcessChunk(*model_, win, label_, enc_state_, dec_state_);
    emitted_samples_ += c.chunk_samples();
    return chunk;
  }

  std::shared_ptr<const net::Model> model_;
  net::LabelEmbedding label_;
  std::vector<float> pending_[2];
  net::EncoderState enc_state_;
  net::DecoderState dec_state_;
  std::int64_t emitted_samples_ = 0;
};

/// Concatenates emitted chunks into a signal.
inline BinauralSignal ConcatChunks(const std::vector<StereoBlock>& chunks,
                                   int sample_rate_hz) {
  std::vector<float> ch[2];
  for (const auto& c : chunks) {
    for (int r = 0; r < 2; ++r) {
      ch[r].insert(ch[r].end(), c.row(r).data(), c.row(r).data() + c.cols());
    }
  }
  return BinauralSignal(std::move(ch[0]), std::move(ch[1]), sample_rate_hz);
}

/// Reference whole-signal run of the same chunk loop from zero state. Emits
/// floor(T / KL) chunks; the lookahead of the last chunk is zero-padded when
/// it runs past the end of the input.
inline BinauralSignal ProcessOffline(const net::Model& model,
                                     const BinauralSignal& signal,
                                     const ontology::QueryVector& query) {
  const net::ModelConfig& c = model.config();
  if (signal.sample_rate_hz() != c.sample_rate_hz) {
    throw ArgumentError("input is " + std::to_string(signal.sample_rate_hz()) +
                        " Hz but the model runs at " +
                        std::to_string(c.sample_rate_hz) + " Hz");
  }
  const net::LabelEmbedding label = net::EmbedQuery(model, query);
  auto enc = net::EncoderState::Zeros(c);
  auto dec = net::DecoderState::Zeros(c);
  const std::size_t total = signal.size();
  const std::size_t chunk = c.chunk_samples();
  const std::size_t n_chunks = total / chunk;

  std::vector<float> out[2];
  out[0].reserve(n_chunks * chunk);
  out[1].reserve(n_chunks * chunk);
  StereoBlock win(2, c.window_samples());
  for (std::size_t k = 0; k < n_chunks; ++k) {
    const std::size_t start = k * chunk;
    for (int ch = 0; ch < 2; ++ch) {
      const auto& src = signal.channel(ch).samples();
      for (Eigen::Index t = 0; t < win.cols(); ++t) {
        const std::size_t i = start + static_cast<std::size_t>(t);
        win(ch, t) = i < total ? src[i] : 0.0f;
      }
    }
    const StereoBlock y = net::ProcessChunk(model, win, label, enc, dec);
    for (int ch = 0; ch < 2; ++ch) {
      out[ch].insert(out[ch].end(), y.row(ch).data(), y.row(ch).data() + y.cols());
    }
  }
  return BinauralSignal(std::move(out[0]), std::move(out[1]), c.sample_rate_hz);
}

struct LatencyBreakdown {
  double buffer_ms = 0.0;
  double lookahead_ms = 0.0;
  double compute_ms = 0.0;
  double total_algorithmic_ms = 0.0;
};

/// Algorithmic latency = chunk (KL) + input-convolution lookahead (L).
inline LatencyBreakdown AlgorithmicLatency(const net::ModelConfig& config) {
  const double fs = config.sample_rate_hz;
  LatencyBreakdown b;
  b.buffer_ms = config.chunk_samples() / fs * 1000.0;
  b.lookahead_ms = config.stride / fs * 1000.0;
  b.total_algorithmic_ms =
      static_cast<double>(config.chunk_samples() + config.stride) / fs * 1000.0;
  return b;
}

/// Truncates to one decimal place (1.451 -> 1.4, 10.158 -> 10.1), the
/// convention used by published latency tables.
inline double TruncateToTenths(double ms) {
  return std::floor(ms * 10.0 + 1e-9) / 10.0;
}

inline void to_json(nlohmann::json& j, const LatencyBreakdown& b) {
  j = nlohmann::json{{"buffer_ms", b.buffer_ms},
                     {"lookahead_ms", b.lookahead_ms},
                     {"compute_ms", b.compute_ms},
                     {"total_algorithmic_ms", b.total_algorithmic_ms},
                     {"total_algorithmic_ms_1dp", TruncateToTenths(b.total_algorithmic_ms)}};
}

struct BenchStats {
  int n_runs = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

inline void to_json(nlohmann::json& j, const BenchStats& s) {
  j = nlohmann::json{{"n_runs", s.n_runs},
                     {"mean_ms", s.mean_ms},
                     {"p50_ms", s.p50_ms},
                     {"p95_ms", s.p95_ms}};
}

/// Wall-clock time of the five-stage chunk pipeline (no I/O), after warming
/// up the encoder and decoder state on random input.
inline BenchStats BenchChunk(const net::Model& model, int n_runs,
                             std::uint64_t seed = 0, int warmup_chunks = 16) {
  if (n_runs < 1) throw ArgumentError("n_runs must be >= 1");
  const net::ModelConfig& c = model.config();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
  auto random_window = [&] {
    StereoBlock w(2, c.window_samples());
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
  };
  Eigen::VectorXf q = Eigen::VectorXf::Zero(c.num_classes);
  q[0] = 1.0f;
  const net::LabelEmbedding label = net::EmbedQuery(model, q);
  auto enc = net::EncoderState::Zeros(c);
  auto dec = net::DecoderState::Zeros(c);
  for (int i = 0; i < warmup_chunks; ++i) {
    net::ProcessChunk(model, random_window(), label, enc, dec);
  }

  std::vector<StereoBlock> inputs;
  inputs.reserve(n_runs);
  for (int i = 0; i < n_runs; ++i) inputs.push_back(random_window());

  std::vector<double> times;
  times.reserve(n_runs);
  float sink = 0.0f;
  for (const auto& w : inputs) {
    const auto t0 = std::chrono::steady_clock::now();
    const StereoBlock y = net::ProcessChunk(model, w, label, enc, dec);
    const auto t1 = std::chrono::steady_clock::now();
    sink += y(0, 0);
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  // Keeps the pipeline output observable.
  [[maybe_unused]] volatile float observed = sink;

  BenchStats s;
  s.n_runs = n_runs;
  double sum = 0.0;
  for (double t : times) sum += t;
  s.mean_ms = sum / n_runs;
  std::sort(times.begin(), times.end());
  auto rank = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p * n_runs)) - 1;
    return times[std::min(idx, times.size() - 1)];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  return s;
}

}  // namespace btse::stream

#endif  // BTSE_STREAMING_HPP_
