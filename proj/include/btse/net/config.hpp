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

#ifndef BTSE_NET_CONFIG_HPP_
#define BTSE_NET_CONFIG_HPP_

#include <string>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"
#include "btse/signal.hpp"

namespace btse::net {

/// Architecture hyperparameters. Together with a weight bundle they fully
/// determine the forward function.
struct ModelConfig {
  int dim = 128;            // D: latent channels
  int stride = 32;          // L: samples per latent frame
  int chunk_frames = 13;    // K: frames per streaming chunk
  int num_classes = 20;     // N_c
  int enc_layers = 10;
  int enc_kernel = 3;
  int heads = 8;
  int ff_dim = 512;
  int sample_rate_hz = kCanonicalRateHz;

  /// Builds a config with the default head count and ff_dim = 4 * dim.
  static ModelConfig WithDims(int dim, int stride, int chunk_frames,
                              int num_classes = 20) {
    ModelConfig c;
    c.dim = dim;
    c.stride = stride;
    c.chunk_frames = chunk_frames;
    c.num_classes = num_classes;
    c.ff_dim = 4 * dim;
    return c;
  }

  int chunk_samples() const { return chunk_frames * stride; }
  /// Input samples consumed per chunk: the chunk plus one stride lookahead.
  int window_samples() const { return chunk_samples() + stride; }
  int head_dim() const { return dim / heads; }

  /// Dilation of encoder layer j is 2^j; its cached context is 2 * 2^j frames.
  int dilation(int layer) const { return 1 << layer; }
  int context_frames(int layer) const {
    return (enc_kernel - 1) * dilation(layer);
  }
  int total_context_frames() const {
    int total = 0;
    for (int j = 0; j < enc_layers; ++j) total += context_frames(j);
    return total;
  }

  void Validate() const {
    auto fail = [](const std::string& msg) {
      throw ArgumentError("invalid model config: " + msg);
    };
    if (dim < 1) fail("D must be positive");
    if (stride < 1) fail("L must be >= 1");
    if (chunk_frames < 1) fail("K must be >= 1");
    if (num_classes < 1) fail("N_c must be positive");
    if (enc_layers < 1 || enc_layers > 24) fail("enc_layers must be in [1, 24]");
    if (enc_kernel != 3) fail("enc_kernel must be 3");
    if (heads < 1 || dim % heads != 0) fail("D must be divisible by heads");
    if (ff_dim < 1) fail("ff_dim must be positive");
    if (sample_rate_hz <= 0) fail("sample rate must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"D", c.dim},
                     {"L", c.stride},
                     {"K", c.chunk_frames},
                     {"N_c", c.num_classes},
                     {"enc_layers", c.enc_layers},
                     {"enc_kernel", c.enc_kernel},
                     {"heads", c.heads},
                     {"ff_dim", c.ff_dim},
                     {"sample_rate_hz", c.sample_rate_hz}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("D").get_to(c.dim);
  j.at("L").get_to(c.stride);
  j.at("K").get_to(c.chunk_frames);
  j.at("N_c").get_to(c.num_classes);
  j.at("enc_layers").get_to(c.enc_layers);
  j.at("enc_kernel").get_to(c.enc_kernel);
  j.at("heads").get_to(c.heads);
  j.at("ff_dim").get_to(c.ff_dim);
  j.at("sample_rate_hz").get_to(c.sample_rate_hz);
}

}  // namespace btse::net

#endif  // BTSE_NET_CONFIG_HPP_
