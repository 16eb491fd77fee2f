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

// Forward pass of the dual-channel mask-estimation network, one chunk at a
// time:
//
//   2 x (KL + L) samples --project_in--> x (D x K)
//   x, encoder context   --encode-->     e (D x K)
//   e, e_prev, label     --decode-->     m (D x K)
//   y = x * m (elementwise)
//   y                    --project_out--> 2 x KL samples
//
// Latent blocks are column-major D x K matrices, one column per frame.

#ifndef BTSE_NET_MODEL_HPP_
#define BTSE_NET_MODEL_HPP_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btse/errors.hpp"
#include "btse/net/config.hpp"
#include "btse/net/transformer.hpp"
#include "btse/net/weights.hpp"
#include "btse/ontology.hpp"

namespace btse::net {

using LatentBlock = Eigen::MatrixXf;
using LabelEmbedding = Eigen::VectorXf;
/// Row c holds channel c (0 = left, 1 = right).
using StereoBlock = Eigen::Matrix<float, 2, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

using RowMajorMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::MatrixXf AsMatrix(const Tensor& t, Eigen::Index rows,
                                Eigen::Index cols) {
  return Eigen::Map<const RowMajorMatrix>(t.data.data(), rows, cols);
}

inline Eigen::VectorXf AsVector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXf>(t.data.data(),
                                           static_cast<Eigen::Index>(t.data.size()));
}

inline void CheckShape(const Eigen::MatrixXf& m, Eigen::Index rows,
                       Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) +
                     "x" + std::to_string(cols) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace detail

/// Dilated causal convolution layer, kernel 3. Tap k multiplies the input
/// frame (2 - k) * dilation steps in the past.
struct EncoderLayerWeights {
  std::array<Eigen::MatrixXf, 3> taps;
  Eigen::VectorXf bias;
  int dilation = 1;
};

/// Weights unpacked into matrix form for inference. Immutable; share freely.
class Model {
 public:
  explicit Model(const WeightBundle& bundle)
      : config_(bundle.config()), registry_(bundle.registry()) {
    const ModelConfig& c = config_;
    const Eigen::Index D = c.dim;
    const Eigen::Index L = c.stride;

    in_weight_ = detail::AsMatrix(bundle.at("in_proj.weight"), D, 4 * L);
    in_bias_ = detail::AsVector(bundle.at("in_proj.bias"));

    for (int j = 0; j < c.enc_layers; ++j) {
      const std::string prefix = "encoder." + std::to_string(j);
      const Tensor& w = bundle.at(prefix + ".weight");
      EncoderLayerWeights layer;
      layer.dilation = c.dilation(j);
      for (int k = 0; k < 3; ++k) {
        layer.taps[k].resize(D, D);
        for (Eigen::Index o = 0; o < D; ++o) {
          for (Eigen::Index i = 0; i < D; ++i) {
            layer.taps[k](o, i) = w.data[(o * D + i) * 3 + k];
          }
        }
      }
      layer.bias = detail::AsVector(bundle.at(prefix + ".bias"));
      encoder_.push_back(std::move(layer));
    }

    query_embed_ = detail::AsMatrix(bundle.at("query_embed.weight"), D, c.num_classes);

    auto linear = [&](const std::string& prefix, Eigen::Index out, Eigen::Index in) {
      return LinearWeights{detail::AsMatrix(bundle.at(prefix + ".weight"), out, in),
                           detail::AsVector(bundle.at(prefix + ".bias"))};
    };
    auto attention = [&](const std::string& block) {
      const std::string p = "decoder." + block + ".";
      return AttentionWeights{linear(p + "q_proj", D, D), linear(p + "k_proj", D, D),
                              linear(p + "v_proj", D, D), linear(p + "out_proj", D, D),
                              c.heads};
    };
    auto norm = [&](int n) {
      const std::string p = "decoder.norm" + std::to_string(n);
      return NormWeights{detail::AsVector(bundle.at(p + ".gain")),
                         detail::AsVector(bundle.at(p + ".bias"))};
    };
    decoder_.self_attn = attention("self_attn");
    decoder_.cross_attn = attention("cross_attn");
    decoder_.ff.expand = linear("decoder.ff1", c.ff_dim, D);
    decoder_.ff.contract = linear("decoder.ff2", D, c.ff_dim);
    decoder_.norm1 = norm(1);
    decoder_.norm2 = norm(2);
    decoder_.norm3 = norm(3);

    // Row (c * L + t) of out_weight_ holds out_proj.weight[c, :, t].
    const Tensor& ow = bundle.at("out_proj.weight");
    out_weight_.resize(2 * L, D);
    for (Eigen::Index ch = 0; ch < 2; ++ch) {
      for (Eigen::Index d = 0; d < D; ++d) {
        for (Eigen::Index t = 0; t < L; ++t) {
          out_weight_(ch * L + t, d) = ow.data[(ch * D + d) * L + t];
        }
      }
    }
    const Tensor& ob = bundle.at("out_proj.bias");
    out_bias_ = {ob.data[0], ob.data[1]};
  }

  const ModelConfig& config() const { return config_; }
  const ontology::ClassRegistry& registry() const { return registry_; }
  const Eigen::MatrixXf& in_weight() const { return in_weight_; }
  const Eigen::VectorXf& in_bias() const { return in_bias_; }
  const std::vector<EncoderLayerWeights>& encoder() const { return encoder_; }
  const Eigen::MatrixXf& query_embed() const { return query_embed_; }
  const DecoderLayerWeights& decoder() const { return decoder_; }
  const Eigen::MatrixXf& out_weight() const { return out_weight_; }
  const std::array<float, 2>& out_bias() const { return out_bias_; }

 private:
  ModelConfig config_;
  ontology::ClassRegistry registry_;
  Eigen::MatrixXf in_weight_;  // D x (2 * 2L), columns ordered (channel, tap)
  Eigen::VectorXf in_bias_;
  std::vector<EncoderLayerWeights> encoder_;
  Eigen::MatrixXf query_embed_;
  DecoderLayerWeights decoder_;
  Eigen::MatrixXf out_weight_;
  std::array<float, 2> out_bias_{};
};

/// Cached trailing inputs of every encoder layer. Layer j keeps the last
/// 2 * 2^j frames it has seen; zeros before the first chunk.
struct EncoderState {
  std::vector<Eigen::MatrixXf> contexts;

  static EncoderState Zeros(const ModelConfig& c) {
    EncoderState s;
    for (int j = 0; j < c.enc_layers; ++j) {
      s.contexts.push_back(Eigen::MatrixXf::Zero(c.dim, c.context_frames(j)));
    }
    return s;
  }

  Eigen::Index total_frames() const {
    Eigen::Index n = 0;
    for (const auto& ctx : contexts) n += ctx.cols();
    return n;
  }

  friend bool operator==(const EncoderState& a, const EncoderState& b) {
    if (a.contexts.size() != b.contexts.size()) return false;
    for (std::size_t j = 0; j < a.contexts.size(); ++j) {
      if (a.contexts[j] != b.contexts[j]) return false;
    }
    return true;
  }
};

/// The previous chunk's unconditioned encoding.
struct DecoderState {
  LatentBlock prev_encoded;

  static DecoderState Zeros(const ModelConfig& c) {
    return {LatentBlock::Zero(c.dim, c.chunk_frames)};
  }

  friend bool operator==(const DecoderState& a, const DecoderState& b) {
    return a.prev_encoded == b.prev_encoded;
  }
};

/// Strided input convolution (kernel 2L, stride L) over one chunk plus its
/// one-stride lookahead, followed by ReLU. Frame i sees samples [iL, iL + 2L).
inline LatentBlock ProjectIn(const Model& model, const StereoBlock& samples) {
  const ModelConfig& c = model.config();
  const Eigen::Index L = c.stride;
  const Eigen::Index K = c.chunk_frames;
  if (samples.cols() != c.window_samples()) {
    throw ShapeError("project_in expects " + std::to_string(c.window_samples()) +
                     " samples per channel, got " + std::to_string(samples.cols()));
  }
  Eigen::MatrixXf patches(4 * L, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    patches.col(i).head(2 * L) = samples.row(0).segment(i * L, 2 * L).transpose();
    patches.col(i).tail(2 * L) = samples.row(1).segment(i * L, 2 * L).transpose();
  }
  LatentBlock x = model.in_weight() * patches;
  x.colwise() += model.in_bias();
  return x.cwiseMax(0.0f);
}

/// Runs the dilated causal encoder over one chunk, consuming and refreshing
/// the cached per-layer contexts. Each layer computes
/// out = in + ReLU(conv(context ++ in)).
inline LatentBlock EncodeChunk(const Model& model, const LatentBlock& x,
                               EncoderState& state) {
  const ModelConfig& c = model.config();
  detail::CheckShape(x, c.dim, c.chunk_frames, "encode_chunk input");
  if (state.contexts.size() != model.encoder().size()) {
    throw ShapeError("encoder state has " + std::to_string(state.contexts.size()) +
                     " layers, model has " + std::to_string(model.encoder().size()));
  }
  const Eigen::Index K = x.cols();
  LatentBlock in = x;
  for (std::size_t j = 0; j < model.encoder().size(); ++j) {
    const EncoderLayerWeights& layer = model.encoder()[j];
    Eigen::MatrixXf& ctx = state.contexts[j];
    const Eigen::Index d = layer.dilation;
    detail::CheckShape(ctx, c.dim, 2 * d, "encoder context");

    Eigen::MatrixXf history(c.dim, 2 * d + K);
    history << ctx, in;
    Eigen::MatrixXf conv = layer.taps[0] * history.middleCols(0, K);
    conv.noalias() += layer.taps[1] * history.middleCols(d, K);
    conv.noalias() += layer.taps[2] * history.middleCols(2 * d, K);
    conv.colwise() += layer.bias;

    ctx = history.rightCols(2 * d);
    in += conv.cwiseMax(0.0f);
  }
  return in;
}

/// Label embedding l = W_q q (no bias). Accepts real-valued queries.
inline LabelEmbedding EmbedQuery(const Model& model, const Eigen::VectorXf& q) {
  if (q.size() != model.config().num_classes) {
    throw ShapeError("query has " + std::to_string(q.size()) +
                     " entries, model expects " +
                     std::to_string(model.config().num_classes));
  }
  return model.query_embed() * q;
}

inline LabelEmbedding EmbedQuery(const Model& model,
                                 const ontology::QueryVector& q) {
  Eigen::VectorXf v(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) v[i] = q.bits[i] ? 1.0f : 0.0f;
  return EmbedQuery(model, v);
}

/// Label-conditioned transformer decoder over the two-chunk window
/// [e_prev, e]. Returns the mask for the current K frames and stores `e` as
/// the next chunk's context.
inline LatentBlock DecodeMask(const Model& model, const LatentBlock& encoded,
                              const LabelEmbedding& label, DecoderState& state) {
  const ModelConfig& c = model.config();
  detail::CheckShape(encoded, c.dim, c.chunk_frames, "decode_mask input");
  detail::CheckShape(state.prev_encoded, c.dim, c.chunk_frames, "decoder state");
  if (label.size() != c.dim) throw ShapeError("label embedding has wrong size");

  const Eigen::Index K = encoded.cols();
  Eigen::MatrixXf memory(c.dim, 2 * K);
  memory << state.prev_encoded, encoded;
  const Eigen::MatrixXf target =
      (memory.array().colwise() * label.array()).matrix();
  LatentBlock mask = DecoderLayer(model.decoder(), target, memory, K);
  state.prev_encoded = encoded;
  return mask;
}

inline LatentBlock ApplyMask(const LatentBlock& x, const LatentBlock& mask) {
  detail::CheckShape(mask, x.rows(), x.cols(), "apply_mask");
  return x.cwiseProduct(mask);
}

/// Transposed convolution with kernel L and stride L: frame i writes samples
/// [iL, (i + 1)L) of each channel, no overlap.
inline StereoBlock ProjectOut(const Model& model, const LatentBlock& y) {
  const ModelConfig& c = model.config();
  detail::CheckShape(y, c.dim, c.chunk_frames, "project_out input");
  const Eigen::Index L = c.stride;
  const Eigen::Index K = y.cols();
  const Eigen::MatrixXf frames = model.out_weight() * y;  // 2L x K
  StereoBlock out(2, K * L);
  for (Eigen::Index ch = 0; ch < 2; ++ch) {
    for (Eigen::Index i = 0; i < K; ++i) {
      out.row(ch).segment(i * L, L) =
          frames.col(i).segment(ch * L, L).transpose().array() + model.out_bias()[ch];
    }
  }
  return out;
}

/// Full per-chunk pipeline: the unit of streaming work.
inline StereoBlock ProcessChunk(const Model& model, const StereoBlock& window,
                                const LabelEmbedding& label,
                                EncoderState& enc_state, DecoderState& dec_state) {
  const LatentBlock x = ProjectIn(model, window);
  const LatentBlock e = EncodeChunk(model, x, enc_state);
  const LatentBlock m = DecodeMask(model, e, label, dec_state);
  return ProjectOut(model, ApplyMask(x, m));
}

}  // namespace btse::net

#endif  // BTSE_NET_MODEL_HPP_
