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

// Building blocks of a standard post-norm transformer decoder layer operating
// on column-major feature maps (one column per frame).

#ifndef BTSE_NET_TRANSFORMER_HPP_
#define BTSE_NET_TRANSFORMER_HPP_

#include <cmath>

#include <Eigen/Core>

namespace btse::net {

struct LinearWeights {
  Eigen::MatrixXf weight;  // out x in
  Eigen::VectorXf bias;

  Eigen::MatrixXf operator()(const Eigen::MatrixXf& x) const {
    Eigen::MatrixXf y = weight * x;
    y.colwise() += bias;
    return y;
  }
};

struct AttentionWeights {
  LinearWeights q, k, v, out;
  int heads = 1;
};

struct NormWeights {
  Eigen::VectorXf gain;
  Eigen::VectorXf bias;
};

/// Multi-head scaled dot-product attention. Queries are the columns of
/// `query_in`; keys and values come from `kv_in`. No mask.
inline Eigen::MatrixXf MultiHeadAttention(const AttentionWeights& w,
                                          const Eigen::MatrixXf& query_in,
                                          const Eigen::MatrixXf& kv_in) {
  const Eigen::MatrixXf q = w.q(query_in);
  const Eigen::MatrixXf k = w.k(kv_in);
  const Eigen::MatrixXf v = w.v(kv_in);
  const auto dim = static_cast<int>(q.rows());
  const int head_dim = dim / w.heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  Eigen::MatrixXf context(dim, query_in.cols());
  for (int h = 0; h < w.heads; ++h) {
    const int r = h * head_dim;
    // scores(key, query)
    Eigen::MatrixXf scores =
        (k.middleRows(r, head_dim).transpose() * q.middleRows(r, head_dim)) * scale;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      auto col = scores.col(c);
      col.array() -= col.maxCoeff();
      col = col.array().exp().matrix();
      col /= col.sum();
    }
    context.middleRows(r, head_dim) = v.middleRows(r, head_dim) * scores;
  }
  return w.out(context);
}

/// Per-frame layer normalization over the feature dimension.
inline Eigen::MatrixXf LayerNorm(const NormWeights& w, const Eigen::MatrixXf& x,
                                 float eps = 1e-5f) {
  Eigen::MatrixXf y(x.rows(), x.cols());
  const auto n = static_cast<float>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const float mean = x.col(c).sum() / n;
    const Eigen::ArrayXf centered = x.col(c).array() - mean;
    const float var = centered.square().sum() / n;
    y.col(c) = (centered / std::sqrt(var + eps) * w.gain.array() + w.bias.array())
                   .matrix();
  }
  return y;
}

struct FeedForwardWeights {
  LinearWeights expand;
  LinearWeights contract;

  Eigen::MatrixXf operator()(const Eigen::MatrixXf& x) const {
    return contract(expand(x).cwiseMax(0.0f));
  }
};

struct DecoderLayerWeights {
  AttentionWeights self_attn;
  AttentionWeights cross_attn;
  FeedForwardWeights ff;
  NormWeights norm1, norm2, norm3;
};

/// One post-norm decoder layer. Only the queries in `query_cols` (the trailing
/// columns of `target`) are produced; self-attention still attends over all of
/// `target`. Every sub-block after self-attention is per-column, so this is
/// identical to running the full layer and keeping the trailing columns.
inline Eigen::MatrixXf DecoderLayer(const DecoderLayerWeights& w,
                                    const Eigen::MatrixXf& target,
                                    const Eigen::MatrixXf& memory,
                                    Eigen::Index query_cols) {
  const Eigen::MatrixXf queries = target.rightCols(query_cols);
  Eigen::MatrixXf x =
      LayerNorm(w.norm1, queries + MultiHeadAttention(w.self_attn, queries, target));
  x = LayerNorm(w.norm2, x + MultiHeadAttention(w.cross_attn, x, memory));
  return LayerNorm(w.norm3, x + w.ff(x));
}

}  // namespace btse::net

#endif  // BTSE_NET_TRANSFORMER_HPP_
