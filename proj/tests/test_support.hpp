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

// Shared helpers for the unit and acceptance suites: random signals, temporary
// directories, on-disk scene fixtures and independent reference
// implementations used as oracles.

#ifndef BTSE_TESTS_TEST_SUPPORT_HPP_
#define BTSE_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/btse.hpp"

namespace btse::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "btse") {
    std::random_device rd;
    const auto base = fs::temp_directory_path();
    for (;;) {
      path_ = base / (tag + "_" + std::to_string(rd()));
      if (fs::create_directories(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<float> RandomVector(std::size_t n, std::uint64_t seed,
                                       float amplitude = 0.5f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-amplitude, amplitude);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

inline BinauralSignal RandomBinaural(std::size_t n, std::uint64_t seed,
                                     int rate = kCanonicalRateHz,
                                     float amplitude = 0.5f) {
  return BinauralSignal(RandomVector(n, seed, amplitude),
                        RandomVector(n, seed ^ 0x5bd1e995ULL, amplitude), rate);
}

inline std::vector<float> Sine(std::size_t n, double freq_hz, int rate,
                               double amplitude = 1.0, double phase = 0.0) {
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = static_cast<float>(amplitude *
                              std::sin(2.0 * std::numbers::pi * freq_hz * i / rate + phase));
  }
  return v;
}

inline double MaxAbsDiff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  return m;
}

inline double MaxAbsDiff(const BinauralSignal& a, const BinauralSignal& b) {
  return std::max(MaxAbsDiff(a.left().view(), b.left().view()),
                  MaxAbsDiff(a.right().view(), b.right().view()));
}

/// Textbook O(N*M) linear convolution in double.
inline std::vector<double> DirectConvolve(std::span<const float> x,
                                          std::span<const float> h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      y[i + j] += static_cast<double>(x[i]) * h[j];
    }
  }
  return y;
}

/// Small random model config used throughout the suites.
inline net::ModelConfig SmallConfig(int dim = 16, int stride = 8, int chunk_frames = 4,
                                    int enc_layers = 4, int heads = 2) {
  auto c = net::ModelConfig::WithDims(dim, stride, chunk_frames);
  c.enc_layers = enc_layers;
  c.heads = heads;
  return c;
}

// Random DAG: edges only from lower to higher index of a random permutation.
inline std::pair<std::vector<std::string>, std::vector<std::pair<std::string, std::string>>>
RandomDag(std::mt19937_64& rng, std::size_t n, double density) {
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(i));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<std::string, std::string>> edges;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t m = static_cast<std::size_t>(density * n);
  for (std::size_t e = 0; e < m; ++e) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    edges.emplace_back(nodes[order[a]], nodes[order[b]]);
  }
  return {nodes, edges};
}

// Transitive closure by repeated DFS from every node.
inline std::set<std::string> BruteForceOthers(
    const std::vector<std::string>& nodes,
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::set<std::string>& targets) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [p, c] : edges) adj[p].push_back(c);
  auto reach = [&](const std::string& from) {
    std::set<std::string> seen{from};
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (const auto& w : adj[v]) {
        if (seen.insert(w).second) stack.push_back(w);
      }
    }
    return seen;
  };
  std::map<std::string, std::set<std::string>> closure;
  for (const auto& v : nodes) closure[v] = reach(v);
  std::set<std::string> out;
  for (const auto& v : nodes) {
    bool related = false;
    for (const auto& t : targets) {
      if (closure[t].contains(v) || closure[v].contains(t)) related = true;
    }
    if (!related) out.insert(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference forward pass, written directly against the raw tensors with plain
// loops in double precision. Shares no code with btse::net beyond the tensor
// container.

class ReferenceModel {
 public:
  explicit ReferenceModel(const net::WeightBundle& bundle)
      : bundle_(bundle), c_(bundle.config()) {}

  const std::vector<float>& T(const std::string& name) const {
    return bundle_.at(name).data;
  }

  using Mat = std::vector<std::vector<double>>;  // [row][col]

  /// All frames of the input projection over the zero-padded signal.
  Mat ProjectIn(const BinauralSignal& s, std::size_t frames) const {
    const int D = c_.dim, L = c_.stride;
    const auto& w = T("in_proj.weight");
    const auto& b = T("in_proj.bias");
    Mat x(D, std::vector<double>(frames, 0.0));
    for (std::size_t f = 0; f < frames; ++f) {
      for (int o = 0; o < D; ++o) {
        double acc = b[o];
        for (int ch = 0; ch < 2; ++ch) {
          for (int t = 0; t < 2 * L; ++t) {
            const std::size_t n = f * L + t;
            const double v = n < s.size() ? s.channel(ch)[n] : 0.0;
            acc += w[(o * 2 + ch) * 2 * L + t] * v;
          }
        }
        x[o][f] = std::max(acc, 0.0);
      }
    }
    return x;
  }

  /// Whole-history dilated causal encoder, zero history before frame 0.
  Mat Encode(const Mat& x) const {
    const int D = c_.dim;
    const std::size_t T = x.empty() ? 0 : x[0].size();
    Mat in = x;
    for (int j = 0; j < c_.enc_layers; ++j) {
      const std::string p = "encoder." + std::to_string(j);
      const long d = 1L << j;
      const auto& w = this->T(p + ".weight");
      const auto& b = this->T(p + ".bias");
      Mat out = in;
      for (std::size_t t = 0; t < T; ++t) {
        for (int o = 0; o < D; ++o) {
          double acc = b[o];
          for (int k = 0; k < 3; ++k) {
            const long src = static_cast<long>(t) - (2 - k) * d;
            if (src < 0) continue;
            for (int i = 0; i < D; ++i) {
              acc += w[(o * D + i) * 3 + k] * in[i][src];
            }
          }
          out[o][t] = in[o][t] + std::max(acc, 0.0);
        }
      }
      in = std::move(out);
    }
    return in;
  }

  std::vector<double> Embed(const ontology::QueryVector& q) const {
    const auto& w = T("query_embed.weight");
    std::vector<double> l(c_.dim, 0.0);
    for (int o = 0; o < c_.dim; ++o) {
      for (int n = 0; n < c_.num_classes; ++n) {
        if (q.bits[n]) l[o] += w[o * c_.num_classes + n];
      }
    }
    return l;
  }

  /// Full decoder layer over every column of `target`.
  Mat Decode(const Mat& target, const Mat& memory) const {
    Mat x = Norm("decoder.norm1", Add(target, Attention("decoder.self_attn", target, target)));
    x = Norm("decoder.norm2", Add(x, Attention("decoder.cross_attn", x, memory)));
    return Norm("decoder.norm3", Add(x, FeedForward(x)));
  }

  /// Offline reference: chunked masking over floor(T / KL) chunks.
  BinauralSignal Process(const BinauralSignal& s, const ontology::QueryVector& q) const {
    const int D = c_.dim, K = c_.chunk_frames, L = c_.stride;
    const std::size_t n_chunks = s.size() / static_cast<std::size_t>(K * L);
    const std::size_t frames = n_chunks * K;
    const Mat x = ProjectIn(s, frames);
    const Mat e = Encode(x);
    const auto l = Embed(q);
    std::vector<float> out[2] = {std::vector<float>(frames * L, 0.0f),
                                 std::vector<float>(frames * L, 0.0f)};
    for (std::size_t k = 0; k < n_chunks; ++k) {
      Mat memory(D, std::vector<double>(2 * K, 0.0));
      for (int r = 0; r < D; ++r) {
        for (int t = 0; t < K; ++t) {
          if (k > 0) memory[r][t] = e[r][(k - 1) * K + t];
          memory[r][K + t] = e[r][k * K + t];
        }
      }
      Mat target = memory;
      for (int r = 0; r < D; ++r) {
        for (auto& v : target[r]) v *= l[r];
      }
      const Mat m = Decode(target, memory);
      const auto& ow = T("out_proj.weight");
      const auto& ob = T("out_proj.bias");
      for (int t = 0; t < K; ++t) {
        const std::size_t f = k * K + t;
        for (int ch = 0; ch < 2; ++ch) {
          for (int tap = 0; tap < L; ++tap) {
            double acc = ob[ch];
            for (int d = 0; d < D; ++d) {
              acc += ow[(ch * D + d) * L + tap] * x[d][f] * m[d][K + t];
            }
            out[ch][f * L + tap] = static_cast<float>(acc);
          }
        }
      }
    }
    return BinauralSignal(std::move(out[0]), std::move(out[1]), s.sample_rate_hz());
  }

 private:
  static Mat Add(const Mat& a, const Mat& b) {
    Mat r = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a[i].size(); ++j) r[i][j] += b[i][j];
    }
    return r;
  }

  Mat Linear(const std::string& p, const Mat& x, int out_dim) const {
    const std::size_t in_dim = x.size(), frames = x[0].size();
    const auto& w = T(p + ".weight");
    const auto& b = T(p + ".bias");
    Mat y(out_dim, std::vector<double>(frames, 0.0));
    for (int o = 0; o < out_dim; ++o) {
      for (std::size_t t = 0; t < frames; ++t) {
        double acc = b[o];
        for (std::size_t i = 0; i < in_dim; ++i) acc += w[o * in_dim + i] * x[i][t];
        y[o][t] = acc;
      }
    }
    return y;
  }

  Mat Attention(const std::string& p, const Mat& query_in, const Mat& kv_in) const {
    const int D = c_.dim, H = c_.heads, hd = D / H;
    const Mat q = Linear(p + ".q_proj", query_in, D);
    const Mat k = Linear(p + ".k_proj", kv_in, D);
    const Mat v = Linear(p + ".v_proj", kv_in, D);
    const std::size_t Tq = query_in[0].size(), Tk = kv_in[0].size();
    Mat ctx(D, std::vector<double>(Tq, 0.0));
    for (int h = 0; h < H; ++h) {
      for (std::size_t a = 0; a < Tq; ++a) {
        std::vector<double> w(Tk);
        double mx = -1e300;
        for (std::size_t b = 0; b < Tk; ++b) {
          double s = 0.0;
          for (int r = h * hd; r < (h + 1) * hd; ++r) s += q[r][a] * k[r][b];
          w[b] = s / std::sqrt(static_cast<double>(hd));
          mx = std::max(mx, w[b]);
        }
        double z = 0.0;
        for (double& x : w) z += (x = std::exp(x - mx));
        for (int r = h * hd; r < (h + 1) * hd; ++r) {
          double acc = 0.0;
          for (std::size_t b = 0; b < Tk; ++b) acc += v[r][b] * w[b] / z;
          ctx[r][a] = acc;
        }
      }
    }
    return Linear(p + ".out_proj", ctx, D);
  }

  Mat FeedForward(const Mat& x) const {
    Mat h = Linear("decoder.ff1", x, c_.ff_dim);
    for (auto& row : h) {
      for (double& v : row) v = std::max(v, 0.0);
    }
    return Linear("decoder.ff2", h, c_.dim);
  }

  Mat Norm(const std::string& p, const Mat& x) const {
    const std::size_t D = x.size(), frames = x[0].size();
    const auto& gain = T(p + ".gain");
    const auto& bias = T(p + ".bias");
    Mat y = x;
    for (std::size_t t = 0; t < frames; ++t) {
      double mean = 0.0, var = 0.0;
      for (std::size_t r = 0; r < D; ++r) mean += x[r][t];
      mean /= D;
      for (std::size_t r = 0; r < D; ++r) var += (x[r][t] - mean) * (x[r][t] - mean);
      var /= D;
      for (std::size_t r = 0; r < D; ++r) {
        y[r][t] = (x[r][t] - mean) / std::sqrt(var + 1e-5) * gain[r] + bias[r];
      }
    }
    return y;
  }

  const net::WeightBundle& bundle_;
  net::ModelConfig c_;
};

// ---------------------------------------------------------------------------
// On-disk scene fixtures: synthetic impulse responses, sources and a
// background, plus the JSON manifests the synthesis module reads.

struct SceneAssets {
  fs::path root;
  fs::path ir_manifest;
  fs::path catalog;
  std::vector<double> azimuths;
  std::map<std::string, fs::path> sources;  // label -> file
  fs::path background;
};

/// Stereo response with an interaural delay/gain pattern and a short decaying
/// tail. Positive azimuth delays the left ear.
inline BinauralSignal SyntheticIr(double azimuth_deg, int rate, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(rate / 100);  // 10 ms
  std::vector<float> l(n, 0.0f), r(n, 0.0f);
  const double s = std::sin(azimuth_deg * std::numbers::pi / 180.0);
  const auto itd = static_cast<std::size_t>(std::lround(std::abs(s) * 0.0006 * rate));
  const double near = 1.0, far = std::pow(10.0, -6.0 * std::abs(s) / 20.0);
  const std::size_t base = 4;
  (s >= 0 ? r : l)[base] = static_cast<float>(near);
  (s >= 0 ? l : r)[base + itd] = static_cast<float>(far);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = base + 8; i < n; ++i) {
    const double decay = 0.05 * std::exp(-static_cast<double>(i) / (0.002 * rate));
    l[i] += static_cast<float>(decay * g(rng));
    r[i] += static_cast<float>(decay * g(rng));
  }
  return BinauralSignal(std::move(l), std::move(r), rate);
}

inline std::vector<float> ToneBurst(std::size_t n, double f0, int rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double env = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * 3.0 * i / rate);
    v[i] = static_cast<float>(0.3 * env *
                                  (std::sin(2.0 * std::numbers::pi * f0 * i / rate) +
                                   0.5 * std::sin(4.0 * std::numbers::pi * f0 * i / rate)) +
                              g(rng));
  }
  return v;
}

/// Writes a small but complete asset set. Sources use mixed sample rates and
/// one stereo file so that resampling and downmixing are exercised.
inline SceneAssets WriteSceneAssets(const fs::path& root,
                                    std::vector<double> azimuths = {-60, -30, 0, 30, 60}) {
  SceneAssets a;
  a.root = root;
  a.azimuths = azimuths;
  fs::create_directories(root / "ir");
  fs::create_directories(root / "src");
  nlohmann::json irs = nlohmann::json::array();
  std::uint64_t seed = 11;
  for (const char* room : {"r1", "r2"}) {
    for (double az : azimuths) {
      const int rate = (std::string(room) == "r2") ? 48000 : kCanonicalRateHz;
      const std::string file =
          std::string("ir/") + room + "_" + std::to_string(static_cast<int>(az)) + ".wav";
      io::WriteWav(SyntheticIr(az, rate, seed++), root / file);
      irs.push_back({{"subject", "s1"}, {"room", room}, {"azimuth_deg", az}, {"file", file}});
    }
  }
  a.ir_manifest = root / "irs.json";
  std::ofstream(a.ir_manifest) << irs.dump(2);

  struct Src {
    const char* label;
    double f0;
    int rate;
    bool stereo;
    synth::EventRole role;
  };
  const Src srcs[] = {{"dog", 310.0, 44100, false, synth::EventRole::kTarget},
                      {"siren", 880.0, 22050, false, synth::EventRole::kTarget},
                      {"cat", 520.0, 48000, true, synth::EventRole::kTarget},
                      {"door_knock", 150.0, 44100, false, synth::EventRole::kOther},
                      {"engine", 95.0, 16000, false, synth::EventRole::kOther}};
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : srcs) {
    const std::string file = std::string("src/") + s.label + ".wav";
    auto v = ToneBurst(static_cast<std::size_t>(5.2 * s.rate), s.f0, s.rate, seed++);
    if (s.stereo) {
      io::WriteWav(BinauralSignal(v, ToneBurst(v.size(), s.f0 * 1.01, s.rate, seed++), s.rate),
                   root / file);
    } else {
      io::WriteWav(MonoSignal(std::move(v), s.rate), root / file);
    }
    a.sources[s.label] = root / file;
    sources.push_back({{"label", s.label}, {"file", file}, {"role", s.role}});
  }
  a.background = root / "src/background.wav";
  io::WriteWav(RandomBinaural(static_cast<std::size_t>(2.5 * kCanonicalRateHz), 99,
                              kCanonicalRateHz, 0.2f),
               a.background);
  a.catalog = root / "catalog.json";
  std::ofstream(a.catalog) << nlohmann::json{{"sources", sources},
                                             {"backgrounds", {"src/background.wav"}}}
                                  .dump(2);
  return a;
}

/// Fixed two-target, one-other scene over the fixture assets.
inline synth::SceneSpec FixtureSceneSpec(const SceneAssets& a) {
  synth::SceneSpec spec;
  spec.seed = 5;
  spec.background = {a.background.string(), -50.0};
  auto ev = [&](const char* label, double onset, double dur, double snr, double az,
                synth::EventRole role) {
    synth::EventSpec e;
    e.label = label;
    e.source = a.sources.at(label).string();
    e.onset_s = onset;
    e.duration_s = dur;
    e.snr_db = snr;
    e.subject = "s1";
    e.room = "r1";
    e.azimuth_deg = az;
    e.role = role;
    return e;
  };
  spec.events = {ev("dog", 0.5, 4.0, 10.0, 30, synth::EventRole::kTarget),
                 ev("siren", 1.2, 3.5, 6.0, -60, synth::EventRole::kTarget),
                 ev("door_knock", 2.0, 3.0, 2.0, 0, synth::EventRole::kOther)};
  return spec;
}

}  // namespace btse::testing

#endif  // BTSE_TESTS_TEST_SUPPORT_HPP_
