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

// Named float32 tensors for the mask-estimation network and the on-disk
// bundle format:
//
//   "BTSE" | u32 version | u32 manifest_len | manifest (UTF-8 JSON) | data
//
// The manifest holds the model config, the class registry and one
// {name, shape, byte_offset} record per tensor; offsets are relative to the
// start of the data section, which stores row-major little-endian float32.

#ifndef BTSE_NET_WEIGHTS_HPP_
#define BTSE_NET_WEIGHTS_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"
#include "btse/net/config.hpp"
#include "btse/ontology.hpp"

namespace btse::net {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  static std::int64_t Numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  std::int64_t numel() const { return Numel(shape); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct TensorSpec {
  std::string name;
  std::vector<std::int64_t> shape;
  std::int64_t fan_in;
};

/// Every tensor the config implies, in canonical (serialization) order.
inline std::vector<TensorSpec> TensorLayout(const ModelConfig& c) {
  const std::int64_t D = c.dim;
  const std::int64_t L = c.stride;
  const std::int64_t F = c.ff_dim;
  std::vector<TensorSpec> specs;
  specs.push_back({"in_proj.weight", {D, 2, 2 * L}, 4 * L});
  specs.push_back({"in_proj.bias", {D}, 4 * L});
  for (int j = 0; j < c.enc_layers; ++j) {
    const std::string prefix = "encoder." + std::to_string(j);
    specs.push_back({prefix + ".weight", {D, D, c.enc_kernel}, D * c.enc_kernel});
    specs.push_back({prefix + ".bias", {D}, D * c.enc_kernel});
  }
  specs.push_back({"query_embed.weight", {D, c.num_classes}, c.num_classes});
  for (const char* block : {"self_attn", "cross_attn"}) {
    for (const char* proj : {"q", "k", "v", "out"}) {
      const std::string prefix =
          std::string("decoder.") + block + "." + proj + "_proj";
      specs.push_back({prefix + ".weight", {D, D}, D});
      specs.push_back({prefix + ".bias", {D}, D});
    }
  }
  specs.push_back({"decoder.ff1.weight", {F, D}, D});
  specs.push_back({"decoder.ff1.bias", {F}, D});
  specs.push_back({"decoder.ff2.weight", {D, F}, F});
  specs.push_back({"decoder.ff2.bias", {D}, F});
  for (int n = 1; n <= 3; ++n) {
    const std::string prefix = "decoder.norm" + std::to_string(n);
    specs.push_back({prefix + ".gain", {D}, D});
    specs.push_back({prefix + ".bias", {D}, D});
  }
  specs.push_back({"out_proj.weight", {2, D, L}, D});
  specs.push_back({"out_proj.bias", {2}, D});
  return specs;
}

/// Number of scalar parameters implied by the config.
inline std::int64_t ParamCount(const ModelConfig& config) {
  std::int64_t total = 0;
  for (const auto& spec : TensorLayout(config)) total += Tensor::Numel(spec.shape);
  return total;
}

/// Immutable after construction; share one bundle across any number of
/// streams.
class WeightBundle {
 public:
  WeightBundle() = default;

  WeightBundle(ModelConfig config, ontology::ClassRegistry registry,
               std::map<std::string, Tensor> tensors)
      : config_(config), registry_(std::move(registry)),
        tensors_(std::move(tensors)) {
    config_.Validate();
    if (registry_.size() != static_cast<std::size_t>(config_.num_classes)) {
      throw ShapeError("registry has " + std::to_string(registry_.size()) +
                       " labels but config N_c = " +
                       std::to_string(config_.num_classes));
    }
    const auto layout = TensorLayout(config_);
    if (tensors_.size() != layout.size()) {
      throw ShapeError("bundle has " + std::to_string(tensors_.size()) +
                       " tensors, expected " + std::to_string(layout.size()));
    }
    for (const auto& spec : layout) {
      auto it = tensors_.find(spec.name);
      if (it == tensors_.end()) throw LookupError("missing tensor " + spec.name);
      const Tensor& t = it->second;
      if (t.shape != spec.shape ||
          static_cast<std::int64_t>(t.data.size()) != t.numel()) {
        throw ShapeError("tensor " + spec.name + " has the wrong shape");
      }
      for (float v : t.data) {
        if (!std::isfinite(v)) {
          throw ArgumentError("tensor " + spec.name + " has non-finite values");
        }
      }
    }
  }

  const ModelConfig& config() const { return config_; }
  const ontology::ClassRegistry& registry() const { return registry_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  const Tensor& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw LookupError("no tensor named " + name);
    return it->second;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : tensors_) n += t.numel();
    return n;
  }

  friend bool operator==(const WeightBundle&, const WeightBundle&) = default;

 private:
  ModelConfig config_;
  ontology::ClassRegistry registry_;
  std::map<std::string, Tensor> tensors_;
};

/// Deterministic uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor,
/// drawn from one mt19937_64 stream in canonical tensor order.
inline WeightBundle InitRandom(const ModelConfig& config, std::uint64_t seed,
                               const ontology::ClassRegistry& registry =
                                   ontology::ClassRegistry::Default()) {
  config.Validate();
  std::mt19937_64 rng(seed);
  std::map<std::string, Tensor> tensors;
  for (const auto& spec : TensorLayout(config)) {
    Tensor t{spec.shape, std::vector<float>(Tensor::Numel(spec.shape))};
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
    for (float& v : t.data) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = static_cast<float>((2.0 * u - 1.0) * bound);
    }
    tensors.emplace(spec.name, std::move(t));
  }
  return WeightBundle(config, registry, std::move(tensors));
}

/// All-zero bundle; its forward pass is identically zero.
inline WeightBundle ZeroWeights(const ModelConfig& config,
                                const ontology::ClassRegistry& registry =
                                    ontology::ClassRegistry::Default()) {
  config.Validate();
  std::map<std::string, Tensor> tensors;
  for (const auto& spec : TensorLayout(config)) {
    tensors.emplace(spec.name,
                    Tensor{spec.shape, std::vector<float>(Tensor::Numel(spec.shape))});
  }
  return WeightBundle(config, registry, std::move(tensors));
}

inline constexpr char kBundleMagic[4] = {'B', 'T', 'S', 'E'};
inline constexpr std::uint32_t kBundleVersion = 1;

inline std::vector<unsigned char> SerializeBundle(const WeightBundle& bundle) {
  nlohmann::json manifest;
  manifest["config"] = bundle.config();
  manifest["registry"] = bundle.registry().labels();
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  const auto layout = TensorLayout(bundle.config());
  for (const auto& spec : layout) {
    manifest["tensors"].push_back(
        {{"name", spec.name}, {"shape", spec.shape}, {"byte_offset", offset}});
    offset += static_cast<std::uint64_t>(Tensor::Numel(spec.shape)) * 4;
  }
  const std::string text = manifest.dump();

  std::vector<unsigned char> out;
  out.reserve(12 + text.size() + offset);
  out.insert(out.end(), kBundleMagic, kBundleMagic + 4);
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  put_u32(kBundleVersion);
  put_u32(static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& spec : layout) {
    const auto& data = bundle.at(spec.name).data;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    out.insert(out.end(), bytes, bytes + data.size() * sizeof(float));
  }
  return out;
}

inline WeightBundle ParseBundle(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12) throw FormatError("weight bundle: truncated header");
  if (std::memcmp(bytes.data(), kBundleMagic, 4) != 0) {
    throw FormatError("weight bundle: bad magic");
  }
  auto u32 = [&bytes](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  const std::uint32_t version = u32(4);
  if (version != kBundleVersion) {
    throw FormatError("weight bundle: unsupported version " +
                      std::to_string(version));
  }
  const std::uint64_t manifest_len = u32(8);
  if (12 + manifest_len > bytes.size()) {
    throw FormatError("weight bundle: truncated manifest");
  }
  const std::size_t data_start = 12 + manifest_len;
  const std::uint64_t data_size = bytes.size() - data_start;

  try {
    const auto manifest = nlohmann::json::parse(
        bytes.begin() + 12, bytes.begin() + static_cast<std::ptrdiff_t>(data_start));
    const auto config = manifest.at("config").get<ModelConfig>();
    config.Validate();
    ontology::ClassRegistry registry(
        manifest.at("registry").get<std::vector<std::string>>());
    std::map<std::string, Tensor> tensors;
    for (const auto& record : manifest.at("tensors")) {
      Tensor t;
      const auto name = record.at("name").get<std::string>();
      t.shape = record.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = record.at("byte_offset").get<std::uint64_t>();
      const std::uint64_t capacity = data_size / 4;
      std::uint64_t n = 1;
      for (auto d : t.shape) {
        if (d < 0) throw FormatError("weight bundle: bad shape for " + name);
        const auto ud = static_cast<std::uint64_t>(d);
        if (ud != 0 && n > capacity / ud) {
          throw FormatError("weight bundle: tensor " + name +
                            " is larger than the data section (truncated file)");
        }
        n *= ud;
      }
      if (offset % 4 != 0 || offset > data_size || n * 4 > data_size - offset) {
        throw FormatError("weight bundle: tensor " + name +
                          " extends past the end of the data (truncated file)");
      }
      t.data.resize(n);
      std::memcpy(t.data.data(), bytes.data() + data_start + offset, n * 4);
      if (!tensors.emplace(name, std::move(t)).second) {
        throw FormatError("weight bundle: duplicate tensor " + name);
      }
    }
    return WeightBundle(config, std::move(registry), std::move(tensors));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight bundle: bad manifest: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("weight bundle: ") + e.what());
  }
}

inline void SaveBundle(const WeightBundle& bundle,
                       const std::filesystem::path& path) {
  const auto bytes = SerializeBundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline WeightBundle LoadBundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return ParseBundle(bytes);
}

}  // namespace btse::net

#endif  // BTSE_NET_WEIGHTS_HPP_
