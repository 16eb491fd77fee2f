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

#ifndef BTSE_ONTOLOGY_HPP_
#define BTSE_ONTOLOGY_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"

namespace btse::ontology {

/// Ordered set of target class labels. Position i is row/column i of the
/// query embedding, so the order is part of a trained model's identity.
class ClassRegistry {
 public:
  ClassRegistry() = default;

  explicit ClassRegistry(std::vector<std::string> labels)
      : labels_(std::move(labels)) {
    if (labels_.empty()) throw ArgumentError("class registry is empty");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], i).second) {
        throw ArgumentError("duplicate class label '" + labels_[i] + "'");
      }
    }
  }

  /// The 20 target classes in canonical order.
  static const ClassRegistry& Default() {
    static const ClassRegistry registry({
        "alarm_clock", "baby_cry", "birds_chirping", "car_horn", "cat",
        "rooster_crow", "computer_typing", "cricket", "dog", "door_knock",
        "glass_breaking", "gunshot", "hammer", "music", "ocean", "singing",
        "siren", "speech", "thunderstorm", "toilet_flush"});
    return registry;
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(const std::string& label) const {
    return index_.contains(label);
  }

  std::size_t IndexOf(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) {
      std::string known;
      for (const auto& l : labels_) known += (known.empty() ? "" : ", ") + l;
      throw LookupError("unknown class label '" + label +
                        "'; valid classes: " + known);
    }
    return it->second;
  }

  friend bool operator==(const ClassRegistry& a, const ClassRegistry& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Multi-hot class selector, one bit per registry position.
struct QueryVector {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  bool any() const {
    for (auto b : bits) {
      if (b) return true;
    }
    return false;
  }
};

inline QueryVector QueryFromLabels(const std::vector<std::string>& labels,
                                   const ClassRegistry& registry) {
  if (labels.empty()) throw ArgumentError("query needs at least one label");
  QueryVector q{std::vector<std::uint8_t>(registry.size(), 0)};
  for (const auto& label : labels) q.bits[registry.IndexOf(label)] = 1;
  return q;
}

/// Class hierarchy as a DAG with parent -> child edges.
class OntologyGraph {
 public:
  OntologyGraph() = default;

  OntologyGraph(std::vector<std::string> nodes,
                const std::vector<std::pair<std::string, std::string>>& edges)
      : nodes_(std::move(nodes)), children_(nodes_.size()),
        parents_(nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!index_.emplace(nodes_[i], i).second) {
        throw ArgumentError("duplicate graph node '" + nodes_[i] + "'");
      }
    }
    for (const auto& [parent, child] : edges) {
      const std::size_t p = NodeIndex(parent);
      const std::size_t c = NodeIndex(child);
      children_[p].push_back(c);
      parents_[c].push_back(p);
    }
    CheckAcyclic();
  }

  static OntologyGraph FromJson(const nlohmann::json& j) {
    try {
      std::vector<std::pair<std::string, std::string>> edges;
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
          throw FormatError("graph edge must be a [parent, child] pair");
        }
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
      return OntologyGraph(j.at("nodes").get<std::vector<std::string>>(),
                           edges);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed ontology graph: ") + e.what());
    }
  }

  static OntologyGraph Load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
      return FromJson(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& children(std::size_t i) const {
    return children_[i];
  }
  const std::vector<std::size_t>& parents(std::size_t i) const {
    return parents_[i];
  }

  std::size_t NodeIndex(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ArgumentError("'" + name + "' is not a node of the graph");
    }
    return it->second;
  }

 private:
  void CheckAcyclic() const {
    std::vector<std::size_t> indegree(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      indegree[i] = parents_[i].size();
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (indegree[i] == 0) ready.push_back(i);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
      const std::size_t n = ready.back();
      ready.pop_back();
      ++visited;
      for (std::size_t c : children_[n]) {
        if (--indegree[c] == 0) ready.push_back(c);
      }
    }
    if (visited != nodes_.size()) {
      throw ArgumentError("ontology graph contains a cycle");
    }
  }

  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> parents_;
};

/// Nodes with no directed path to or from any target: neither a more general
/// nor a more specific instance of a known class. Targets are excluded.
inline std::set<std::string> OtherClasses(const OntologyGraph& graph,
                                          const std::set<std::string>& targets) {
  const std::size_t n = graph.nodes().size();
  std::vector<bool> related(n, false);
  std::vector<std::size_t> frontier;
  for (const auto& t : targets) {
    const std::size_t i = graph.NodeIndex(t);
    if (!related[i]) {
      related[i] = true;
      frontier.push_back(i);
    }
  }
  const std::vector<std::size_t> seeds = frontier;

  // Descendants.
  std::vector<bool> seen = related;
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t c : graph.children(v)) {
      if (!seen[c]) {
        seen[c] = related[c] = true;
        frontier.push_back(c);
      }
    }
  }
  // Ancestors.
  seen.assign(n, false);
  for (std::size_t s : seeds) seen[s] = true;
  frontier = seeds;
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t p : graph.parents(v)) {
      if (!seen[p]) {
        seen[p] = related[p] = true;
        frontier.push_back(p);
      }
    }
  }

  std::set<std::string> others;
  for (std::size_t i = 0; i < n; ++i) {
    if (!related[i]) others.insert(graph.nodes()[i]);
  }
  return others;
}

inline ClassRegistry LoadRegistry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ClassRegistry(
        nlohmann::json::parse(in).get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace btse::ontology

#endif  // BTSE_ONTOLOGY_HPP_
