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

#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "btse/ontology.hpp"
#include "test_support.hpp"

namespace btse::ontology {
namespace {

TEST(RegistryTest, DefaultHasTwentyClassesInOrder) {
  const auto& r = ClassRegistry::Default();
  ASSERT_EQ(r.size(), 20u);
  EXPECT_EQ(r.labels().front(), "alarm_clock");
  EXPECT_EQ(r.labels()[5], "rooster_crow");
  EXPECT_EQ(r.labels().back(), "toilet_flush");
  EXPECT_EQ(r.IndexOf("siren"), 16u);
  EXPECT_THROW(ClassRegistry({"a", "a"}), ArgumentError);
}

TEST(QueryTest, OneHotMultiHotAndUnknown) {
  const auto& r = ClassRegistry::Default();
  const auto siren = QueryFromLabels({"siren"}, r);
  int set = 0;
  for (std::size_t i = 0; i < siren.size(); ++i) set += siren.bits[i];
  EXPECT_EQ(set, 1);
  EXPECT_EQ(siren.bits[r.IndexOf("siren")], 1);

  const auto pair = QueryFromLabels({"cat", "dog", "cat"}, r);
  set = 0;
  for (auto b : pair.bits) set += b;
  EXPECT_EQ(set, 2);

  try {
    QueryFromLabels({"cow"}, r);
    FAIL() << "expected LookupError";
  } catch (const LookupError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("cow"), std::string::npos);
    for (const auto& label : r.labels()) EXPECT_NE(msg.find(label), std::string::npos);
  }
  EXPECT_THROW(QueryFromLabels({}, r), ArgumentError);
}

TEST(GraphTest, HandsExample) {
  const OntologyGraph g({"Hands", "FingerSnapping", "Clapping"},
                        {{"Hands", "FingerSnapping"}, {"Hands", "Clapping"}});
  EXPECT_EQ(OtherClasses(g, {"Clapping"}), (std::set<std::string>{"FingerSnapping"}));
  EXPECT_TRUE(OtherClasses(g, {"Hands", "FingerSnapping", "Clapping"}).empty());
  EXPECT_TRUE(OtherClasses(g, {"Hands"}).empty());
}

TEST(GraphTest, NoEdges) {
  const OntologyGraph g({"a", "b", "c"}, {});
  EXPECT_EQ(OtherClasses(g, {"a"}), (std::set<std::string>{"b", "c"}));
}

TEST(GraphTest, Errors) {
  EXPECT_THROW(OntologyGraph({"a", "b"}, {{"a", "b"}, {"b", "a"}}), ArgumentError);
  EXPECT_THROW(OntologyGraph({"a"}, {{"a", "zz"}}), ArgumentError);
  const OntologyGraph g({"a"}, {});
  EXPECT_THROW(OtherClasses(g, {"missing"}), ArgumentError);
  EXPECT_THROW(OntologyGraph::FromJson(nlohmann::json::parse(R"({"nodes": 3})")),
               FormatError);
}

TEST(GraphTest, JsonFile) {
  testing::TempDir dir;
  std::ofstream(dir / "g.json")
      << R"({"nodes":["Hands","FingerSnapping","Clapping"],)"
         R"("edges":[["Hands","FingerSnapping"],["Hands","Clapping"]]})";
  const auto g = OntologyGraph::Load(dir / "g.json");
  EXPECT_EQ(OtherClasses(g, {"Clapping"}), (std::set<std::string>{"FingerSnapping"}));
}

TEST(GraphTest, MatchesBruteForceOnRandomDags) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    auto [nodes, edges] = testing::RandomDag(rng, n, 0.3 + (rng() % 20) / 10.0);
    const OntologyGraph g(nodes, edges);
    std::set<std::string> targets;
    const std::size_t nt = 1 + rng() % 3;
    for (std::size_t i = 0; i < nt; ++i) targets.insert(nodes[rng() % n]);
    const auto others = OtherClasses(g, targets);
    EXPECT_EQ(others, testing::BruteForceOthers(nodes, edges, targets)) << "trial " << trial;
    for (const auto& t : targets) EXPECT_FALSE(others.contains(t));
  }
}

}  // namespace
}  // namespace btse::ontology
