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

#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "btse/metrics.hpp"
#include "btse/synth/convolution.hpp"
#include "btse/synth/scene.hpp"
#include "test_support.hpp"

namespace btse::synth {
namespace {

using testing::DirectConvolve;
using testing::RandomVector;
using testing::TempDir;

TEST(ConvolutionTest, MatchesDirectConvolution) {
  const auto x = RandomVector(44100, 1);
  const auto h = RandomVector(22050, 2, 0.01f);
  const auto fast = FftConvolve(x, h);
  const auto slow = DirectConvolve(x, h);
  ASSERT_EQ(fast.size(), slow.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < fast.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
  EXPECT_LE(worst, 1e-6);
}

TEST(ConvolutionTest, ShortAndOddSizes) {
  for (auto [n, m] : {std::pair{1, 1}, {5, 300}, {300, 5}, {1000, 257}}) {
    const auto x = RandomVector(n, n), h = RandomVector(m, m + 1);
    const auto fast = FftConvolve(x, h);
    const auto slow = DirectConvolve(x, h);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-6);
  }
  EXPECT_THROW(FftConvolve(RandomVector(4, 1), {}), ArgumentError);
}

TEST(SpatializeTest, IdentityAndDelayedImpulse) {
  const MonoSignal x(RandomVector(4410, 3), 44100);
  const BinauralSignal unit(std::vector<float>{1.0f}, std::vector<float>{1.0f}, 44100);
  const auto same = Spatialize(x, unit);
  EXPECT_LE(testing::MaxAbsDiff(same.left().view(), x.view()), 1e-6);
  EXPECT_LE(testing::MaxAbsDiff(same.right().view(), x.view()), 1e-6);

  std::vector<float> hl(11, 0.0f), hr(11, 0.0f);
  hl[0] = 1.0f;
  hr[10] = 1.0f;
  const auto wet = Spatialize(x, BinauralSignal(hl, hr, 44100));
  EXPECT_NEAR(metrics::ItdUs(wet), 10.0 / 44100.0 * 1e6, 0.5e6 / 44100.0);
  EXPECT_EQ(Spatialize(x, BinauralSignal(hl, hr, 44100), true).size(), x.size() + 10);

  EXPECT_THROW(Spatialize(x, BinauralSignal()), ArgumentError);
  EXPECT_THROW(Spatialize(x, BinauralSignal(hl, hr, 48000)), ArgumentError);
}

TEST(LoopTest, TilesWithCrossfade) {
  const std::vector<float> x(100, 1.0f);
  const auto y = LoopToLength(x, 350, 10);
  ASSERT_EQ(y.size(), 350u);
  // Linear crossfade of a constant stays constant.
  for (std::size_t i = 0; i < 340; ++i) EXPECT_NEAR(y[i], 1.0f, 1e-6) << i;
  EXPECT_EQ(LoopToLength(x, 50, 10), std::vector<float>(50, 1.0f));
}

class SceneTest : public ::testing::Test {
 protected:
  void SetUp() override { assets_ = testing::WriteSceneAssets(dir_.path()); }
  TempDir dir_;
  testing::SceneAssets assets_;
};

TEST_F(SceneTest, MixtureIsExactSumOfParts) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  const auto scene = BuildScene(testing::FixtureSceneSpec(assets_), store);
  const std::size_t n = scene.mixture.size();
  EXPECT_EQ(n, 6u * 44100u);
  EXPECT_EQ(scene.mixture.sample_rate_hz(), 44100);
  for (int ch = 0; ch < 2; ++ch) {
    for (std::size_t i = 0; i < n; ++i) {
      float acc = scene.background.channel(ch)[i];
      for (const auto& ev : scene.events) acc += ev.stem.channel(ch)[i];
      ASSERT_EQ(scene.mixture.channel(ch)[i] - acc, 0.0f);
    }
  }
  ASSERT_EQ(scene.ground_truths.size(), 2u);
  EXPECT_TRUE(scene.ground_truths.contains("dog"));
  EXPECT_TRUE(scene.ground_truths.contains("siren"));
  EXPECT_FALSE(scene.ground_truths.contains("door_knock"));
}

TEST_F(SceneTest, EventLoudnessRealizesSnr) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  auto spec = testing::FixtureSceneSpec(assets_);
  spec.events[0].snr_db = 0.0;
  const auto scene = BuildScene(spec, store);
  EXPECT_NEAR(io::LoudnessLufs(scene.background).lufs, -50.0, 0.1);
  for (const auto& ev : scene.events) {
    const auto seg = BinauralSignal(
        std::vector<float>(ev.stem.left().samples().begin() + ev.onset_sample,
                           ev.stem.left().samples().begin() + ev.onset_sample + ev.length),
        std::vector<float>(ev.stem.right().samples().begin() + ev.onset_sample,
                           ev.stem.right().samples().begin() + ev.onset_sample + ev.length),
        44100);
    EXPECT_NEAR(io::LoudnessLufs(seg).lufs, -50.0 + ev.spec.snr_db, 0.25) << ev.spec.label;
  }
}

TEST_F(SceneTest, DeterministicAndGroundTruthConsistent) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  const auto spec = testing::FixtureSceneSpec(assets_);
  const auto a = BuildScene(spec, store);
  const auto b = BuildScene(spec, store);
  EXPECT_EQ(a.mixture.left().samples(), b.mixture.left().samples());
  EXPECT_EQ(a.mixture.right().samples(), b.mixture.right().samples());

  // Removing a target's ground truth leaves a scene equal to re-rendering
  // without that event.
  auto reduced = spec;
  reduced.events.erase(reduced.events.begin());
  const auto rest = BuildScene(reduced, store);
  const auto diff = Subtract(a.mixture, a.ground_truths.at("dog"));
  EXPECT_LE(testing::MaxAbsDiff(diff, rest.mixture), 1e-6);
}

TEST_F(SceneTest, ErrorsAreReported) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  auto spec = testing::FixtureSceneSpec(assets_);
  spec.events[0].azimuth_deg = 45.0;
  EXPECT_THROW(BuildScene(spec, store), LookupError);

  spec = testing::FixtureSceneSpec(assets_);
  io::WriteWav(MonoSignal::Zeros(3 * 44100, 44100), dir_ / "silent.wav");
  spec.events[0].source = (dir_ / "silent.wav").string();
  EXPECT_THROW(BuildScene(spec, store), ArgumentError);

  spec = testing::FixtureSceneSpec(assets_);
  spec.events[0].onset_s = 4.0;
  EXPECT_THROW(BuildScene(spec, store), ArgumentError);

  spec = testing::FixtureSceneSpec(assets_);
  for (auto& e : spec.events) e.role = EventRole::kOther;
  EXPECT_THROW(BuildScene(spec, store), ArgumentError);
}

TEST_F(SceneTest, SpecJsonRoundTrip) {
  const auto spec = testing::FixtureSceneSpec(assets_);
  const nlohmann::json j = spec;
  EXPECT_EQ(j["events"][0]["role"], "target");
  EXPECT_EQ(j["events"][2]["role"], "other");
  const auto back = j.get<SceneSpec>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST_F(SceneTest, RandomSpecsFollowPolicy) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  const auto catalog = Catalog::Load(assets_.catalog, store);
  const MixPolicy policy;
  int collisions = 0, pairs = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto spec = MakeRandomSceneSpec(seed, policy, catalog);
    int targets = 0, others = 0;
    std::set<std::string> target_labels;
    for (const auto& e : spec.events) {
      EXPECT_GE(e.duration_s, 3.0);
      EXPECT_LE(e.duration_s, 5.0);
      EXPECT_LE(e.onset_s + e.duration_s, 6.0 + 1e-9);
      if (e.role == EventRole::kTarget) {
        ++targets;
        target_labels.insert(e.label);
        EXPECT_GE(e.snr_db, 5.0);
        EXPECT_LE(e.snr_db, 15.0);
      } else {
        ++others;
        EXPECT_GE(e.snr_db, 0.0);
        EXPECT_LE(e.snr_db, 5.0);
      }
      EXPECT_EQ(e.room, spec.events[0].room);
    }
    EXPECT_EQ(targets, 2);
    EXPECT_EQ(target_labels.size(), 2u);
    EXPECT_TRUE(others == 1 || others == 2);
    ++pairs;
    collisions += spec.events[0].azimuth_deg == spec.events[1].azimuth_deg;
  }
  // Independent draws over 5 directions: collision rate ~ 1/5.
  const double rate = static_cast<double>(collisions) / pairs;
  EXPECT_NEAR(rate, 0.2, 0.05);

  const auto a = MakeRandomSceneSpec(42, policy, catalog);
  const auto b = MakeRandomSceneSpec(42, policy, catalog);
  EXPECT_EQ(nlohmann::json(a), nlohmann::json(b));

  Catalog thin = catalog;
  thin.sources.resize(1);
  EXPECT_THROW(MakeRandomSceneSpec(1, policy, thin), ArgumentError);
}

TEST_F(SceneTest, RandomScenesRender) {
  const auto store = IrStore::Load(assets_.ir_manifest);
  const auto catalog = Catalog::Load(assets_.catalog, store);
  const auto scene = BuildScene(MakeRandomSceneSpec(3, MixPolicy(), catalog), store);
  EXPECT_EQ(scene.mixture.size(), 6u * 44100u);
  EXPECT_EQ(scene.ground_truths.size(), 2u);
}

}  // namespace
}  // namespace btse::synth
