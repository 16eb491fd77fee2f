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

// Binaural scene rendering. A scene is a loudness-referenced background plus
// spatialized events whose level is set relative to it:
//
//   loudness(event) = loudness(background) + snr_db
//
// The mixture is the plain sum of background and event stems (no limiter, no
// normalization), so every stem can be recovered from it.

#ifndef BTSE_SYNTH_SCENE_HPP_
#define BTSE_SYNTH_SCENE_HPP_

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "btse/errors.hpp"
#include "btse/io/loudness.hpp"
#include "btse/io/resample.hpp"
#include "btse/io/wav.hpp"
#include "btse/signal.hpp"
#include "btse/synth/convolution.hpp"

namespace btse::synth {

namespace fs = std::filesystem;

struct IrKey {
  std::string subject;
  std::string room;
  double azimuth_deg = 0.0;

  friend auto operator<=>(const IrKey&, const IrKey&) = default;
};

/// Stereo impulse responses indexed by (subject, room, azimuth). Manifest is a
/// JSON array of {subject, room, azimuth_deg, file}; relative file paths are
/// resolved against the manifest's directory.
class IrStore {
 public:
  IrStore() = default;

  IrStore(std::map<IrKey, fs::path> entries) : entries_(std::move(entries)) {
    for (const auto& [key, path] : entries_) {
      if (!fs::exists(path)) {
        throw IoError("impulse response file missing: " + path.string());
      }
    }
  }

  static IrStore Load(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    const fs::path base = manifest_path.parent_path();
    std::map<IrKey, fs::path> entries;
    try {
      auto j = nlohmann::json::parse(in);
      const auto& records = j.is_object() ? j.at("irs") : j;
      for (const auto& r : records) {
        IrKey key{r.at("subject").get<std::string>(), r.at("room").get<std::string>(),
                  r.at("azimuth_deg").get<double>()};
        fs::path file = r.at("file").get<std::string>();
        if (file.is_relative()) file = base / file;
        if (!entries.emplace(key, file).second) {
          throw FormatError(manifest_path.string() + ": duplicate IR entry");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(manifest_path.string() + ": " + e.what());
    }
    return IrStore(std::move(entries));
  }

  /// Loads the response for `key`, resampled to `sample_rate_hz`.
  BinauralSignal Get(const IrKey& key, int sample_rate_hz) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw LookupError("no impulse response for subject '" + key.subject +
                        "', room '" + key.room + "', azimuth " +
                        std::to_string(key.azimuth_deg));
    }
    return io::Resample(io::ReadWavBinaural(it->second), sample_rate_hz);
  }

  std::vector<IrKey> keys() const {
    std::vector<IrKey> out;
    for (const auto& [key, path] : entries_) out.push_back(key);
    return out;
  }

  const std::map<IrKey, fs::path>& entries() const { return entries_; }

 private:
  std::map<IrKey, fs::path> entries_;
};

enum class EventRole { kTarget, kOther };

NLOHMANN_JSON_SERIALIZE_ENUM(EventRole, {{EventRole::kTarget, "target"},
                                         {EventRole::kOther, "other"}})

struct BackgroundSpec {
  std::string source;
  double lufs = -50.0;
};

struct EventSpec {
  std::string label;
  std::string source;
  double onset_s = 0.0;
  double duration_s = 3.0;
  double snr_db = 0.0;
  std::string subject;
  std::string room;
  double azimuth_deg = 0.0;
  EventRole role = EventRole::kTarget;

  IrKey ir_key() const { return {subject, room, azimuth_deg}; }
};

struct SceneSpec {
  double duration_s = 6.0;
  int sample_rate = kCanonicalRateHz;
  std::uint64_t seed = 0;
  BackgroundSpec background;
  std::vector<EventSpec> events;

  void Validate() const {
    if (!(duration_s > 0.0)) throw ArgumentError("scene duration must be positive");
    if (sample_rate <= 0) throw ArgumentError("scene sample rate must be positive");
    bool has_target = false;
    for (const auto& e : events) {
      if (e.onset_s < 0.0 || !(e.duration_s > 0.0) ||
          e.onset_s + e.duration_s > duration_s + 1e-9) {
        throw ArgumentError("event '" + e.label + "' does not fit in the scene");
      }
      has_target |= e.role == EventRole::kTarget;
    }
    if (!has_target) throw ArgumentError("scene has no target event");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BackgroundSpec, source, lufs)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EventSpec, label, source, onset_s, duration_s,
                                   snr_db, subject, room, azimuth_deg, role)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SceneSpec, duration_s, sample_rate, seed,
                                   background, events)

inline SceneSpec LoadSceneSpec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<SceneSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

struct RenderedEvent {
  EventSpec spec;
  BinauralSignal stem;  // full scene length, zero outside the event
  std::size_t onset_sample = 0;
  std::size_t length = 0;
};

struct RenderedScene {
  BinauralSignal mixture;
  BinauralSignal background;
  std::vector<RenderedEvent> events;
  std::map<std::string, BinauralSignal> ground_truths;
  SceneSpec spec;
};

/// Repeats `x` to `length` samples with a linear crossfade of `fade` samples
/// at each seam; truncates if `x` is already long enough.
inline std::vector<float> LoopToLength(const std::vector<float>& x,
                                       std::size_t length, std::size_t fade) {
  if (x.empty()) throw ArgumentError("cannot loop an empty signal");
  std::vector<float> out(length, 0.0f);
  if (x.size() >= length) {
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(length), out.begin());
    return out;
  }
  if (x.size() <= 2 * fade) fade = 0;
  const std::size_t hop = x.size() - fade;
  for (std::size_t start = 0; start < length; start += hop) {
    const bool has_next = start + hop < length;
    for (std::size_t i = 0; i < x.size() && start + i < length; ++i) {
      double w = 1.0;
      if (start > 0 && i < fade) w *= static_cast<double>(i) / fade;
      if (has_next && fade > 0 && i >= x.size() - fade) {
        w *= static_cast<double>(x.size() - i) / fade;
      }
      out[start + i] += static_cast<float>(w * x[i]);
    }
  }
  return out;
}

namespace detail {

inline fs::path Resolve(const std::string& file, const fs::path& root) {
  fs::path p = file;
  return (p.is_relative() && !root.empty()) ? root / p : p;
}

inline void AddInto(std::vector<float>& acc, const MonoSignal& x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace detail

/// Renders a scene. Relative source paths resolve against `source_root`.
inline RenderedScene BuildScene(const SceneSpec& spec, const IrStore& store,
                                const fs::path& source_root = {}) {
  spec.Validate();
  const int rate = spec.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(spec.duration_s * rate));
  const auto fade = static_cast<std::size_t>(std::llround(0.010 * rate));

  RenderedScene scene;
  scene.spec = spec;

  {
    const auto bg_path = detail::Resolve(spec.background.source, source_root);
    const BinauralSignal raw = io::Resample(io::ReadWavBinaural(bg_path, true), rate);
    BinauralSignal looped(LoopToLength(raw.left().samples(), total, fade),
                          LoopToLength(raw.right().samples(), total, fade), rate);
    const auto loudness = io::LoudnessLufs(looped);
    if (loudness.silent) {
      throw ArgumentError("background " + bg_path.string() + " is silent");
    }
    scene.background = Scale(looped, io::GainToLufs(loudness, spec.background.lufs));
  }

  std::vector<float> mix[2] = {scene.background.left().samples(),
                               scene.background.right().samples()};
  for (const EventSpec& ev : spec.events) {
    const auto path = detail::Resolve(ev.source, source_root);
    const MonoSignal source = io::Resample(io::ReadWavMono(path), rate);
    const auto onset = static_cast<std::size_t>(std::llround(ev.onset_s * rate));
    std::size_t length = static_cast<std::size_t>(std::llround(ev.duration_s * rate));
    length = std::min({length, source.size(), total - std::min(onset, total)});
    const MonoSignal clip = Truncate(source, length);

    const BinauralSignal wet = Spatialize(clip, store.Get(ev.ir_key(), rate));
    const auto loudness = io::LoudnessLufs(wet);
    if (loudness.silent) {
      throw ArgumentError("event source " + path.string() + " is silent");
    }
    const BinauralSignal scaled =
        Scale(wet, io::GainToLufs(loudness, spec.background.lufs + ev.snr_db));

    std::vector<float> stem[2] = {std::vector<float>(total, 0.0f),
                                  std::vector<float>(total, 0.0f)};
    for (int ch = 0; ch < 2; ++ch) {
      std::copy(scaled.channel(ch).samples().begin(), scaled.channel(ch).samples().end(),
                stem[ch].begin() + static_cast<std::ptrdiff_t>(onset));
    }
    RenderedEvent rendered{ev, BinauralSignal(std::move(stem[0]), std::move(stem[1]), rate),
                           onset, length};
    for (int ch = 0; ch < 2; ++ch) detail::AddInto(mix[ch], rendered.stem.channel(ch));

    if (ev.role == EventRole::kTarget) {
      auto it = scene.ground_truths.find(ev.label);
      if (it == scene.ground_truths.end()) {
        scene.ground_truths.emplace(ev.label, rendered.stem);
      } else {
        std::vector<float> l = it->second.left().samples();
        std::vector<float> r = it->second.right().samples();
        detail::AddInto(l, rendered.stem.left());
        detail::AddInto(r, rendered.stem.right());
        it->second = BinauralSignal(std::move(l), std::move(r), rate);
      }
    }
    scene.events.push_back(std::move(rendered));
  }
  scene.mixture = BinauralSignal(std::move(mix[0]), std::move(mix[1]), rate);
  return scene;
}

/// Random-mixture policy for training-style scenes.
struct MixPolicy {
  int n_targets = 2;
  double target_snr_min_db = 5.0;
  double target_snr_max_db = 15.0;
  int n_others_min = 1;
  int n_others_max = 2;
  double other_snr_min_db = 0.0;
  double other_snr_max_db = 5.0;
  double event_min_s = 3.0;
  double event_max_s = 5.0;
  double duration_s = 6.0;
  int sample_rate = kCanonicalRateHz;
  double background_lufs = -50.0;

  void Validate() const {
    if (n_targets < 1) throw ArgumentError("policy needs at least one target");
    if (n_others_min < 0 || n_others_min > n_others_max) {
      throw ArgumentError("bad other-event count range");
    }
    if (target_snr_min_db > target_snr_max_db || other_snr_min_db > other_snr_max_db) {
      throw ArgumentError("bad SNR range");
    }
    if (!(event_min_s > 0.0) || event_min_s > event_max_s || event_max_s > duration_s) {
      throw ArgumentError("bad event duration range");
    }
  }
};

struct SourceClip {
  std::string label;
  std::string file;
  EventRole role = EventRole::kTarget;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SourceClip, label, file, role)

/// Files and directions a random scene may draw from.
struct Catalog {
  std::vector<SourceClip> sources;
  std::vector<std::string> backgrounds;
  std::vector<IrKey> directions;

  /// Reads {"sources": [...], "backgrounds": [...]}; relative paths resolve
  /// against the catalog's directory. Directions come from `store`.
  static Catalog Load(const fs::path& path, const IrStore& store) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Catalog c;
    try {
      const auto j = nlohmann::json::parse(in);
      c.sources = j.at("sources").get<std::vector<SourceClip>>();
      c.backgrounds = j.at("backgrounds").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    for (auto& s : c.sources) s.file = detail::Resolve(s.file, base).string();
    for (auto& b : c.backgrounds) b = detail::Resolve(b, base).string();
    c.directions = store.keys();
    return c;
  }
};

namespace detail {

// Portable draws from mt19937_64 (the standard distributions are not
// bit-reproducible across library implementations).
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double Uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::size_t Index(std::size_t n) {
    const auto i = static_cast<std::size_t>(Uniform(0.0, static_cast<double>(n)));
    return std::min(i, n - 1);
  }
  int IntInclusive(int lo, int hi) {
    return lo + static_cast<int>(Index(static_cast<std::size_t>(hi - lo + 1)));
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Draws a scene: distinct target classes at target SNRs, 1-2 interfering
/// "other" events, one (subject, room) pair per scene and an independently
/// drawn direction per event (collisions allowed).
inline SceneSpec MakeRandomSceneSpec(std::uint64_t seed, const MixPolicy& policy,
                                     const Catalog& catalog) {
  policy.Validate();
  std::map<std::string, std::vector<const SourceClip*>> targets, others;
  for (const auto& s : catalog.sources) {
    (s.role == EventRole::kTarget ? targets : others)[s.label].push_back(&s);
  }
  if (targets.size() < static_cast<std::size_t>(policy.n_targets)) {
    throw ArgumentError("catalog has " + std::to_string(targets.size()) +
                        " target classes, policy needs " +
                        std::to_string(policy.n_targets));
  }
  if (others.empty() && policy.n_others_max > 0) {
    throw ArgumentError("catalog has no other-class sources");
  }
  if (catalog.backgrounds.empty()) throw ArgumentError("catalog has no backgrounds");
  if (catalog.directions.empty()) throw ArgumentError("catalog has no directions");

  detail::Draw draw(seed);
  SceneSpec spec;
  spec.duration_s = policy.duration_s;
  spec.sample_rate = policy.sample_rate;
  spec.seed = seed;
  spec.background = {catalog.backgrounds[draw.Index(catalog.backgrounds.size())],
                     policy.background_lufs};

  std::set<std::pair<std::string, std::string>> rooms;
  for (const auto& k : catalog.directions) rooms.emplace(k.subject, k.room);
  auto room_it = rooms.begin();
  std::advance(room_it, static_cast<std::ptrdiff_t>(draw.Index(rooms.size())));
  std::vector<IrKey> directions;
  for (const auto& k : catalog.directions) {
    if (k.subject == room_it->first && k.room == room_it->second) directions.push_back(k);
  }

  auto add_event = [&](const SourceClip& clip, EventRole role, double snr_lo,
                       double snr_hi) {
    EventSpec e;
    e.label = clip.label;
    e.source = clip.file;
    e.role = role;
    e.duration_s = draw.Uniform(policy.event_min_s, policy.event_max_s);
    e.onset_s = draw.Uniform(0.0, policy.duration_s - e.duration_s);
    e.snr_db = draw.Uniform(snr_lo, snr_hi);
    const IrKey& dir = directions[draw.Index(directions.size())];
    e.subject = dir.subject;
    e.room = dir.room;
    e.azimuth_deg = dir.azimuth_deg;
    spec.events.push_back(e);
  };

  auto pick_labels = [&](const auto& pool, int count, bool distinct) {
    std::vector<std::string> labels;
    for (const auto& [label, clips] : pool) labels.push_back(label);
    std::vector<std::string> chosen;
    for (int i = 0; i < count; ++i) {
      const std::size_t at = draw.Index(labels.size());
      chosen.push_back(labels[at]);
      if (distinct && labels.size() > 1) labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return chosen;
  };

  for (const auto& label : pick_labels(targets, policy.n_targets, true)) {
    const auto& clips = targets.at(label);
    add_event(*clips[draw.Index(clips.size())], EventRole::kTarget,
              policy.target_snr_min_db, policy.target_snr_max_db);
  }
  const int n_others = draw.IntInclusive(policy.n_others_min, policy.n_others_max);
  if (n_others > 0) {
    const bool distinct = others.size() >= static_cast<std::size_t>(n_others);
    for (const auto& label : pick_labels(others, n_others, distinct)) {
      const auto& clips = others.at(label);
      add_event(*clips[draw.Index(clips.size())], EventRole::kOther,
                policy.other_snr_min_db, policy.other_snr_max_db);
    }
  }
  return spec;
}

}  // namespace btse::synth

#endif  // BTSE_SYNTH_SCENE_HPP_
