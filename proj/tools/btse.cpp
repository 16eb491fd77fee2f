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

// btse: batch front end. Reports go to stdout as JSON, diagnostics and
// human-readable summaries to stderr.

#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "btse/btse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Written next to every command's outputs.
struct RunManifest {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::uint64_t seed = 0;
  Clock::time_point start = Clock::now();

  json ToJson() const {
    const double wall =
        std::chrono::duration<double>(Clock::now() - start).count();
    return {{"command", command},
            {"config", config},
            {"inputs", inputs},
            {"outputs", outputs},
            {"seed", seed},
            {"tool_version", btse::kVersion},
            {"wall_time_s", wall}};
  }
};

void WriteJson(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw btse::IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw btse::IoError("write failed: " + path.string());
}

fs::path ManifestPathFor(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

void Emit(const json& report) { std::cout << report.dump(2) << std::endl; }

std::vector<std::string> SplitLabels(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string label;
    while (std::getline(ss, label, ',')) {
      if (!label.empty()) out.push_back(label);
    }
  }
  return out;
}

std::string HostDescription() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  }
  utsname u{};
  std::string os = "unknown os";
  if (uname(&u) == 0) os = std::string(u.sysname) + " " + u.release + " " + u.machine;
  return cpu + "; " + std::to_string(std::thread::hardware_concurrency()) +
         " hw threads; " + os;
}

// Scene i of a batch gets an independent seed derived from the batch seed.
std::uint64_t SceneSeed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

unsigned WorkerCount(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BTSE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string spec;
  std::string catalog;
  std::string ir_manifest;
  std::string out_dir;
  std::string source_root;
  int count = 1;
  std::uint64_t seed = 0;
  bool peak_normalize = false;
};

// With `peak_normalize`, one gain (from the mixture peak) is applied to every
// file of the scene so the ground truths stay consistent with the mixture.
void WriteScene(const btse::synth::RenderedScene& scene, const fs::path& dir,
                RunManifest manifest, bool peak_normalize) {
  fs::create_directories(dir);
  const double gain = peak_normalize ? btse::io::PeakGain(scene.mixture) : 1.0;
  manifest.config["peak_gain"] = gain;
  btse::io::WriteWav(gain == 1.0 ? scene.mixture : btse::Scale(scene.mixture, gain),
                     dir / "mixture.wav");
  manifest.outputs["mixture"] = (dir / "mixture.wav").string();
  for (const auto& [label, gt] : scene.ground_truths) {
    const fs::path p = dir / ("gt_" + label + ".wav");
    btse::io::WriteWav(gain == 1.0 ? gt : btse::Scale(gt, gain), p);
    manifest.outputs["gt_" + label] = p.string();
  }
  WriteJson(json(scene.spec), dir / "spec.json");
  manifest.outputs["spec"] = (dir / "spec.json").string();
  manifest.seed = scene.spec.seed;
  WriteJson(manifest.ToJson(), dir / "manifest.json");
}

int RunSynth(const SynthArgs& a) {
  using namespace btse::synth;
  const auto store = IrStore::Load(a.ir_manifest);
  const fs::path out_dir = a.out_dir;

  struct Job {
    std::string name;
    SceneSpec spec;
    fs::path source_root;
  };
  std::vector<Job> jobs;
  if (!a.spec.empty()) {
    const fs::path spec_path = a.spec;
    const fs::path root =
        a.source_root.empty() ? spec_path.parent_path() : fs::path(a.source_root);
    jobs.push_back({spec_path.stem().string(), LoadSceneSpec(spec_path), root});
  } else {
    const Catalog catalog = Catalog::Load(a.catalog, store);
    MixPolicy policy;
    for (int i = 0; i < a.count; ++i) {
      std::ostringstream name;
      name << "scene_" << std::setw(4) << std::setfill('0') << i;
      jobs.push_back({name.str(),
                      MakeRandomSceneSpec(SceneSeed(a.seed, i), policy, catalog),
                      fs::path(a.source_root)});
    }
  }

  RunManifest base;
  base.command = "synth";
  base.seed = a.seed;
  base.inputs = {{"ir_manifest", a.ir_manifest},
                 {"spec", a.spec},
                 {"catalog", a.catalog},
                 {"source_root", a.source_root}};
  base.config = {{"count", jobs.size()}, {"batch_seed", a.seed}};

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<json> results(jobs.size());
  int failures = 0;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const fs::path dir = out_dir / jobs[i].name;
      try {
        const RenderedScene scene = BuildScene(jobs[i].spec, store, jobs[i].source_root);
        WriteScene(scene, dir, base, a.peak_normalize);
        std::lock_guard<std::mutex> lock(mu);
        results[i] = {{"scene", dir.string()}, {"ok", true}};
        std::cerr << "synth: wrote " << dir.string() << "\n";
      } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(dir, ec);
        std::lock_guard<std::mutex> lock(mu);
        ++failures;
        results[i] = {{"scene", dir.string()}, {"ok", false}, {"error", e.what()}};
        std::cerr << "synth: scene " << jobs[i].name << " failed: " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n_workers = WorkerCount(jobs.size());
  for (unsigned t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json report = base.ToJson();
  report["scenes"] = results;
  report["failures"] = failures;
  WriteJson(report, out_dir / "run_manifest.json");
  Emit(report);
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// extract

int RunExtract(const std::string& weights, const std::string& in_wav,
               const std::vector<std::string>& raw_labels, const std::string& out_wav,
               bool subtract, bool peak_normalize) {
  RunManifest manifest;
  manifest.command = "extract";
  const auto bundle = btse::net::LoadBundle(weights);
  const auto model = std::make_shared<const btse::net::Model>(bundle);
  const auto labels = SplitLabels(raw_labels);
  const auto query = btse::ontology::QueryFromLabels(labels, model->registry());

  const btse::BinauralSignal input = btse::io::ReadWavBinaural(in_wav);
  const btse::BinauralSignal extracted =
      btse::stream::ProcessOffline(*model, input, query);
  btse::BinauralSignal result = extracted;
  if (subtract) {
    result = btse::Subtract(btse::Truncate(input, extracted.size()), extracted);
  }
  btse::io::WriteWav(result, out_wav, btse::io::WavEncoding::kFloat32, peak_normalize);

  manifest.config = {{"model", bundle.config()},
                     {"labels", labels},
                     {"mode", subtract ? "subtract" : "extract"},
                     {"peak_normalize", peak_normalize}};
  manifest.inputs = {{"weights", weights}, {"input", in_wav}};
  manifest.outputs = {{"output", out_wav}};
  const json m = manifest.ToJson();
  WriteJson(m, ManifestPathFor(out_wav));
  std::cerr << "extract: " << input.size() << " samples in, " << result.size()
            << " samples written to " << out_wav << "\n";
  Emit(m);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int RunEval(const std::string& est_path, const std::string& ref_path,
            const std::string& mix_path, const std::string& out_path) {
  RunManifest manifest;
  manifest.command = "eval";
  auto est = btse::io::ReadWavBinaural(est_path);
  auto ref = btse::io::ReadWavBinaural(ref_path);
  auto mix = btse::io::ReadWavBinaural(mix_path);
  if (est.sample_rate_hz() != ref.sample_rate_hz() ||
      mix.sample_rate_hz() != ref.sample_rate_hz()) {
    throw btse::ArgumentError("eval: sample rates differ");
  }
  const std::size_t n = std::min({est.size(), ref.size(), mix.size()});
  if (est.size() != n || ref.size() != n || mix.size() != n) {
    std::cerr << "eval: warning: lengths differ (est " << est.size() << ", ref "
              << ref.size() << ", mix " << mix.size() << "); trimming to " << n
              << " samples\n";
    est = btse::Truncate(est, n);
    ref = btse::Truncate(ref, n);
    mix = btse::Truncate(mix, n);
  }
  const auto report = btse::metrics::Evaluate(est, ref, mix);
  const json j = report;
  if (!out_path.empty()) {
    WriteJson(j, out_path);
    manifest.inputs = {{"est", est_path}, {"ref", ref_path}, {"mix", mix_path}};
    manifest.outputs = {{"report", out_path}};
    manifest.config = {{"samples", n}, {"sample_rate_hz", ref.sample_rate_hz()}};
    WriteJson(manifest.ToJson(), ManifestPathFor(out_path));
  }
  std::cerr << std::fixed << std::setprecision(2) << "eval: SI-SNR "
            << report.si_snr_db << " dB, SI-SNRi " << report.si_snri_db
            << " dB, dITD " << report.delta_itd_us << " us, dILD "
            << report.delta_ild_db << " dB\n";
  Emit(j);
  return 0;
}

// ---------------------------------------------------------------------------
// latency / bench

int RunLatency(int chunk, int stride, int rate) {
  if (stride < 1 || chunk < stride || chunk % stride != 0) {
    throw btse::ArgumentError("--chunk must be a positive multiple of --stride");
  }
  btse::net::ModelConfig c;
  c.stride = stride;
  c.chunk_frames = chunk / stride;
  c.sample_rate_hz = rate;
  const auto b = btse::stream::AlgorithmicLatency(c);
  json j = b;
  j["chunk_samples"] = chunk;
  j["stride"] = stride;
  j["sample_rate_hz"] = rate;
  std::cerr << std::fixed << std::setprecision(1) << "latency: chunk " << chunk
            << " + lookahead " << stride << " samples = "
            << btse::stream::TruncateToTenths(b.total_algorithmic_ms) << " ms\n";
  Emit(j);
  return 0;
}

int RunBench(const std::string& weights, const btse::net::ModelConfig& dims,
             std::uint64_t seed, int n_runs) {
  const auto bundle = weights.empty() ? btse::net::InitRandom(dims, seed)
                                      : btse::net::LoadBundle(weights);
  const btse::net::Model model(bundle);
  const auto stats = btse::stream::BenchChunk(model, n_runs, seed);
  json j = stats;
  j["config"] = bundle.config();
  j["host_description"] = HostDescription();
  j["param_count"] = bundle.param_count();
  const auto lat = btse::stream::AlgorithmicLatency(bundle.config());
  j["chunk_duration_ms"] = lat.buffer_ms;
  std::cerr << std::fixed << std::setprecision(3) << "bench: " << n_runs
            << " chunks, mean " << stats.mean_ms << " ms, p95 " << stats.p95_ms
            << " ms (chunk covers " << lat.buffer_ms << " ms of audio)\n";
  Emit(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming binaural target sound extraction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(btse::kVersion));

  // synth
  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Render binaural scenes");
  auto* spec_opt = cmd_synth->add_option("--spec", synth.spec, "Scene spec JSON");
  auto* catalog_opt =
      cmd_synth->add_option("--catalog", synth.catalog, "Source catalog JSON");
  spec_opt->excludes(catalog_opt);
  cmd_synth->add_option("--count", synth.count, "Number of random scenes")
      ->check(CLI::PositiveNumber);
  cmd_synth->add_option("--seed", synth.seed, "Batch seed");
  cmd_synth->add_option("--ir-manifest", synth.ir_manifest, "Impulse response manifest")
      ->required();
  cmd_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  cmd_synth->add_option("--source-root", synth.source_root,
                        "Directory for relative source paths");
  cmd_synth->add_flag("--peak-normalize", synth.peak_normalize,
                      "Scale each scene (mixture and ground truths) to unit mixture peak");

  // extract
  std::string weights, in_wav, out_wav;
  std::vector<std::string> labels;
  bool subtract = false;
  auto* cmd_extract = app.add_subcommand("extract", "Extract target classes");
  cmd_extract->add_option("--weights", weights, "Weight bundle")->required();
  cmd_extract->add_option("--in", in_wav, "Stereo input WAV")->required();
  cmd_extract->add_option("--labels", labels, "Target labels (comma separated)")
      ->required();
  cmd_extract->add_option("--out", out_wav, "Output WAV")->required();
  cmd_extract->add_flag("--subtract", subtract, "Write input minus extracted sound");
  bool extract_peak = false;
  cmd_extract->add_flag("--peak-normalize", extract_peak, "Scale the output to unit peak");

  // eval
  std::string est, ref, mix, eval_out;
  auto* cmd_eval = app.add_subcommand("eval", "Score an estimate");
  cmd_eval->add_option("--est", est)->required();
  cmd_eval->add_option("--ref", ref)->required();
  cmd_eval->add_option("--mix", mix)->required();
  cmd_eval->add_option("--out", eval_out, "Also write the report here");

  // latency
  int lat_chunk = 416, lat_stride = 32, lat_rate = btse::kCanonicalRateHz;
  auto* cmd_latency = app.add_subcommand("latency", "Algorithmic latency");
  cmd_latency->add_option("--chunk", lat_chunk, "Chunk size in samples");
  cmd_latency->add_option("--stride", lat_stride, "Stride L in samples");
  cmd_latency->add_option("--sample-rate", lat_rate);

  // bench
  std::string bench_weights;
  int n_runs = 100;
  std::uint64_t bench_seed = 0;
  btse::net::ModelConfig bench_cfg;
  auto* cmd_bench = app.add_subcommand("bench", "Per-chunk runtime");
  cmd_bench->add_option("--weights", bench_weights, "Weight bundle (else random)");
  cmd_bench->add_option("--n-runs", n_runs)->check(CLI::PositiveNumber);
  cmd_bench->add_option("--seed", bench_seed);
  cmd_bench->add_option("--dim", bench_cfg.dim);
  cmd_bench->add_option("--stride", bench_cfg.stride);
  cmd_bench->add_option("--chunk-frames", bench_cfg.chunk_frames);

  // classes
  std::string registry_path;
  auto* cmd_classes = app.add_subcommand("classes", "Print the class registry");
  cmd_classes->add_option("--weights", registry_path, "Read the registry from a bundle");

  // other-classes
  std::string graph_path;
  std::vector<std::string> targets;
  auto* cmd_other = app.add_subcommand("other-classes",
                                       "Classes unrelated to the targets");
  cmd_other->add_option("--graph", graph_path, "Ontology graph JSON")->required();
  cmd_other->add_option("--targets", targets, "Target nodes (comma separated)")
      ->required();

  // init-weights
  std::string init_out;
  std::uint64_t init_seed = 0;
  bool init_zero = false;
  btse::net::ModelConfig init_cfg;
  auto* cmd_init = app.add_subcommand("init-weights", "Write an untrained bundle");
  cmd_init->add_option("--out", init_out)->required();
  cmd_init->add_option("--seed", init_seed);
  cmd_init->add_flag("--zero", init_zero, "All-zero weights");
  cmd_init->add_option("--dim", init_cfg.dim);
  cmd_init->add_option("--stride", init_cfg.stride);
  cmd_init->add_option("--chunk-frames", init_cfg.chunk_frames);
  cmd_init->add_option("--enc-layers", init_cfg.enc_layers);
  cmd_init->add_option("--heads", init_cfg.heads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_synth) {
      if (synth.spec.empty() && synth.catalog.empty()) {
        throw btse::ArgumentError("synth needs --spec or --catalog");
      }
      return RunSynth(synth);
    }
    if (*cmd_extract) return RunExtract(weights, in_wav, labels, out_wav, subtract, extract_peak);
    if (*cmd_eval) return RunEval(est, ref, mix, eval_out);
    if (*cmd_latency) return RunLatency(lat_chunk, lat_stride, lat_rate);
    if (*cmd_bench) {
      auto cfg = btse::net::ModelConfig::WithDims(bench_cfg.dim, bench_cfg.stride,
                                                  bench_cfg.chunk_frames,
                                                  bench_cfg.num_classes);
      return RunBench(bench_weights, cfg, bench_seed, n_runs);
    }
    if (*cmd_classes) {
      const auto registry = registry_path.empty()
                                ? btse::ontology::ClassRegistry::Default()
                                : btse::net::LoadBundle(registry_path).registry();
      std::cerr << "classes: " << registry.size() << " labels\n";
      Emit(json(registry.labels()));
      return 0;
    }
    if (*cmd_other) {
      const auto graph = btse::ontology::OntologyGraph::Load(graph_path);
      const auto split = SplitLabels(targets);
      const std::set<std::string> target_set(split.begin(), split.end());
      const auto others = btse::ontology::OtherClasses(graph, target_set);
      std::cerr << "other-classes: " << others.size() << " of "
                << graph.nodes().size() << " nodes\n";
      Emit(json(others));
      return 0;
    }
    if (*cmd_init) {
      auto cfg = btse::net::ModelConfig::WithDims(init_cfg.dim, init_cfg.stride,
                                                  init_cfg.chunk_frames,
                                                  init_cfg.num_classes);
      cfg.enc_layers = init_cfg.enc_layers;
      cfg.heads = init_cfg.heads;
      const auto bundle = init_zero ? btse::net::ZeroWeights(cfg)
                                    : btse::net::InitRandom(cfg, init_seed);
      btse::net::SaveBundle(bundle, init_out);
      RunManifest manifest;
      manifest.command = "init-weights";
      manifest.seed = init_seed;
      manifest.config = {{"model", cfg}, {"zero", init_zero}};
      manifest.outputs = {{"weights", init_out}};
      const json m = manifest.ToJson();
      WriteJson(m, ManifestPathFor(init_out));
      std::cerr << "init-weights: " << bundle.param_count() << " parameters -> "
                << init_out << "\n";
      Emit(m);
      return 0;
    }
  } catch (const btse::Error& e) {
    std::cerr << "btse: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "btse: unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
