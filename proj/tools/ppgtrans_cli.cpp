/*
 * Copyright 2026 The ppgtrans Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// ppgtrans command-line entry point. Exit codes: 0 success, 1 validation
// error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppgtrans/ppgtrans.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ppgtrans;
using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 7;
  int verbosity = 0;
};

void RequireExists(const fs::path& p) {
  Require(fs::exists(p), ErrorCode::kIo, "path does not exist: " + p.string());
}

eval::PipelineConfig LoadConfig(const Globals& g) {
  eval::PipelineConfig cfg;
  if (!g.config_path.empty()) {
    RequireExists(g.config_path);
    io::ApplyConfigOverlay(io::ReadJson(g.config_path), cfg);
  }
  cfg.pairs.rng_seed = g.seed;
  return cfg;
}

io::Manifest NewManifest(const std::string& command, const Globals& g, const eval::PipelineConfig& cfg) {
  io::Manifest m;
  m.command = command;
  m.config = io::ConfigToJson(cfg);
  m.seeds["seed"] = g.seed;
  if (!g.config_path.empty()) m.AddInput(g.config_path);
  return m;
}

// Manifest path for a file output: `<file>.manifest.json`.
fs::path ManifestFor(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

std::vector<double> ParseList(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::ParseNum(item, flag));
  Require(!out.empty(), ErrorCode::kInvalidParams, flag + " needs at least one value");
  return out;
}

void Log(const Globals& g, const std::string& msg) {
  if (g.verbosity > 0) std::cerr << msg << '\n';
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  int subjects = 20;
  int devices = 2;
  double duration = 600.0;
  std::vector<std::string> tags{"sitting"};
  std::string out = "corpus";
};

void RunGen(const GenArgs& a, const Globals& g) {
  synth::CorpusSpec spec;
  spec.n_subjects = a.subjects;
  spec.n_devices = a.devices;
  spec.duration_s = a.duration;
  spec.master_seed = g.seed;
  spec.tags = a.tags;
  Require(a.devices >= 2 && a.devices <= 5, ErrorCode::kInvalidParams, "--devices must be in [2, 5]");
  const auto traces = synth::GenCorpusTraces(spec);
  fs::create_directories(a.out);
  for (const auto& t : traces) io::WriteTrace(a.out, t);

  eval::PipelineConfig cfg;
  io::Manifest m = NewManifest("gen", g, cfg);
  m.config = {{"subjects", a.subjects}, {"devices", a.devices}, {"duration_s", a.duration}, {"tags", a.tags}};
  m.seeds["master_seed"] = g.seed;
  Json subj = Json::object();
  const auto params = synth::CorpusSubjects(spec);
  for (int i = 0; i < a.subjects; ++i) {
    const auto& p = params[static_cast<std::size_t>(i)];
    subj[synth::SubjectId(i)] = {{"seed", p.rng_seed}, {"base_hr_bpm", p.base_hr_bpm}};
  }
  m.seeds["subjects"] = subj;
  for (const auto& t : traces) m.outputs.push_back(io::TraceStem(t) + ".csv");
  m.Write(fs::path(a.out) / "manifest.json");
  std::cout << "wrote " << traces.size() << " traces to " << a.out << '\n';
}

// ---- preprocess --------------------------------------------------------------

struct IoArgs {
  std::string in;
  std::string out;
};

void RunPreprocess(const IoArgs& a, const Globals& g) {
  const auto cfg = LoadConfig(g);
  RequireExists(a.in);
  const auto traces = io::ReadTraces(a.in);
  fs::create_directories(a.out);
  io::Manifest m = NewManifest("preprocess", g, cfg);
  m.AddInput(a.in);
  std::map<std::string, std::size_t> classes;
  for (const auto& t : traces) {
    const Recording r = PreprocessTrace(t, cfg.pre, cfg.quality);
    io::WriteRecording(a.out, r);
    for (const auto& b : r.blocks) ++classes[std::string(quality::ToString(b.cls))];
    m.outputs.push_back(io::RecordingStem(r) + ".quality.json");
    Log(g, "processed " + io::RecordingStem(r));
  }
  m.Write(fs::path(a.out) / "manifest.json");
  std::cout << "processed " << traces.size() << " traces:";
  for (const auto& [c, n] : classes) std::cout << ' ' << c << '=' << n;
  std::cout << '\n';
}

// ---- pairs -----------------------------------------------------------------

struct PairsArgs {
  std::string in;
  std::string out = "pairs.json";
  std::string role = "test";
  double offset_s = -1.0;
};

void RunPairs(const PairsArgs& a, const Globals& g) {
  const auto cfg = LoadConfig(g);
  cfg.Validate();
  RequireExists(a.in);
  const Corpus corpus = io::ReadProcessedCorpus(a.in);
  dataset::PairSet set;
  if (a.offset_s >= 0) {
    set = dataset::BuildReplayPairs(corpus, cfg.TestPolicy(), cfg.TestWindows(), a.offset_s);
  } else if (a.role == "train") {
    set = dataset::BuildPairs(corpus, cfg.TrainPolicy(), cfg.TrainWindows());
  } else {
    set = dataset::BuildPairs(corpus, cfg.TestPolicy(), cfg.TestWindows());
  }
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
  io::WriteFile(a.out, io::PairSetToJson(set).dump(1) + "\n");
  io::Manifest m = NewManifest("pairs", g, cfg);
  m.seeds["pair_seed"] = set.policy.rng_seed;
  m.AddInput(a.in);
  m.outputs.push_back(a.out);
  m.Write(ManifestFor(a.out));
  std::cout << "pairs: " << set.positives() << " positive, " << set.negatives() << " negative\n";
}

// ---- features --------------------------------------------------------------

struct FeaturesArgs {
  std::string in;
  std::string pairs;
  std::string out = "features.csv";
};

void RunFeatures(const FeaturesArgs& a, const Globals& g) {
  const auto cfg = LoadConfig(g);
  RequireExists(a.in);
  RequireExists(a.pairs);
  const Corpus corpus = io::ReadProcessedCorpus(a.in);
  const auto set = io::PairSetFromJson(io::ReadJson(a.pairs));
  PreprocessConfig pre = cfg.pre;
  pre.window_feat_s = set.windows.window_s;
  eval::PipelineConfig wcfg = cfg;
  wcfg.pre = pre;
  const auto table = eval::ExtractFeatureTable(corpus, set, pre, wcfg.Features());
  io::WriteFile(a.out, io::FeatureCsv(table));
  io::Manifest m = NewManifest("features", g, cfg);
  m.AddInput(a.in);
  m.AddInput(a.pairs);
  m.outputs.push_back(a.out);
  m.Write(ManifestFor(a.out));
  std::cout << "features: " << table.rows.size() << " rows, " << table.skipped << " pairs skipped\n";
}

eval::FeatureTable ReadFeatureTable(const std::string& path) {
  RequireExists(path);
  return io::ParseFeatureCsv(io::ReadFile(path), path);
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string out = "model.txt";
  bool balance = true;
};

void RunTrain(const TrainArgs& a, const Globals& g) {
  const auto cfg = LoadConfig(g);
  cfg.gbdt.Validate();
  const auto table = ReadFeatureTable(a.features);
  std::vector<std::size_t> rows(table.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  if (a.balance) rows = eval::BalanceRows(table, std::move(rows), g.seed);
  const auto model = eval::TrainOnRows(table, rows, cfg.gbdt);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  gbdt::SaveModel(model, a.out);
  io::Manifest m = NewManifest("train", g, cfg);
  m.AddInput(a.features);
  m.outputs.push_back(a.out);
  m.Write(ManifestFor(a.out));
  std::cout << "trained " << model.trees.size() << " trees (" << model.NodeCount()
            << " nodes), threshold " << io::Num(model.threshold) << '\n';
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string features;
  std::string out = "report.json";
  std::string threshold_mode;
  std::string plot_data;
};

void RunEval(const EvalArgs& a, const Globals& g) {
  auto cfg = LoadConfig(g);
  if (!a.threshold_mode.empty()) cfg.threshold_mode = eval::ParseThresholdMode(a.threshold_mode);
  RequireExists(a.model);
  const auto model = gbdt::LoadModel(a.model);
  Require(model.feature_hash == eval::FeatureOrderHash(), ErrorCode::kInvalidParams,
          "model feature order does not match this build: " + a.model);
  const auto table = ReadFeatureTable(a.features);
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::string> groups;
  for (const auto& r : table.rows) {
    scores.push_back(model.PredictScore(r.values()));
    labels.push_back(r.label);
    groups.push_back(r.id.subject_a);
  }
  const auto gm = eval::EvaluateGroups(scores, labels, groups, cfg.threshold_mode, model.threshold);
  eval::EvalReport report;
  report.threshold_mode = cfg.threshold_mode;
  report.per_subject = gm.per_subject;
  report.weighted = gm.weighted;
  io::WriteFile(a.out, report.ToJson().dump(2) + "\n");
  io::Manifest m = NewManifest("eval", g, cfg);
  m.AddInput(a.model);
  m.AddInput(a.features);
  m.outputs.push_back(a.out);
  if (!a.plot_data.empty()) {
    std::string csv = "fpr,tpr\n";
    for (const auto& p : eval::RocCurve(scores, labels)) csv += io::Num(p.fpr) + "," + io::Num(p.tpr) + "\n";
    io::WriteFile(a.plot_data, csv);
    m.outputs.push_back(a.plot_data);
  }
  m.Write(ManifestFor(a.out));
  std::cout << report.ToTable();
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string in;
  std::string kind = "loso";
  std::string offsets = "0,5,15,30,60";
  std::string durations = "3,4,5,6";
  std::string out = "sweep.csv";
  std::string report;
  std::string threshold_mode;
  std::string plot_data;
};

// Ablation uses a single subject-disjoint split: the first half of the
// sorted subjects trains, the rest test.
std::vector<eval::SweepRow> RunAblation(const Corpus& corpus, const eval::PipelineConfig& cfg) {
  const auto subjects = corpus.subjects();
  Require(subjects.size() >= 2, ErrorCode::kTooFewSubjects, "ablation needs at least 2 subjects");
  const std::size_t half = (subjects.size() + 1) / 2;
  dataset::Split split;
  split.train_subjects.assign(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(half));
  const auto fcfg = cfg.Features();
  const auto train = eval::ExtractFeatureTable(
      corpus, dataset::BuildPairs(corpus, cfg.TrainPolicy(), cfg.TrainWindows()), cfg.pre, fcfg);
  const auto test = eval::ExtractFeatureTable(
      corpus, dataset::BuildPairs(corpus, cfg.TestPolicy(), cfg.TestWindows()), cfg.pre, fcfg);
  std::vector<std::size_t> tr;
  for (std::size_t r = 0; r < train.rows.size(); ++r) {
    if (dataset::InTrain(eval::RefOf(train.rows[r]), split)) tr.push_back(r);
  }
  tr = eval::BalanceRows(train, std::move(tr), cfg.pairs.rng_seed + 1000);
  gbdt::Matrix xtr;
  std::vector<int> ytr;
  for (std::size_t r : tr) {
    xtr.AppendRow(train.rows[r].values());
    ytr.push_back(train.rows[r].label);
  }
  gbdt::Matrix xte;
  std::vector<int> yte;
  std::vector<std::string> groups;
  for (const auto& row : test.rows) {
    if (std::find(split.train_subjects.begin(), split.train_subjects.end(), row.id.subject_a) !=
        split.train_subjects.end()) {
      continue;
    }
    xte.AppendRow(row.values());
    yte.push_back(row.label);
    groups.push_back(row.id.subject_a);
  }
  std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
  return eval::AblationSweep(xtr, ytr, xte, yte, groups, names, cfg.gbdt, cfg.threshold_mode);
}

void RunSweep(const SweepArgs& a, const Globals& g) {
  auto cfg = LoadConfig(g);
  if (!a.threshold_mode.empty()) cfg.threshold_mode = eval::ParseThresholdMode(a.threshold_mode);
  cfg.Validate();
  RequireExists(a.in);
  const Corpus corpus = io::ReadProcessedCorpus(a.in);
  eval::EvalReport report;
  std::vector<eval::SweepRow> rows;
  std::string key_name;
  if (a.kind == "loso" || a.kind == "replay") {
    const std::vector<double> offsets = a.kind == "replay" ? ParseList(a.offsets, "--offsets") : std::vector<double>{};
    if (a.kind == "replay") {
      Require(std::find(offsets.begin(), offsets.end(), 0.0) != offsets.end(), ErrorCode::kInvalidParams,
              "--offsets must include 0");
    }
    Log(g, "running leave-one-subject-out");
    const auto loso = eval::RunLoso(corpus, cfg);
    report = loso.report;
    if (a.kind == "loso") {
      key_name = "subject";
      for (const auto& [s, m] : loso.report.per_subject) {
        rows.push_back({s, {{"bac", m.bac}, {"auc", m.auc}, {"eer", m.eer}, {"n_pairs", static_cast<double>(m.n_pairs)}}});
      }
    } else {
      key_name = "offset_s";
      rows = eval::ReplaySweep(corpus, cfg, loso, offsets);
    }
  } else if (a.kind == "duration") {
    key_name = "duration_s";
    rows = eval::DurationSweep(corpus, cfg, ParseList(a.durations, "--durations"));
  } else if (a.kind == "device") {
    key_name = "excluded_device";
    rows = eval::DeviceSweep(corpus, cfg);
  } else if (a.kind == "ablation") {
    key_name = "removed_feature";
    rows = RunAblation(corpus, cfg);
  } else {
    throw Error(ErrorCode::kInvalidParams, "unknown sweep kind '" + a.kind + "'");
  }
  report.sweeps[a.kind] = rows;
  io::WriteFile(a.out, eval::EvalReport::SweepCsv(key_name, rows));
  io::Manifest m = NewManifest("sweep", g, cfg);
  m.config["sweep"] = {{"kind", a.kind}, {"offsets", a.offsets}, {"durations", a.durations}};
  m.AddInput(a.in);
  m.outputs.push_back(a.out);
  if (!a.report.empty()) {
    io::WriteFile(a.report, report.ToJson().dump(2) + "\n");
    m.outputs.push_back(a.report);
  }
  if (!a.plot_data.empty()) {
    std::string csv = key_name + ",bac\n";
    for (const auto& r : rows) csv += r.key + "," + io::Num(r.at("bac")) + "\n";
    io::WriteFile(a.plot_data, csv);
    m.outputs.push_back(a.plot_data);
  }
  m.Write(ManifestFor(a.out));
  std::cout << eval::EvalReport::SweepTable(a.kind, rows);
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string in;
  std::string model;
  std::string out = "session.jsonl";
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  double drop_prob = 0.0;
  std::string adversary = "none";
  double offset_s = 60.0;
  double chunk_ms = 500.0;
  double compute_ms = 10.0;
  int aggregate_k = 1;
  int aggregate_n = 1;
  std::string tag;
};

void RunSimulate(const SimulateArgs& a, const Globals& g) {
  const auto cfg = LoadConfig(g);
  cfg.Validate();
  RequireExists(a.in);
  const auto traces = io::ReadTraces(a.in);
  stream::SessionConfig sc;
  sc.latency = {a.latency_ms, a.jitter_ms, a.drop_prob};
  sc.chunk_ms = a.chunk_ms;
  sc.compute_ms = a.compute_ms;
  sc.window_s = cfg.pre.window_feat_s;
  sc.hop_s = cfg.pre.test_hop_s;
  sc.seed = g.seed;
  sc.aggregate_k = a.aggregate_k;
  sc.aggregate_n = a.aggregate_n;
  sc.pre = cfg.pre;
  sc.quality = cfg.quality;
  const auto adversary = stream::ParseAdversary(a.adversary);

  io::Manifest m = NewManifest("simulate", g, cfg);
  m.config["session"] = {{"latency_ms", a.latency_ms}, {"jitter_ms", a.jitter_ms}, {"drop_prob", a.drop_prob},
                         {"adversary", a.adversary},   {"offset_s", a.offset_s},   {"chunk_ms", a.chunk_ms},
                         {"compute_ms", a.compute_ms}, {"aggregate_k", a.aggregate_k},
                         {"aggregate_n", a.aggregate_n}};
  m.AddInput(a.in);

  std::optional<gbdt::GbdtModel> shared;
  std::map<std::string, gbdt::GbdtModel> per_subject;
  if (!a.model.empty()) {
    RequireExists(a.model);
    shared = gbdt::LoadModel(a.model);
    m.AddInput(a.model);
  } else {
    Log(g, "no --model given; training leave-one-subject-out fold models");
    const Corpus corpus = PreprocessCorpus(traces, cfg.pre, cfg.quality);
    auto loso = eval::RunLoso(corpus, cfg);
    for (auto& f : loso.folds) per_subject.emplace(f.split.test_subject, std::move(f.model));
  }
  const stream::ModelLookup lookup = [&](const std::string& s) -> const gbdt::GbdtModel& {
    if (shared) return *shared;
    auto it = per_subject.find(s);
    Require(it != per_subject.end(), ErrorCode::kInvalidParams, "no model for subject " + s);
    return it->second;
  };
  const auto res = stream::RunHarness(traces, lookup, sc, adversary, a.offset_s, a.tag);
  io::WriteFile(a.out, stream::SessionLog(res.decisions));
  m.outputs.push_back(a.out);
  m.Write(ManifestFor(a.out));
  std::cout << "decisions: " << res.decisions.size() << "\nlegit accept rate: " << io::Num(res.legit_accept_rate)
            << "\nadversary accept rate: " << io::Num(res.adversary_accept_rate) << '\n';
  if (res.weighted) std::cout << "weighted bac: " << io::Num(res.weighted->bac) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ppgtrans: cross-device PPG authentication pipeline"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config overlay (sections preprocess, quality, pairs, gbdt, eval)");
  app.add_option("--seed", g.seed, "Global seed (corpus master seed, pair sampling, transport)");
  app.add_flag("-v,--verbose", g.verbosity, "Progress messages on standard error");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic paired-PPG corpus");
  c_gen->add_option("--subjects", gen.subjects, "Number of subjects");
  c_gen->add_option("--devices", gen.devices, "Devices per subject (first is the token)");
  c_gen->add_option("--duration", gen.duration, "Recording length in seconds");
  c_gen->add_option("--tags", gen.tags, "Session tags, one recording per tag");
  c_gen->add_option("--out", gen.out, "Output corpus directory");

  IoArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Resample, filter and triage traces");
  c_pre->add_option("--in", pre.in, "Trace directory")->required();
  c_pre->add_option("--out", pre.out, "Processed output directory")->required();

  PairsArgs pairs;
  auto* c_pairs = app.add_subcommand("pairs", "Build a labeled pair set");
  c_pairs->add_option("--in", pairs.in, "Processed directory")->required();
  c_pairs->add_option("--out", pairs.out, "Pair set JSON");
  c_pairs->add_option("--role", pairs.role, "train (augmented grid) or test (balanced)")
      ->check(CLI::IsMember({"train", "test"}));
  c_pairs->add_option("--offset-s", pairs.offset_s, "Build replay pairs at this offset (negative disables)");

  FeaturesArgs feats;
  auto* c_feat = app.add_subcommand("features", "Extract the 21 pair features");
  c_feat->add_option("--in", feats.in, "Processed directory")->required();
  c_feat->add_option("--pairs", feats.pairs, "Pair set JSON")->required();
  c_feat->add_option("--out", feats.out, "Feature CSV");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the GBDT verifier");
  c_train->add_option("--features", train.features, "Training feature CSV")->required();
  c_train->add_option("--out", train.out, "Model file");
  c_train->add_option("--balance", train.balance, "Drop surplus negatives before training");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score a feature table and report BAC/AUC/EER");
  c_eval->add_option("--model", ev.model, "Model file")->required();
  c_eval->add_option("--features", ev.features, "Test feature CSV")->required();
  c_eval->add_option("--out", ev.out, "Report JSON");
  c_eval->add_option("--threshold-mode", ev.threshold_mode, "oracle or model (default from config: oracle)");
  c_eval->add_option("--emit-plot-data", ev.plot_data, "Write ROC points as CSV");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Run an evaluation sweep");
  c_sweep->add_option("--in", sw.in, "Processed directory")->required();
  c_sweep->add_option("--kind", sw.kind, "Sweep kind")
      ->check(CLI::IsMember({"loso", "replay", "duration", "ablation", "device"}));
  c_sweep->add_option("--offsets", sw.offsets, "Replay offsets in seconds (comma separated)");
  c_sweep->add_option("--durations", sw.durations, "Window durations in seconds (comma separated)");
  c_sweep->add_option("--out", sw.out, "Sweep CSV table");
  c_sweep->add_option("--report", sw.report, "Optional full report JSON");
  c_sweep->add_option("--threshold-mode", sw.threshold_mode, "oracle or model (default from config: oracle)");
  c_sweep->add_option("--emit-plot-data", sw.plot_data, "Write the BAC series as CSV");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run the streaming session harness");
  c_sim->add_option("--in", sim.in, "Trace directory")->required();
  c_sim->add_option("--model", sim.model, "Model file (default: per-subject fold models)");
  c_sim->add_option("--out", sim.out, "Session log (JSON lines)");
  c_sim->add_option("--latency-ms", sim.latency_ms, "Fixed transport delay");
  c_sim->add_option("--jitter-ms", sim.jitter_ms, "Uniform jitter half-width");
  c_sim->add_option("--drop-prob", sim.drop_prob, "Chunk drop probability");
  c_sim->add_option("--adversary", sim.adversary, "Adversary")->check(CLI::IsMember({"none", "baseline", "replay"}));
  c_sim->add_option("--offset-s", sim.offset_s, "Replay offset in seconds");
  c_sim->add_option("--chunk-ms", sim.chunk_ms, "Chunk length");
  c_sim->add_option("--compute-ms", sim.compute_ms, "Simulated compute time per window");
  c_sim->add_option("--aggregate-k", sim.aggregate_k, "Accept when k of the last n windows accept");
  c_sim->add_option("--aggregate-n", sim.aggregate_n, "Aggregation window length");
  c_sim->add_option("--tag", sim.tag, "Restrict to recordings with this tag");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (c_gen->parsed()) RunGen(gen, g);
    if (c_pre->parsed()) RunPreprocess(pre, g);
    if (c_pairs->parsed()) RunPairs(pairs, g);
    if (c_feat->parsed()) RunFeatures(feats, g);
    if (c_train->parsed()) RunTrain(train, g);
    if (c_eval->parsed()) RunEval(ev, g);
    if (c_sweep->parsed()) RunSweep(sw, g);
    if (c_sim->parsed()) RunSimulate(sim, g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kIo ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
