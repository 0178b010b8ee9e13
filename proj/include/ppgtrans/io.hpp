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

// File formats: trace CSV with meta JSON sidecars, processed recordings with
// per-block quality reports, feature CSV, pair-set manifests, configuration
// overlays and run manifests.

#ifndef PPGTRANS_IO_HPP_
#define PPGTRANS_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ppgtrans/corpus.hpp"
#include "ppgtrans/dataset.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/eval.hpp"
#include "ppgtrans/features.hpp"
#include "ppgtrans/hash.hpp"
#include "ppgtrans/signal_core.hpp"

namespace ppgtrans::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Shortest round-trip decimal representation.
inline std::string Num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double ParseNum(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(!s.empty() && r.ec == std::errc{} && r.ptr == s.data() + s.size(), ErrorCode::kInvalidParams,
          "malformed number '" + std::string(s) + "' in " + where);
  return v;
}

inline std::vector<std::string_view> SplitCsv(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  while (true) {
    const auto p = line.find(',');
    out.push_back(line.substr(0, p));
    if (p == std::string_view::npos) break;
    line.remove_prefix(p + 1);
  }
  return out;
}

inline std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  Require(static_cast<bool>(out), ErrorCode::kIo, "failed writing " + path.string());
}

inline Json ReadJson(const fs::path& path) {
  const std::string text = ReadFile(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
}

inline std::string HashFile(const fs::path& path) { return Fnv1aHex(ReadFile(path)); }

// ---- traces ----------------------------------------------------------------

inline Json MetaToJson(const PpgTrace& t) {
  return {{"subject_id", t.subject_id},
          {"device_id", t.device_id},
          {"device_kind", ToString(t.device_kind)},
          {"invert", t.polarity_inverted},
          {"tag", t.tag},
          {"nominal_rate", t.nominal_rate}};
}

inline signal::TraceMeta MetaFromJson(const Json& j) {
  try {
    signal::TraceMeta m;
    m.subject_id = j.at("subject_id").get<std::string>();
    m.device_id = j.at("device_id").get<std::string>();
    m.device_kind = ParseDeviceKind(j.at("device_kind").get<std::string>());
    m.invert = j.value("invert", false);
    m.tag = j.value("tag", std::string("sitting"));
    m.nominal_rate = j.value("nominal_rate", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("trace meta: ") + e.what());
  }
}

// Raw device polarity: inverted traces are written sign-flipped so that
// ingestion with the sidecar restores them.
inline std::string TraceCsv(const PpgTrace& t) {
  std::string out = "t_ms";
  for (std::size_t c = 0; c < t.channels.size(); ++c) out += ",ch" + std::to_string(c);
  out += '\n';
  const double sign = t.polarity_inverted ? -1.0 : 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += Num(t.timestamps_ms[i]);
    for (const auto& ch : t.channels) {
      out += ',';
      out += Num(sign * ch[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<signal::TraceRow> ParseTraceCsv(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kEmptyInput, where + " is empty");
  const auto header = SplitCsv(line);
  Require(header.size() >= 2 && header[0] == "t_ms", ErrorCode::kInvalidParams,
          where + ": header must be t_ms,ch0[,ch1,...]");
  std::vector<signal::TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsv(line);
    const std::string loc = where + ":" + std::to_string(lineno);
    Require(cells.size() == header.size(), ErrorCode::kChannelLengthMismatch,
            loc + " has " + std::to_string(cells.size()) + " fields, header has " +
                std::to_string(header.size()));
    signal::TraceRow row;
    row.t_ms = ParseNum(cells[0], loc);
    for (std::size_t c = 1; c < cells.size(); ++c) row.values.push_back(ParseNum(cells[c], loc));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string TraceStem(const PpgTrace& t) { return t.subject_id + "__" + t.device_id + "__" + t.tag; }

inline void WriteTrace(const fs::path& dir, const PpgTrace& t) {
  WriteFile(dir / (TraceStem(t) + ".csv"), TraceCsv(t));
  WriteFile(dir / (TraceStem(t) + ".meta.json"), MetaToJson(t).dump(2) + "\n");
}

inline PpgTrace ReadTrace(const fs::path& csv, const fs::path& meta) {
  const auto m = MetaFromJson(ReadJson(meta));
  const auto rows = ParseTraceCsv(ReadFile(csv), csv.string());
  return signal::IngestTrace(rows, m);
}

// Every `<stem>.meta.json` with its `<stem>.csv`, in name order.
inline std::vector<std::pair<fs::path, fs::path>> ListTraces(const fs::path& dir) {
  Require(fs::is_directory(dir), ErrorCode::kIo, "trace directory " + dir.string() + " does not exist");
  std::vector<std::pair<fs::path, fs::path>> out;
  const std::string suffix = ".meta.json";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    const fs::path csv = dir / (name.substr(0, name.size() - suffix.size()) + ".csv");
    Require(fs::exists(csv), ErrorCode::kIo, "missing trace CSV " + csv.string());
    out.emplace_back(csv, e.path());
  }
  std::sort(out.begin(), out.end());
  Require(!out.empty(), ErrorCode::kIo, "no traces found in " + dir.string());
  return out;
}

inline std::vector<PpgTrace> ReadTraces(const fs::path& dir) {
  std::vector<PpgTrace> out;
  for (const auto& [csv, meta] : ListTraces(dir)) out.push_back(ReadTrace(csv, meta));
  return out;
}

// ---- processed recordings --------------------------------------------------

inline Json QualityToJson(const quality::QualityReport& q) {
  return {{"start_ms", q.start_ms},
          {"channel", q.channel},
          {"S", q.metrics.skewness},
          {"K", q.metrics.excess_kurtosis},
          {"R", q.metrics.relative_power},
          {"T", q.metrics.template_match},
          {"score", q.score},
          {"class", quality::ToString(q.cls)}};
}

inline quality::ArtifactClass ParseArtifactClass(const std::string& s) {
  for (auto c : {quality::ArtifactClass::kClean, quality::ArtifactClass::kWeak, quality::ArtifactClass::kHeavy}) {
    if (quality::ToString(c) == s) return c;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown artifact class '" + s + "'");
}

inline std::string RecordingStem(const Recording& r) { return r.subject_id + "__" + r.device_id + "__" + r.tag; }

inline void WriteRecording(const fs::path& dir, const Recording& r) {
  Json j;
  j["subject_id"] = r.subject_id;
  j["device_id"] = r.device_id;
  j["device_kind"] = ToString(r.device_kind);
  j["tag"] = r.tag;
  j["t0_ms"] = r.t0_ms;
  j["rate"] = r.rate;
  j["block_samples"] = r.block_samples;
  j["blocks"] = Json::array();
  for (const auto& b : r.blocks) j["blocks"].push_back(QualityToJson(b));
  std::string sig = "value\n";
  for (double v : r.signal) {
    sig += Num(v);
    sig += '\n';
  }
  WriteFile(dir / (RecordingStem(r) + ".quality.json"), j.dump(2) + "\n");
  WriteFile(dir / (RecordingStem(r) + ".signal.csv"), sig);
}

inline Recording ReadRecording(const fs::path& quality_json) {
  const Json j = ReadJson(quality_json);
  Recording r;
  try {
    r.subject_id = j.at("subject_id").get<std::string>();
    r.device_id = j.at("device_id").get<std::string>();
    r.device_kind = ParseDeviceKind(j.at("device_kind").get<std::string>());
    r.tag = j.at("tag").get<std::string>();
    r.t0_ms = j.at("t0_ms").get<double>();
    r.rate = j.at("rate").get<double>();
    r.block_samples = j.at("block_samples").get<std::size_t>();
    for (const auto& b : j.at("blocks")) {
      quality::QualityReport q;
      q.start_ms = b.at("start_ms").get<double>();
      q.channel = b.at("channel").get<std::size_t>();
      q.metrics.skewness = b.at("S").get<double>();
      q.metrics.excess_kurtosis = b.at("K").get<double>();
      q.metrics.relative_power = b.at("R").get<double>();
      q.metrics.template_match = b.at("T").get<double>();
      q.score = b.at("score").get<double>();
      q.cls = ParseArtifactClass(b.at("class").get<std::string>());
      r.blocks.push_back(q);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, quality_json.string() + ": " + e.what());
  }
  std::string name = quality_json.filename().string();
  name = name.substr(0, name.size() - std::string_view(".quality.json").size());
  const fs::path sig = quality_json.parent_path() / (name + ".signal.csv");
  std::istringstream in(ReadFile(sig));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty()) r.signal.push_back(ParseNum(line, sig.string()));
  }
  return r;
}

inline Corpus ReadProcessedCorpus(const fs::path& dir) {
  Require(fs::is_directory(dir), ErrorCode::kIo, "processed directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().ends_with(".quality.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Require(!files.empty(), ErrorCode::kIo, "no processed recordings in " + dir.string());
  std::vector<Recording> recs;
  for (const auto& f : files) recs.push_back(ReadRecording(f));
  return Corpus(std::move(recs));
}

// ---- features --------------------------------------------------------------

inline std::string FeatureColumn(std::size_t i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "f%02zu", i + 1);
  return buf;
}

inline std::string FeatureCsv(const eval::FeatureTable& t) {
  std::string out = "subject_a,device_a,t_a,subject_b,device_b,t_b,label";
  for (std::size_t i = 0; i < features::kNumFeatures; ++i) out += "," + FeatureColumn(i);
  out += '\n';
  for (const auto& r : t.rows) {
    out += r.id.subject_a + "," + r.id.device_a + "," + Num(r.id.t_a) + "," + r.id.subject_b + "," +
           r.id.device_b + "," + Num(r.id.t_b) + "," + std::to_string(r.label);
    for (double v : r.values()) out += "," + Num(v);
    out += '\n';
  }
  return out;
}

inline eval::FeatureTable ParseFeatureCsv(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kEmptyInput, where + " is empty");
  const auto header = SplitCsv(line);
  Require(header.size() == 7 + features::kNumFeatures && header[0] == "subject_a" && header[7] == "f01",
          ErrorCode::kInvalidParams, where + ": unexpected feature header");
  eval::FeatureTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = SplitCsv(line);
    const std::string loc = where + ":" + std::to_string(lineno);
    Require(c.size() == header.size(), ErrorCode::kInvalidParams, loc + ": wrong field count");
    features::PairFeatureVector v;
    v.id = {std::string(c[0]), std::string(c[1]), ParseNum(c[2], loc),
            std::string(c[3]), std::string(c[4]), ParseNum(c[5], loc)};
    v.label = static_cast<int>(ParseNum(c[6], loc));
    for (std::size_t i = 0; i < features::kNumDifferences; ++i) v.diffs[i] = ParseNum(c[7 + i], loc);
    for (std::size_t i = 0; i < features::kNumSimilarities; ++i) {
      v.sims[i] = ParseNum(c[7 + features::kNumDifferences + i], loc);
    }
    t.rows.push_back(std::move(v));
  }
  return t;
}

// ---- pair sets -------------------------------------------------------------

inline Json PolicyToJson(const dataset::PairPolicy& p) {
  return {{"sync_tolerance_ms", p.sync_tolerance_ms},
          {"token_device", p.token_device},
          {"wearables", p.wearables},
          {"balance", p.balance},
          {"negative_ratio", p.negative_ratio},
          {"train_overlap_s", p.train_overlap_s},
          {"rng_seed", p.rng_seed},
          {"tag", p.tag}};
}

inline void PolicyFromJson(const Json& j, dataset::PairPolicy& p) {
  p.sync_tolerance_ms = j.value("sync_tolerance_ms", p.sync_tolerance_ms);
  p.token_device = j.value("token_device", p.token_device);
  p.wearables = j.value("wearables", p.wearables);
  p.balance = j.value("balance", p.balance);
  p.negative_ratio = j.value("negative_ratio", p.negative_ratio);
  p.train_overlap_s = j.value("train_overlap_s", p.train_overlap_s);
  p.rng_seed = j.value("rng_seed", p.rng_seed);
  p.tag = j.value("tag", p.tag);
}

inline Json PairSetToJson(const dataset::PairSet& s) {
  Json j;
  j["policy"] = PolicyToJson(s.policy);
  j["seed"] = s.policy.rng_seed;
  j["window_s"] = s.windows.window_s;
  j["hop_s"] = s.windows.hop_s;
  j["replay_offset_s"] = s.replay_offset_s;
  j["positives"] = s.positives();
  j["negatives"] = s.negatives();
  j["warnings"] = s.warnings;
  auto& arr = j["pairs"] = Json::array();
  for (const auto& p : s.pairs) {
    arr.push_back({{"a", {p.a.subject_id, p.a.device_id, p.a.start_ms}},
                   {"b", {p.b.subject_id, p.b.device_id, p.b.start_ms}},
                   {"label", p.label}});
  }
  return j;
}

inline dataset::PairSet PairSetFromJson(const Json& j) {
  try {
    dataset::PairSet s;
    PolicyFromJson(j.at("policy"), s.policy);
    s.windows = {j.at("window_s").get<double>(), j.at("hop_s").get<double>()};
    s.replay_offset_s = j.value("replay_offset_s", 0.0);
    for (const auto& p : j.at("pairs")) {
      const auto& a = p.at("a");
      const auto& b = p.at("b");
      s.pairs.push_back({{a.at(0).get<std::string>(), a.at(1).get<std::string>(), a.at(2).get<double>()},
                         {b.at(0).get<std::string>(), b.at(1).get<std::string>(), b.at(2).get<double>()},
                         p.at("label").get<int>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("pair set: ") + e.what());
  }
}

// ---- configuration ---------------------------------------------------------

inline Json ConfigToJson(const eval::PipelineConfig& c) {
  Json j;
  j["preprocess"] = {{"band_lo_hz", c.pre.band_lo_hz},
                     {"band_hi_hz", c.pre.band_hi_hz},
                     {"filter_order", c.pre.filter_order},
                     {"target_rate", c.pre.target_rate},
                     {"window_ma_s", c.pre.window_ma_s},
                     {"window_feat_s", c.pre.window_feat_s},
                     {"train_hop_s", c.pre.train_hop_s},
                     {"test_hop_s", c.pre.test_hop_s},
                     {"savgol_order", c.pre.savgol_order},
                     {"savgol_window_samples", c.pre.savgol_window_samples},
                     {"detrend_window_s", c.pre.detrend_window_s}};
  const auto& q = c.quality;
  j["quality"] = {{"weight_skew", q.weight_skew},
                  {"weight_kurt", q.weight_kurt},
                  {"weight_power", q.weight_power},
                  {"weight_template", q.weight_template},
                  {"skew_min", q.skew_min},
                  {"skew_max", q.skew_max},
                  {"kurt_max", q.kurt_max},
                  {"clean_power_min", q.clean_power_min},
                  {"clean_template_min", q.clean_template_min},
                  {"rr_min_s", q.rr_min_s},
                  {"rr_max_s", q.rr_max_s},
                  {"rr_cv_max", q.rr_cv_max},
                  {"beat_template_corr_min", q.beat_template_corr_min}};
  j["pairs"] = PolicyToJson(c.pairs);
  j["gbdt"] = {{"n_trees", c.gbdt.n_trees},
               {"max_depth", c.gbdt.max_depth},
               {"learning_rate", c.gbdt.learning_rate},
               {"l2_leaf_reg", c.gbdt.l2_leaf_reg},
               {"min_samples_leaf", c.gbdt.min_samples_leaf}};
  j["eval"] = {{"train_negative_ratio", c.train_negative_ratio},
               {"threshold_mode", eval::ToString(c.threshold_mode)},
               {"train_tag", c.train_tag},
               {"test_tag", c.test_tag},
               {"excluded_device", c.excluded_device}};
  return j;
}

template <typename T>
void Overlay(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

// Applies only the keys present in `j`; unknown sections are rejected.
inline void ApplyConfigOverlay(const Json& j, eval::PipelineConfig& c) {
  try {
    Require(j.is_object(), ErrorCode::kInvalidConfig, "config overlay must be a JSON object");
    for (const auto& [section, _] : j.items()) {
      Require(section == "preprocess" || section == "quality" || section == "pairs" || section == "gbdt" ||
                  section == "eval",
              ErrorCode::kInvalidConfig, "unknown config section '" + section + "'");
    }
    if (j.contains("preprocess")) {
      const auto& p = j["preprocess"];
      Overlay(p, "band_lo_hz", c.pre.band_lo_hz);
      Overlay(p, "band_hi_hz", c.pre.band_hi_hz);
      Overlay(p, "filter_order", c.pre.filter_order);
      Overlay(p, "target_rate", c.pre.target_rate);
      Overlay(p, "window_ma_s", c.pre.window_ma_s);
      Overlay(p, "window_feat_s", c.pre.window_feat_s);
      Overlay(p, "train_hop_s", c.pre.train_hop_s);
      Overlay(p, "test_hop_s", c.pre.test_hop_s);
      Overlay(p, "savgol_order", c.pre.savgol_order);
      Overlay(p, "savgol_window_samples", c.pre.savgol_window_samples);
      Overlay(p, "detrend_window_s", c.pre.detrend_window_s);
    }
    if (j.contains("quality")) {
      const auto& q = j["quality"];
      Overlay(q, "weight_skew", c.quality.weight_skew);
      Overlay(q, "weight_kurt", c.quality.weight_kurt);
      Overlay(q, "weight_power", c.quality.weight_power);
      Overlay(q, "weight_template", c.quality.weight_template);
      Overlay(q, "skew_min", c.quality.skew_min);
      Overlay(q, "skew_max", c.quality.skew_max);
      Overlay(q, "kurt_max", c.quality.kurt_max);
      Overlay(q, "clean_power_min", c.quality.clean_power_min);
      Overlay(q, "clean_template_min", c.quality.clean_template_min);
      Overlay(q, "rr_min_s", c.quality.rr_min_s);
      Overlay(q, "rr_max_s", c.quality.rr_max_s);
      Overlay(q, "rr_cv_max", c.quality.rr_cv_max);
      Overlay(q, "beat_template_corr_min", c.quality.beat_template_corr_min);
    }
    if (j.contains("pairs")) PolicyFromJson(j["pairs"], c.pairs);
    if (j.contains("gbdt")) {
      const auto& g = j["gbdt"];
      Overlay(g, "n_trees", c.gbdt.n_trees);
      Overlay(g, "max_depth", c.gbdt.max_depth);
      Overlay(g, "learning_rate", c.gbdt.learning_rate);
      Overlay(g, "l2_leaf_reg", c.gbdt.l2_leaf_reg);
      Overlay(g, "min_samples_leaf", c.gbdt.min_samples_leaf);
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      Overlay(e, "train_negative_ratio", c.train_negative_ratio);
      if (e.contains("threshold_mode")) {
        c.threshold_mode = eval::ParseThresholdMode(e["threshold_mode"].get<std::string>());
      }
      Overlay(e, "train_tag", c.train_tag);
      Overlay(e, "test_tag", c.test_tag);
      Overlay(e, "excluded_device", c.excluded_device);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config overlay: ") + e.what());
  }
}

// ---- manifests -------------------------------------------------------------

struct Manifest {
  std::string command;
  Json config = Json::object();
  Json seeds = Json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
  std::vector<std::string> outputs;

  // Directories hash their files (relative names and contents) in name order.
  void AddInput(const fs::path& p) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      Fnv1a h;
      for (const auto& f : files) {
        h.Update(fs::relative(f, p).generic_string());
        h.Update(ReadFile(f));
      }
      inputs.emplace_back(p.generic_string(), h.hex());
    } else {
      inputs.emplace_back(p.generic_string(), HashFile(p));
    }
  }

  Json ToJson() const {
    Json j;
    j["tool"] = "ppgtrans";
    j["command"] = command;
    j["config"] = config;
    j["seeds"] = seeds;
    auto& in = j["inputs"] = Json::array();
    for (const auto& [p, h] : inputs) in.push_back({{"path", p}, {"fnv1a64", h}});
    j["outputs"] = outputs;
    return j;
  }

  void Write(const fs::path& path) const { WriteFile(path, ToJson().dump(2) + "\n"); }
};

}  // namespace ppgtrans::io

#endif  // PPGTRANS_IO_HPP_
