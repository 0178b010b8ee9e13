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

// Evaluation pipeline: feature tables over pair sets, leave-one-subject-out
// training and scoring, and the replay, duration, device and ablation sweeps.

#ifndef PPGTRANS_EVAL_HPP_
#define PPGTRANS_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppgtrans/corpus.hpp"
#include "ppgtrans/dataset.hpp"
#include "ppgtrans/features.hpp"
#include "ppgtrans/gbdt.hpp"
#include "ppgtrans/hash.hpp"
#include "ppgtrans/metrics.hpp"

namespace ppgtrans::eval {

inline constexpr double kMinWindowS = 3.0;

enum class ThresholdMode { kOracle, kModel };

inline std::string_view ToString(ThresholdMode m) { return m == ThresholdMode::kOracle ? "oracle" : "model"; }

inline ThresholdMode ParseThresholdMode(std::string_view s) {
  if (s == "oracle") return ThresholdMode::kOracle;
  if (s == "model") return ThresholdMode::kModel;
  throw Error(ErrorCode::kInvalidConfig, "threshold mode must be 'oracle' or 'model'");
}

inline std::string FeatureOrderHash() {
  Fnv1a h;
  for (auto name : features::kFeatureNames) {
    h.Update(name);
    h.Update(",");
  }
  return h.hex();
}

struct PipelineConfig {
  PreprocessConfig pre;
  quality::QualityConfig quality;
  features::FeatureConfig features;
  dataset::PairPolicy pairs;
  gbdt::GbdtConfig gbdt;
  double train_negative_ratio = 1.25;
  ThresholdMode threshold_mode = ThresholdMode::kOracle;
  std::string train_tag;
  std::string test_tag;
  std::string excluded_device;

  void Validate() const {
    pre.Validate();
    pairs.Validate();
    gbdt.Validate();
    Require(pre.window_feat_s >= kMinWindowS, ErrorCode::kDurationTooShort,
            "feature windows shorter than 3 s are not supported");
    Require(train_negative_ratio >= 1.0, ErrorCode::kInvalidConfig,
            "train_negative_ratio must be >= 1");
  }

  features::FeatureConfig Features() const {
    features::FeatureConfig f = features;
    f.welch.segment_s = std::min(f.welch.segment_s, pre.window_feat_s);
    return f;
  }
  dataset::WindowSpec TrainWindows() const { return {pre.window_feat_s, pre.train_hop_s}; }
  dataset::WindowSpec TestWindows() const { return {pre.window_feat_s, pre.test_hop_s}; }

  dataset::PairPolicy TrainPolicy() const {
    dataset::PairPolicy p = pairs;
    if (!train_tag.empty()) p.tag = train_tag;
    p.balance = false;
    p.negative_ratio = train_negative_ratio;
    return p;
  }
  dataset::PairPolicy TestPolicy() const {
    dataset::PairPolicy p = pairs;
    if (!test_tag.empty()) p.tag = test_tag;
    p.balance = true;
    p.negative_ratio = 1.0;
    p.rng_seed = pairs.rng_seed + 1;
    return p;
  }

  // Window-dependent settings for a feature window of `d` seconds.
  PipelineConfig WithWindow(double d) const {
    Require(d >= kMinWindowS, ErrorCode::kDurationTooShort,
            "window of " + std::to_string(d) + " s is below the 3 s minimum");
    PipelineConfig c = *this;
    c.pre.window_feat_s = d;
    c.pairs.train_overlap_s = std::min(2.0, d / 3.0);
    c.pre.train_hop_s = d - c.pairs.train_overlap_s;
    c.pre.test_hop_s = d;
    return c;
  }
};

struct FeatureTable {
  std::vector<features::PairFeatureVector> rows;
  std::size_t skipped = 0;

  gbdt::Matrix ToMatrix() const {
    gbdt::Matrix m(rows.size(), features::kNumFeatures);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = rows[r].values();
      std::copy(v.begin(), v.end(), m.values.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
    }
    return m;
  }
  std::vector<int> Labels() const {
    std::vector<int> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(r.label);
    return y;
  }
};

// Memoizes standardized windows so each segment is cut once per table.
class SegmentCache {
 public:
  SegmentCache(const Corpus& corpus, double window_s, const PreprocessConfig& pre)
      : corpus_(corpus), window_s_(window_s), pre_(pre) {}

  const std::optional<Segment>& Get(const SegmentRef& ref) {
    auto it = cache_.find(ref);
    if (it == cache_.end()) it = cache_.emplace(ref, corpus_.Window(ref, window_s_, pre_)).first;
    return it->second;
  }

 private:
  const Corpus& corpus_;
  double window_s_;
  PreprocessConfig pre_;
  std::map<SegmentRef, std::optional<Segment>> cache_;
};

// Pairs whose windows are unavailable or that have no detectable beats are
// counted in `skipped`.
inline FeatureTable ExtractFeatureTable(const Corpus& corpus, const dataset::PairSet& pairs,
                                        const PreprocessConfig& pre,
                                        const features::FeatureConfig& fcfg) {
  FeatureTable table;
  SegmentCache cache(corpus, pairs.windows.window_s, pre);
  table.rows.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    const auto& a = cache.Get(p.a);
    const auto& b = cache.Get(p.b);
    if (!a || !b) {
      ++table.skipped;
      continue;
    }
    try {
      auto fv = features::ExtractPairFeatures(*a, *b, fcfg);
      fv.label = p.label;
      table.rows.push_back(std::move(fv));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoBeats && e.code() != ErrorCode::kFlatSignal &&
          e.code() != ErrorCode::kNonFiniteFeature) {
        throw;
      }
      ++table.skipped;
    }
  }
  return table;
}

inline dataset::PairRef RefOf(const features::PairFeatureVector& v) {
  return {{v.id.subject_a, v.id.device_a, v.id.t_a}, {v.id.subject_b, v.id.device_b, v.id.t_b}, v.label};
}

inline SubjectMetrics EvaluateSubject(std::span<const double> scores, std::span<const int> labels,
                                      ThresholdMode mode, double model_threshold) {
  const BinaryMetrics m = ComputeMetrics(
      scores, labels, mode == ThresholdMode::kModel ? std::optional<double>(model_threshold) : std::nullopt);
  return {m.bac, m.auc, m.eer, m.threshold, scores.size()};
}

struct SweepRow {
  std::string key;
  std::vector<std::pair<std::string, double>> values;

  double at(const std::string& name) const {
    for (const auto& [k, v] : values) {
      if (k == name) return v;
    }
    throw Error(ErrorCode::kInvalidParams, "sweep row has no column " + name);
  }
};

struct EvalReport {
  std::map<std::string, SubjectMetrics> per_subject;
  WeightedMetrics weighted;
  ThresholdMode threshold_mode = ThresholdMode::kOracle;
  std::map<std::string, std::vector<SweepRow>> sweeps;
  std::vector<std::string> warnings;

  nlohmann::ordered_json ToJson() const {
    nlohmann::ordered_json j;
    j["threshold_mode"] = ToString(threshold_mode);
    j["weighted"] = {{"bac", weighted.bac}, {"auc", weighted.auc}, {"eer", weighted.eer}};
    auto& ps = j["per_subject"] = nlohmann::ordered_json::object();
    for (const auto& [s, m] : per_subject) {
      ps[s] = {{"bac", m.bac}, {"auc", m.auc}, {"eer", m.eer}, {"threshold", m.threshold},
               {"n_pairs", m.n_pairs}};
    }
    auto& sw = j["sweeps"] = nlohmann::ordered_json::object();
    for (const auto& [name, rows] : sweeps) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["key"] = r.key;
        for (const auto& [k, v] : r.values) o[k] = v;
        arr.push_back(o);
      }
      sw[name] = arr;
    }
    j["warnings"] = warnings;
    return j;
  }

  std::string ToTable() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << std::left << std::setw(14) << "subject" << std::right << std::setw(9) << "bac"
        << std::setw(9) << "auc" << std::setw(9) << "eer" << std::setw(11) << "threshold"
        << std::setw(9) << "n_pairs" << '\n';
    for (const auto& [s, m] : per_subject) {
      out << std::left << std::setw(14) << s << std::right << std::setw(9) << m.bac << std::setw(9)
          << m.auc << std::setw(9) << m.eer << std::setw(11) << m.threshold << std::setw(9)
          << m.n_pairs << '\n';
    }
    out << std::left << std::setw(14) << "weighted" << std::right << std::setw(9) << weighted.bac
        << std::setw(9) << weighted.auc << std::setw(9) << weighted.eer << '\n';
    for (const auto& [name, rows] : sweeps) out << '\n' << SweepTable(name, rows);
    return out.str();
  }

  static std::string SweepTable(const std::string& name, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << std::left << std::setw(16) << name;
    if (!rows.empty()) {
      for (const auto& [k, _] : rows.front().values) out << std::right << std::setw(16) << k;
    }
    out << '\n';
    for (const auto& r : rows) {
      out << std::left << std::setw(16) << r.key;
      for (const auto& [_, v] : r.values) out << std::right << std::setw(16) << v;
      out << '\n';
    }
    return out.str();
  }

  static std::string SweepCsv(const std::string& key_name, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << std::setprecision(10) << key_name;
    if (!rows.empty()) {
      for (const auto& [k, _] : rows.front().values) out << ',' << k;
    }
    out << '\n';
    for (const auto& r : rows) {
      out << r.key;
      for (const auto& [_, v] : r.values) out << ',' << v;
      out << '\n';
    }
    return out.str();
  }
};

struct FoldResult {
  dataset::Split split;
  gbdt::GbdtModel model;
  std::vector<std::size_t> test_rows;
  std::vector<double> scores;
  // Threshold applied in the standard evaluation of this fold.
  double threshold = 0.5;
  bool evaluated = false;
};

struct LosoResult {
  FeatureTable train;
  FeatureTable test;
  std::vector<FoldResult> folds;
  EvalReport report;
};

// Row indices kept after dropping surplus negatives (seeded).
inline std::vector<std::size_t> BalanceRows(const FeatureTable& t, std::vector<std::size_t> rows,
                                            std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t r : rows) (t.rows[r].label == 1 ? pos : neg).push_back(r);
  if (neg.size() <= pos.size()) return rows;
  std::mt19937_64 rng(seed);
  std::shuffle(neg.begin(), neg.end(), rng);
  neg.resize(pos.size());
  std::vector<std::size_t> kept = pos;
  kept.insert(kept.end(), neg.begin(), neg.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline gbdt::GbdtModel TrainOnRows(const FeatureTable& t, const std::vector<std::size_t>& rows,
                                   const gbdt::GbdtConfig& cfg) {
  gbdt::Matrix X(rows.size(), features::kNumFeatures);
  std::vector<int> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto v = t.rows[rows[k]].values();
    std::copy(v.begin(), v.end(), X.values.begin() + static_cast<std::ptrdiff_t>(k * X.cols));
    y[k] = t.rows[rows[k]].label;
  }
  return gbdt::TrainGbdt(X, y, cfg, FeatureOrderHash());
}

inline LosoResult RunLosoOnTables(FeatureTable train, FeatureTable test,
                                  const std::vector<std::string>& subjects,
                                  const PipelineConfig& cfg) {
  LosoResult res;
  res.train = std::move(train);
  res.test = std::move(test);
  res.report.threshold_mode = cfg.threshold_mode;
  const auto splits = dataset::LosoSplits(subjects, cfg.excluded_device);
  for (std::size_t f = 0; f < splits.size(); ++f) {
    FoldResult fold;
    fold.split = splits[f];
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < res.train.rows.size(); ++r) {
      if (dataset::InTrain(RefOf(res.train.rows[r]), fold.split)) train_rows.push_back(r);
    }
    train_rows = BalanceRows(res.train, std::move(train_rows), cfg.pairs.rng_seed + 1000 + f);
    fold.model = TrainOnRows(res.train, train_rows, cfg.gbdt);

    std::vector<int> labels;
    for (std::size_t r = 0; r < res.test.rows.size(); ++r) {
      if (!dataset::InTest(RefOf(res.test.rows[r]), fold.split)) continue;
      fold.test_rows.push_back(r);
      fold.scores.push_back(fold.model.PredictScore(res.test.rows[r].values()));
      labels.push_back(res.test.rows[r].label);
    }
    const auto counts = CountClasses(labels);
    if (counts.positives > 0 && counts.negatives > 0) {
      const SubjectMetrics m =
          EvaluateSubject(fold.scores, labels, cfg.threshold_mode, fold.model.threshold);
      fold.threshold = m.threshold;
      fold.evaluated = true;
      res.report.per_subject[fold.split.test_subject] = m;
    } else {
      res.report.warnings.push_back("subject " + fold.split.test_subject +
                                    " has a single-class test set and is not scored");
    }
    res.folds.push_back(std::move(fold));
  }
  res.report.weighted = WeightedSubjectAverage(res.report.per_subject);
  return res;
}

// Full leave-one-subject-out run: train pairs on the augmented grid, test
// pairs on the disjoint test grid, one model per held-out subject.
inline LosoResult RunLoso(const Corpus& corpus, const PipelineConfig& cfg) {
  cfg.Validate();
  const auto fcfg = cfg.Features();
  const auto train_pairs = dataset::BuildPairs(corpus, cfg.TrainPolicy(), cfg.TrainWindows());
  const auto test_pairs = dataset::BuildPairs(corpus, cfg.TestPolicy(), cfg.TestWindows());
  auto train = ExtractFeatureTable(corpus, train_pairs, cfg.pre, fcfg);
  auto test = ExtractFeatureTable(corpus, test_pairs, cfg.pre, fcfg);
  LosoResult res = RunLosoOnTables(std::move(train), std::move(test), corpus.subjects(), cfg);
  for (const auto& w : test_pairs.warnings) res.report.warnings.push_back(w);
  return res;
}

// Replay pairs scored by each fold's model against that fold's standard
// negatives, at the fold's standard threshold.
inline std::vector<SweepRow> ReplaySweep(const Corpus& corpus, const PipelineConfig& cfg,
                                         const LosoResult& loso, const std::vector<double>& offsets) {
  Require(std::find(offsets.begin(), offsets.end(), 0.0) != offsets.end(), ErrorCode::kInvalidParams,
          "replay offsets must include 0");
  std::vector<SweepRow> rows;
  const auto fcfg = cfg.Features();
  for (double offset : offsets) {
    const auto pairs = dataset::BuildReplayPairs(corpus, cfg.TestPolicy(), cfg.TestWindows(), offset);
    const FeatureTable replay = ExtractFeatureTable(corpus, pairs, cfg.pre, fcfg);
    std::map<std::string, SubjectMetrics> per_subject;
    std::size_t accepted = 0;
    std::size_t attempts = 0;
    for (const auto& fold : loso.folds) {
      if (!fold.evaluated) continue;
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& r : replay.rows) {
        if (r.id.subject_a != fold.split.test_subject) continue;
        const double s = fold.model.PredictScore(r.values());
        scores.push_back(s);
        labels.push_back(1);
        ++attempts;
        if (s >= fold.threshold) ++accepted;
      }
      if (scores.empty()) continue;
      for (std::size_t k = 0; k < fold.test_rows.size(); ++k) {
        if (loso.test.rows[fold.test_rows[k]].label == 1) continue;
        scores.push_back(fold.scores[k]);
        labels.push_back(0);
      }
      if (CountClasses(labels).negatives == 0) continue;
      SubjectMetrics m;
      m.bac = BacAt(scores, labels, fold.threshold);
      m.auc = Auc(scores, labels);
      m.eer = Eer(scores, labels);
      m.threshold = fold.threshold;
      m.n_pairs = scores.size();
      per_subject[fold.split.test_subject] = m;
    }
    SweepRow row;
    std::ostringstream key;
    key << offset;
    row.key = key.str();
    if (per_subject.empty()) {
      row.values = {{"bac", std::nan("")}, {"accept_rate", std::nan("")}, {"n_replay_pairs", 0.0}};
    } else {
      const auto w = WeightedSubjectAverage(per_subject);
      row.values = {{"bac", w.bac},
                    {"accept_rate", static_cast<double>(accepted) / static_cast<double>(attempts)},
                    {"n_replay_pairs", static_cast<double>(attempts)}};
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Re-windows, re-extracts, re-trains and re-evaluates per duration.
inline std::vector<SweepRow> DurationSweep(const Corpus& corpus, const PipelineConfig& cfg,
                                           const std::vector<double>& durations) {
  for (double d : durations) {
    Require(d >= kMinWindowS, ErrorCode::kDurationTooShort,
            "window of " + std::to_string(d) + " s is below the 3 s minimum");
  }
  std::vector<SweepRow> rows;
  for (double d : durations) {
    const LosoResult r = RunLoso(corpus, cfg.WithWindow(d));
    std::ostringstream key;
    key << d;
    rows.push_back({key.str(),
                    {{"bac", r.report.weighted.bac},
                     {"auc", r.report.weighted.auc},
                     {"eer", r.report.weighted.eer},
                     {"n_test_pairs", static_cast<double>(r.test.rows.size())}}});
  }
  return rows;
}

// Retrains with each wearable excluded from training; scores only the test
// pairs that involve the excluded wearable.
inline std::vector<SweepRow> DeviceSweep(const Corpus& corpus, const PipelineConfig& cfg) {
  std::vector<SweepRow> rows;
  for (const auto& device : corpus.devices(DeviceKind::kWearable)) {
    PipelineConfig c = cfg;
    c.excluded_device = device;
    const LosoResult r = RunLoso(corpus, c);
    std::map<std::string, SubjectMetrics> per_subject;
    for (const auto& fold : r.folds) {
      std::vector<double> scores;
      std::vector<int> labels;
      for (std::size_t k = 0; k < fold.test_rows.size(); ++k) {
        const auto& row = r.test.rows[fold.test_rows[k]];
        if (row.id.device_b != device) continue;
        scores.push_back(fold.scores[k]);
        labels.push_back(row.label);
      }
      const auto counts = CountClasses(labels);
      if (counts.positives == 0 || counts.negatives == 0) continue;
      per_subject[fold.split.test_subject] =
          EvaluateSubject(scores, labels, c.threshold_mode, fold.model.threshold);
    }
    if (per_subject.empty()) continue;
    const auto w = WeightedSubjectAverage(per_subject);
    rows.push_back({device, {{"bac", w.bac}, {"auc", w.auc}, {"eer", w.eer}}});
  }
  return rows;
}

struct GroupedMetrics {
  std::map<std::string, SubjectMetrics> per_subject;
  WeightedMetrics weighted;
};

inline GroupedMetrics EvaluateGroups(std::span<const double> scores, std::span<const int> labels,
                                     std::span<const std::string> groups, ThresholdMode mode,
                                     double model_threshold) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> by;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    by[groups[i]].first.push_back(scores[i]);
    by[groups[i]].second.push_back(labels[i]);
  }
  GroupedMetrics out;
  for (const auto& [g, sl] : by) {
    const auto c = CountClasses(sl.second);
    if (c.positives == 0 || c.negatives == 0) continue;
    out.per_subject[g] = EvaluateSubject(sl.first, sl.second, mode, model_threshold);
  }
  out.weighted = WeightedSubjectAverage(out.per_subject);
  return out;
}

// Zeroing a column is equivalent to removing it: a constant column never
// yields a positive-gain split.
inline std::vector<SweepRow> AblationSweep(const gbdt::Matrix& train_x, std::span<const int> train_y,
                                           const gbdt::Matrix& test_x, std::span<const int> test_y,
                                           std::span<const std::string> test_groups,
                                           const std::vector<std::string>& names,
                                           const gbdt::GbdtConfig& gcfg, ThresholdMode mode) {
  Require(names.size() == train_x.cols && test_x.cols == train_x.cols, ErrorCode::kInvalidParams,
          "feature names must match matrix width");
  auto run = [&](const gbdt::Matrix& xtr, const gbdt::Matrix& xte) {
    const auto model = gbdt::TrainGbdt(xtr, train_y, gcfg);
    const auto scores = model.PredictScores(xte);
    return std::make_pair(model, EvaluateGroups(scores, test_y, test_groups, mode, model.threshold));
  };
  const auto [base_model, base] = run(train_x, test_x);

  std::vector<std::size_t> rank(names.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return base_model.feature_importance[a] > base_model.feature_importance[b];
  });
  std::vector<double> rank_of(names.size());
  for (std::size_t k = 0; k < rank.size(); ++k) rank_of[rank[k]] = static_cast<double>(k + 1);

  std::vector<SweepRow> rows;
  rows.push_back({"none", {{"bac", base.weighted.bac}, {"delta_bac", 0.0}, {"importance", 0.0}, {"rank", 0.0}}});
  for (std::size_t f = 0; f < names.size(); ++f) {
    gbdt::Matrix xtr = train_x;
    gbdt::Matrix xte = test_x;
    for (std::size_t r = 0; r < xtr.rows; ++r) xtr(r, f) = 0.0;
    for (std::size_t r = 0; r < xte.rows; ++r) xte(r, f) = 0.0;
    const auto [_, m] = run(xtr, xte);
    rows.push_back({names[f],
                    {{"bac", m.weighted.bac},
                     {"delta_bac", m.weighted.bac - base.weighted.bac},
                     {"importance", base_model.feature_importance[f]},
                     {"rank", rank_of[f]}}});
  }
  return rows;
}

}  // namespace ppgtrans::eval

#endif  // PPGTRANS_EVAL_HPP_
