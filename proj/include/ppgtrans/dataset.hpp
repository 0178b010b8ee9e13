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

// Labeled pair construction over a preprocessed corpus: synchronous
// positives, seeded cross-subject negatives, replay-offset pairs, balancing
// and leave-one-subject-out splits.

#ifndef PPGTRANS_DATASET_HPP_
#define PPGTRANS_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ppgtrans/corpus.hpp"
#include "ppgtrans/error.hpp"

namespace ppgtrans::dataset {

struct PairPolicy {
  double sync_tolerance_ms = 250.0;
  // Empty selects every token-kind device.
  std::string token_device;
  // Empty selects every wearable-kind device.
  std::vector<std::string> wearables;
  bool balance = true;
  // Negatives drawn per positive before any balancing.
  double negative_ratio = 1.0;
  double train_overlap_s = 2.0;
  std::uint64_t rng_seed = 7;
  // Restricts both sides to recordings with this tag; empty accepts all.
  std::string tag;

  void Validate() const {
    Require(sync_tolerance_ms >= 0, ErrorCode::kInvalidConfig, "sync_tolerance_ms must be >= 0");
    Require(negative_ratio >= 0, ErrorCode::kInvalidConfig, "negative_ratio must be >= 0");
    Require(train_overlap_s >= 0, ErrorCode::kInvalidConfig, "train_overlap_s must be >= 0");
  }
};

struct WindowSpec {
  double window_s = 6.0;
  double hop_s = 6.0;
};

struct PairRef {
  SegmentRef a;  // token side
  SegmentRef b;  // wearable side
  int label = 0;

  auto operator<=>(const PairRef&) const = default;
};

struct PairSet {
  std::vector<PairRef> pairs;
  PairPolicy policy;
  WindowSpec windows;
  double replay_offset_s = 0.0;
  std::vector<std::string> warnings;

  std::size_t positives() const {
    return static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [](const PairRef& p) { return p.label == 1; }));
  }
  std::size_t negatives() const { return pairs.size() - positives(); }
};

namespace detail {

inline bool TagMatches(const Recording& r, const PairPolicy& p) {
  return p.tag.empty() || r.tag == p.tag;
}

inline bool IsToken(const Recording& r, const PairPolicy& p) {
  return r.device_kind == DeviceKind::kToken && (p.token_device.empty() || r.device_id == p.token_device);
}

inline bool IsSelectedWearable(const Recording& r, const PairPolicy& p) {
  if (r.device_kind != DeviceKind::kWearable) return false;
  return p.wearables.empty() ||
         std::find(p.wearables.begin(), p.wearables.end(), r.device_id) != p.wearables.end();
}

struct SideSegments {
  std::vector<SegmentRef> token;
  std::vector<SegmentRef> wearable;
};

inline SideSegments CollectSegments(const Corpus& corpus, const PairPolicy& p, const WindowSpec& w) {
  SideSegments out;
  for (const auto& r : corpus.recordings()) {
    if (!TagMatches(r, p)) continue;
    const bool token = IsToken(r, p);
    if (!token && !IsSelectedWearable(r, p)) continue;
    for (double t : r.WindowStarts(w.window_s, w.hop_s)) {
      (token ? out.token : out.wearable).push_back({r.subject_id, r.device_id, t});
    }
  }
  return out;
}

// Closest start in a sorted list, if within tolerance.
inline std::optional<double> Nearest(const std::vector<double>& sorted, double t, double tol) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  std::optional<double> best;
  if (it != sorted.end()) best = *it;
  if (it != sorted.begin() && (!best || t - *std::prev(it) <= *best - t)) best = *std::prev(it);
  if (best && std::abs(*best - t) <= tol) return best;
  return std::nullopt;
}

inline std::map<std::pair<std::string, std::string>, std::vector<double>> WearableStarts(
    const std::vector<SegmentRef>& wearable) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> out;
  for (const auto& s : wearable) out[{s.subject_id, s.device_id}].push_back(s.start_ms);
  for (auto& [_, v] : out) std::sort(v.begin(), v.end());
  return out;
}

}  // namespace detail

// Drops surplus negatives (seeded, uniformly) so |neg| = |pos|; original
// order of the retained pairs is preserved.
inline void Balance(PairSet& set, std::uint64_t seed) {
  const std::size_t pos = set.positives();
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    if (set.pairs[i].label != 1) neg_idx.push_back(i);
  }
  if (neg_idx.size() < pos) {
    set.warnings.push_back("only " + std::to_string(neg_idx.size()) + " negatives for " +
                           std::to_string(pos) + " positives");
    return;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(neg_idx.begin(), neg_idx.end(), rng);
  std::vector<char> drop(set.pairs.size(), 0);
  for (std::size_t k = pos; k < neg_idx.size(); ++k) drop[neg_idx[k]] = 1;
  std::vector<PairRef> kept;
  kept.reserve(2 * pos);
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    if (!drop[i]) kept.push_back(set.pairs[i]);
  }
  set.pairs = std::move(kept);
}

// Samples `count` distinct cross-subject (token, wearable) pairs uniformly.
inline std::vector<PairRef> SampleNegatives(const std::vector<SegmentRef>& token,
                                            const std::vector<SegmentRef>& wearable,
                                            std::size_t count, std::mt19937_64& rng) {
  std::map<std::string, std::size_t> wear_per_subject;
  for (const auto& w : wearable) ++wear_per_subject[w.subject_id];
  std::size_t available = 0;
  for (const auto& t : token) available += wearable.size() - wear_per_subject[t.subject_id];

  std::vector<PairRef> out;
  if (count >= available) {
    for (const auto& t : token) {
      for (const auto& w : wearable) {
        if (t.subject_id != w.subject_id) out.push_back({t, w, 0});
      }
    }
    return out;
  }
  std::set<std::pair<std::size_t, std::size_t>> taken;
  std::uniform_int_distribution<std::size_t> pick_t(0, token.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_w(0, wearable.size() - 1);
  while (out.size() < count) {
    const std::size_t i = pick_t(rng);
    const std::size_t j = pick_w(rng);
    if (token[i].subject_id == wearable[j].subject_id) continue;
    if (!taken.insert({i, j}).second) continue;
    out.push_back({token[i], wearable[j], 0});
  }
  return out;
}

// Positives: same subject, token vs wearable, starts within the sync
// tolerance. Negatives: seeded uniform draw over cross-subject pairs.
inline PairSet BuildPairs(const Corpus& corpus, const PairPolicy& policy, const WindowSpec& windows) {
  policy.Validate();
  Require(!corpus.recordings().empty(), ErrorCode::kEmptyInput, "corpus is empty");
  const auto segs = detail::CollectSegments(corpus, policy, windows);
  Require(!segs.token.empty(), ErrorCode::kNoTokenDevice,
          policy.token_device.empty() ? "corpus has no usable token-device segments"
                                      : "no usable segments for token device " + policy.token_device);

  PairSet set;
  set.policy = policy;
  set.windows = windows;
  const auto starts = detail::WearableStarts(segs.wearable);
  for (const auto& t : segs.token) {
    for (const auto& [key, list] : starts) {
      if (key.first != t.subject_id) continue;
      if (auto w = detail::Nearest(list, t.start_ms, policy.sync_tolerance_ms)) {
        set.pairs.push_back({t, {key.first, key.second, *w}, 1});
      }
    }
  }
  const std::size_t pos = set.pairs.size();
  Require(pos > 0, ErrorCode::kNoPositivePairs, "no synchronous token/wearable windows found");

  std::mt19937_64 rng(policy.rng_seed);
  const double ratio = policy.balance ? std::max(1.0, policy.negative_ratio) : policy.negative_ratio;
  const auto want = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pos)));
  auto neg = SampleNegatives(segs.token, segs.wearable, want, rng);
  set.pairs.insert(set.pairs.end(), neg.begin(), neg.end());
  if (policy.balance) Balance(set, policy.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  return set;
}

// Same-subject cross-device pairs whose wearable window starts `offset_s`
// after the token window, all labeled positive.
inline PairSet BuildReplayPairs(const Corpus& corpus, const PairPolicy& policy,
                                const WindowSpec& windows, double offset_s) {
  policy.Validate();
  Require(offset_s >= 0, ErrorCode::kInvalidParams, "replay offset must be >= 0");
  const auto segs = detail::CollectSegments(corpus, policy, windows);
  Require(!segs.token.empty(), ErrorCode::kNoTokenDevice, "corpus has no usable token-device segments");

  PairSet set;
  set.policy = policy;
  set.windows = windows;
  set.replay_offset_s = offset_s;
  const auto starts = detail::WearableStarts(segs.wearable);
  for (const auto& t : segs.token) {
    const double target = t.start_ms + offset_s * 1000.0;
    for (const auto& [key, list] : starts) {
      if (key.first != t.subject_id) continue;
      if (auto w = detail::Nearest(list, target, policy.sync_tolerance_ms)) {
        set.pairs.push_back({t, {key.first, key.second, *w}, 1});
        continue;
      }
      for (const Recording* r : corpus.Find(key.first, key.second)) {
        if (!detail::TagMatches(*r, policy)) continue;
        if (r->RawWindow(target, windows.window_s)) {
          set.pairs.push_back({t, {key.first, key.second, target}, 1});
          break;
        }
      }
    }
  }
  if (set.pairs.empty()) {
    set.warnings.push_back("replay offset " + std::to_string(offset_s) +
                           " s exceeds every recording; no pairs built");
  }
  return set;
}

struct Split {
  std::vector<std::string> train_subjects;
  std::string test_subject;
  // Wearable removed from training pairs only; empty keeps all devices.
  std::string excluded_device;
};

inline std::vector<Split> LosoSplits(const std::vector<std::string>& subjects,
                                     const std::string& excluded_device = {}) {
  Require(subjects.size() >= 2, ErrorCode::kTooFewSubjects,
          "leave-one-subject-out needs at least 2 subjects, got " + std::to_string(subjects.size()));
  std::vector<Split> out;
  for (const auto& test : subjects) {
    Split s;
    s.test_subject = test;
    s.excluded_device = excluded_device;
    for (const auto& other : subjects) {
      if (other != test) s.train_subjects.push_back(other);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Split> LosoSplits(const Corpus& corpus, const std::string& excluded_device = {}) {
  return LosoSplits(corpus.subjects(), excluded_device);
}

// Training pairs of a split: both sides from training subjects and the
// excluded device absent.
inline bool InTrain(const PairRef& p, const Split& s) {
  auto is_train = [&](const std::string& id) {
    return std::find(s.train_subjects.begin(), s.train_subjects.end(), id) != s.train_subjects.end();
  };
  if (!is_train(p.a.subject_id) || !is_train(p.b.subject_id)) return false;
  return s.excluded_device.empty() ||
         (p.a.device_id != s.excluded_device && p.b.device_id != s.excluded_device);
}

// Test pairs belong to the subject whose token is presented.
inline bool InTest(const PairRef& p, const Split& s) { return p.a.subject_id == s.test_subject; }

}  // namespace ppgtrans::dataset

#endif  // PPGTRANS_DATASET_HPP_
