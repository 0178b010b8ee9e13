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

#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ppgtrans/ppgtrans.hpp"

namespace {

using ppgtrans::Corpus;
using ppgtrans::DeviceKind;
using ppgtrans::ErrorCode;
using ppgtrans::Recording;
using ppgtrans::SegmentRef;
namespace dataset = ppgtrans::dataset;
namespace quality = ppgtrans::quality;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const ppgtrans::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

// A preprocessed recording whose quality blocks are all clean.
Recording Rec(const std::string& subject, const std::string& device, DeviceKind kind, double t0_ms,
              double duration_s, const std::string& tag = "sitting") {
  Recording r;
  r.subject_id = subject;
  r.device_id = device;
  r.device_kind = kind;
  r.tag = tag;
  r.t0_ms = t0_ms;
  r.rate = 60.0;
  r.block_samples = 720;
  const auto n = static_cast<std::size_t>(duration_s * r.rate);
  r.signal = oracle::Sine(1.1, r.rate, n);
  for (std::size_t b = 0; b * r.block_samples < n; ++b) {
    quality::QualityReport q;
    q.cls = quality::ArtifactClass::kClean;
    q.start_ms = t0_ms + static_cast<double>(b * r.block_samples) * 1000.0 / r.rate;
    r.blocks.push_back(q);
  }
  return r;
}

Corpus TwoByTwo(double wearable_offset_ms = 0.0) {
  std::vector<Recording> recs;
  for (const std::string s : {"s01", "s02"}) {
    recs.push_back(Rec(s, "phone", DeviceKind::kToken, 0, 30));
    recs.push_back(Rec(s, "band", DeviceKind::kWearable, wearable_offset_ms, 30));
  }
  return Corpus(std::move(recs));
}

Corpus ThreeSubjects(double duration_s = 60) {
  std::vector<Recording> recs;
  for (const std::string s : {"s01", "s02", "s03"}) {
    recs.push_back(Rec(s, "phone", DeviceKind::kToken, 0, duration_s));
    recs.push_back(Rec(s, "band", DeviceKind::kWearable, 0, duration_s));
    recs.push_back(Rec(s, "ring", DeviceKind::kWearable, 0, duration_s));
  }
  return Corpus(std::move(recs));
}

TEST(BuildPairs, AlignedTwoByTwoCounts) {
  const auto set = dataset::BuildPairs(TwoByTwo(), {}, {6, 6});
  EXPECT_EQ(set.positives(), 10U);
  EXPECT_EQ(set.negatives(), 10U);
  std::map<std::string, int> per_subject;
  for (const auto& p : set.pairs) {
    if (p.label == 1) ++per_subject[p.a.subject_id];
  }
  EXPECT_EQ(per_subject["s01"], 5);
  EXPECT_EQ(per_subject["s02"], 5);
}

TEST(BuildPairs, OffsetBeyondToleranceGivesNoPositives) {
  EXPECT_EQ(CodeOf([] { dataset::BuildPairs(TwoByTwo(30000), {}, {6, 6}); }), ErrorCode::kNoPositivePairs);
}

TEST(BuildPairs, OffsetWithinToleranceStillPairs) {
  const auto set = dataset::BuildPairs(TwoByTwo(200), {}, {6, 6});
  EXPECT_GT(set.positives(), 0U);
  for (const auto& p : set.pairs) {
    if (p.label == 1) {
      EXPECT_LE(std::abs(p.a.start_ms - p.b.start_ms), 250.0);
    }
  }
}

TEST(BuildPairs, DeterministicForFixedSeed) {
  const auto c = ThreeSubjects();
  const auto a = dataset::BuildPairs(c, {}, {6, 6});
  const auto b = dataset::BuildPairs(c, {}, {6, 6});
  EXPECT_EQ(a.pairs, b.pairs);
  dataset::PairPolicy other;
  other.rng_seed = 99;
  EXPECT_NE(dataset::BuildPairs(c, other, {6, 6}).pairs, a.pairs);
}

TEST(BuildPairs, MissingTokenDevice) {
  std::vector<Recording> recs{Rec("s01", "band", DeviceKind::kWearable, 0, 30),
                              Rec("s02", "band", DeviceKind::kWearable, 0, 30)};
  EXPECT_EQ(CodeOf([&] { dataset::BuildPairs(Corpus(recs), {}, {6, 6}); }), ErrorCode::kNoTokenDevice);
  dataset::PairPolicy p;
  p.token_device = "tablet";
  EXPECT_EQ(CodeOf([&] { dataset::BuildPairs(TwoByTwo(), p, {6, 6}); }), ErrorCode::kNoTokenDevice);
}

TEST(BuildPairs, Invariants) {
  const auto c = ThreeSubjects(120);
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    dataset::PairPolicy p;
    p.rng_seed = seed;
    const auto set = dataset::BuildPairs(c, p, {6, 4});
    EXPECT_EQ(set.positives(), set.negatives());
    std::set<dataset::PairRef> unique(set.pairs.begin(), set.pairs.end());
    EXPECT_EQ(unique.size(), set.pairs.size());
    for (const auto& pr : set.pairs) {
      EXPECT_NE(pr.a.device_id, pr.b.device_id);
      EXPECT_EQ(pr.a.device_id, "phone");
      if (pr.label == 1) {
        EXPECT_EQ(pr.a.subject_id, pr.b.subject_id);
        EXPECT_LE(std::abs(pr.a.start_ms - pr.b.start_ms), p.sync_tolerance_ms);
      } else {
        EXPECT_NE(pr.a.subject_id, pr.b.subject_id);
      }
    }
  }
}

TEST(BuildPairs, UnbalancedKeepsRequestedRatio) {
  dataset::PairPolicy p;
  p.balance = false;
  p.negative_ratio = 1.25;
  const auto set = dataset::BuildPairs(ThreeSubjects(120), p, {6, 6});
  EXPECT_EQ(set.negatives(), static_cast<std::size_t>(std::llround(1.25 * static_cast<double>(set.positives()))));
}

TEST(BuildPairs, HeavyBlocksAreSkipped) {
  auto recs = std::vector<Recording>{Rec("s01", "phone", DeviceKind::kToken, 0, 36),
                                     Rec("s01", "band", DeviceKind::kWearable, 0, 36),
                                     Rec("s02", "phone", DeviceKind::kToken, 0, 36),
                                     Rec("s02", "band", DeviceKind::kWearable, 0, 36)};
  recs[1].blocks[1].cls = quality::ArtifactClass::kHeavy;
  const auto set = dataset::BuildPairs(Corpus(recs), {}, {6, 6});
  for (const auto& p : set.pairs) {
    if (p.b.subject_id == "s01") {
      EXPECT_TRUE(p.b.start_ms + 6000 <= 12000 || p.b.start_ms >= 24000) << p.b.start_ms;
    }
  }
  EXPECT_EQ(set.positives(), 6U + 4U);
}

TEST(BuildPairs, TagFilter) {
  std::vector<Recording> recs;
  for (const std::string s : {"s01", "s02"}) {
    for (const std::string tag : {"sitting", "standing"}) {
      const double t0 = tag == "sitting" ? 0 : 102000;
      recs.push_back(Rec(s, "phone", DeviceKind::kToken, t0, 30, tag));
      recs.push_back(Rec(s, "band", DeviceKind::kWearable, t0, 30, tag));
    }
  }
  const Corpus c(recs);
  dataset::PairPolicy p;
  p.tag = "standing";
  const auto set = dataset::BuildPairs(c, p, {6, 6});
  EXPECT_EQ(set.positives(), 10U);
  for (const auto& pr : set.pairs) {
    EXPECT_GE(pr.a.start_ms, 102000);
    EXPECT_GE(pr.b.start_ms, 102000);
  }
}

TEST(ReplayPairs, ZeroOffsetMatchesSynchronousPositives) {
  const auto c = ThreeSubjects();
  const auto base = dataset::BuildPairs(c, {}, {6, 6});
  const auto replay = dataset::BuildReplayPairs(c, {}, {6, 6}, 0);
  std::vector<dataset::PairRef> pos;
  for (const auto& p : base.pairs) {
    if (p.label == 1) pos.push_back(p);
  }
  std::sort(pos.begin(), pos.end());
  auto r = replay.pairs;
  std::sort(r.begin(), r.end());
  EXPECT_EQ(r, pos);
}

TEST(ReplayPairs, SixtySecondsOnSeventySecondRecording) {
  const Corpus c({Rec("s01", "phone", DeviceKind::kToken, 0, 70), Rec("s01", "band", DeviceKind::kWearable, 0, 70)});
  for (double hop : {6.0, 1.0}) {
    const auto set = dataset::BuildReplayPairs(c, {}, {6, hop}, 60);
    EXPECT_FALSE(set.pairs.empty());
    for (const auto& p : set.pairs) {
      EXPECT_LE(p.a.start_ms, 4000.0);
      EXPECT_NEAR(p.b.start_ms - p.a.start_ms, 60000.0, 250.0);
      EXPECT_EQ(p.label, 1);
    }
  }
}

TEST(ReplayPairs, OffsetBeyondRecordingWarns) {
  const auto set = dataset::BuildReplayPairs(ThreeSubjects(600), {}, {6, 6}, 3600);
  EXPECT_TRUE(set.pairs.empty());
  EXPECT_FALSE(set.warnings.empty());
  EXPECT_EQ(CodeOf([] { dataset::BuildReplayPairs(ThreeSubjects(), {}, {6, 6}, -1); }), ErrorCode::kInvalidParams);
}

TEST(LosoSplits, ThreeSubjects) {
  const auto splits = dataset::LosoSplits(ThreeSubjects());
  ASSERT_EQ(splits.size(), 3U);
  std::set<std::string> tested;
  for (const auto& s : splits) {
    EXPECT_EQ(s.train_subjects.size(), 2U);
    EXPECT_EQ(std::count(s.train_subjects.begin(), s.train_subjects.end(), s.test_subject), 0);
    tested.insert(s.test_subject);
  }
  EXPECT_EQ(tested, (std::set<std::string>{"s01", "s02", "s03"}));
  EXPECT_EQ(CodeOf([] { dataset::LosoSplits(std::vector<std::string>{"s01"}); }), ErrorCode::kTooFewSubjects);
}

TEST(LosoSplits, DeviceExclusionAppliesToTrainingOnly) {
  const auto c = ThreeSubjects();
  const auto set = dataset::BuildPairs(c, {}, {6, 6});
  for (const auto& s : dataset::LosoSplits(c, "ring")) {
    bool ring_in_test = false;
    for (const auto& p : set.pairs) {
      if (dataset::InTrain(p, s)) {
        EXPECT_NE(p.b.device_id, "ring");
      }
      if (dataset::InTest(p, s) && p.b.device_id == "ring") ring_in_test = true;
    }
    EXPECT_TRUE(ring_in_test);
  }
}

TEST(LosoSplits, TrainAndTestSegmentsAreDisjoint) {
  const auto c = ThreeSubjects(120);
  const auto train = dataset::BuildPairs(c, {}, {6, 4});
  const auto test = dataset::BuildPairs(c, {}, {6, 6});
  for (const auto& s : dataset::LosoSplits(c)) {
    std::set<SegmentRef> train_refs, test_refs;
    for (const auto& p : train.pairs) {
      if (dataset::InTrain(p, s)) {
        train_refs.insert(p.a);
        train_refs.insert(p.b);
      }
    }
    for (const auto& p : test.pairs) {
      if (dataset::InTest(p, s)) {
        test_refs.insert(p.a);
        if (p.label == 1) test_refs.insert(p.b);
      }
    }
    EXPECT_FALSE(train_refs.empty());
    for (const auto& r : test_refs) EXPECT_EQ(train_refs.count(r), 0U) << r.subject_id << " " << r.start_ms;
  }
}

TEST(Balance, DropsSurplusNegativesOnly) {
  dataset::PairSet set;
  for (int i = 0; i < 3; ++i) set.pairs.push_back({{"s01", "phone", i * 6000.0}, {"s01", "band", i * 6000.0}, 1});
  for (int i = 0; i < 7; ++i) set.pairs.push_back({{"s01", "phone", i * 6000.0}, {"s02", "band", i * 6000.0}, 0});
  auto copy = set;
  dataset::Balance(copy, 3);
  EXPECT_EQ(copy.positives(), 3U);
  EXPECT_EQ(copy.negatives(), 3U);
  auto again = set;
  dataset::Balance(again, 3);
  EXPECT_EQ(again.pairs, copy.pairs);
}

}  // namespace
