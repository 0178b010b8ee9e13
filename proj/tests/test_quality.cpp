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

#include <algorithm>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "ppgtrans/ppgtrans.hpp"

namespace {

using ppgtrans::ErrorCode;
using ppgtrans::Segment;
using ppgtrans::quality::ArtifactClass;
using ppgtrans::quality::BeatSet;
using ppgtrans::quality::QualityConfig;
using ppgtrans::quality::QualityMetrics;

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

Segment MakeSegment(std::vector<double> x, double rate = 60.0) {
  Segment s;
  s.rate = rate;
  s.duration_s = static_cast<double>(x.size()) / rate;
  s.samples = std::move(x);
  return s;
}

std::vector<double> Filtered(const std::vector<double>& x) {
  return ppgtrans::signal::DetrendDc(ppgtrans::filter::Bandpass(x, 60, 0.5, 2.0, 4), 60, 1.5);
}

// Alternating beat shapes: every second beat peaks later and carries a
// stronger dicrotic wave.
std::vector<double> AlternatingPulses() {
  oracle::PulseShape a;
  oracle::PulseShape b;
  b.systolic_time = 0.3;
  b.dicrotic_ratio = 0.8;
  auto x = oracle::PulseTrain(60, 12, 2.0, a);
  const auto y = oracle::PulseTrain(60, 12, 2.0, b, -1.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  return x;
}

TEST(QualityMetrics, SymmetricSinusoidHasZeroSkew) {
  const auto m = ppgtrans::quality::ComputeQualityMetrics(oracle::Sine(1.0, 60, 720), 60);
  EXPECT_NEAR(m.skewness, 0.0, 1e-6);
}

TEST(QualityMetrics, InBandSinusoidScoresHigh) {
  for (double f : {0.8, 1.0, 1.3, 1.6}) {
    const auto m = ppgtrans::quality::ComputeQualityMetrics(oracle::Sine(f, 60, 720), 60);
    EXPECT_GE(m.relative_power, 0.95) << f;
    EXPECT_GE(m.template_match, 0.99) << f;
  }
}

TEST(QualityMetrics, GaussianNoiseHasSmallExcessKurtosis) {
  const auto m = ppgtrans::quality::ComputeQualityMetrics(oracle::WhiteNoise(3600, 1.0, 17), 60);
  EXPECT_LE(std::abs(m.excess_kurtosis), 0.3);
}

TEST(QualityMetrics, RangesHold) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto m = ppgtrans::quality::ComputeQualityMetrics(Filtered(oracle::WhiteNoise(720, 1.0, seed)), 60);
    EXPECT_GE(m.relative_power, 0.0);
    EXPECT_LE(m.relative_power, 1.0);
    EXPECT_GE(m.template_match, -1.0);
    EXPECT_LE(m.template_match, 1.0);
    EXPECT_TRUE(std::isfinite(m.skewness) && std::isfinite(m.excess_kurtosis));
  }
}

TEST(QualityMetrics, FlatSegmentIsRejected) {
  EXPECT_EQ(CodeOf([] { ppgtrans::quality::ComputeQualityMetrics(std::vector<double>(720, 1.0), 60); }),
            ErrorCode::kFlatSignal);
}

TEST(ChannelScore, WorkedExamples) {
  EXPECT_NEAR(ppgtrans::quality::ChannelQualityScore({0.2, 0.5, 0.8, 0.9}), 0.88, 1e-12);
  EXPECT_NEAR(ppgtrans::quality::ChannelQualityScore({1.2, 0.5, 0.8, 0.9}), 0.78, 1e-12);
  EXPECT_NEAR(ppgtrans::quality::ChannelQualityScore({0.0, 0.0, 1.0, 1.0}), 1.0, 1e-12);
}

TEST(ChannelScore, MatchesDirectArithmeticOnRandomTuples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> s(-2.0, 2.0), k(-1.5, 3.0), r(0.0, 1.0), t(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const QualityMetrics m{s(rng), k(rng), r(rng), t(rng)};
    const double got = ppgtrans::quality::ChannelQualityScore(m);
    EXPECT_NEAR(got, oracle::QualityScore(m.skewness, m.excess_kurtosis, m.relative_power, m.template_match),
                1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(ChannelScore, IndicatorBoundariesAreInclusive) {
  EXPECT_NEAR(ppgtrans::quality::ChannelQualityScore({-0.5, 0.7, 0.0, 0.0}), 0.2, 1e-12);
  EXPECT_NEAR(ppgtrans::quality::ChannelQualityScore({0.8, 0.71, 0.0, 0.0}), 0.1, 1e-12);
}

TEST(ChannelScore, MonotoneInPowerAndClippedTemplate) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0), t(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    QualityMetrics a{0.1, 0.2, u(rng), t(rng)};
    QualityMetrics b = a;
    b.relative_power = std::min(1.0, a.relative_power + u(rng) * 0.5);
    EXPECT_LE(ppgtrans::quality::ChannelQualityScore(a), ppgtrans::quality::ChannelQualityScore(b));
    b = a;
    b.template_match = std::min(1.0, a.template_match + u(rng));
    EXPECT_LE(ppgtrans::quality::ChannelQualityScore(a), ppgtrans::quality::ChannelQualityScore(b));
  }
  // Negative template correlation does not subtract.
  EXPECT_EQ(ppgtrans::quality::ChannelQualityScore({0, 0, 0.5, -0.7}),
            ppgtrans::quality::ChannelQualityScore({0, 0, 0.5, 0.0}));
}

TEST(SelectBestChannel, TieGoesToLowestIndex) {
  const auto clean = Filtered(oracle::PulseTrain(60, 12, 1.0));
  const auto noisy = Filtered(oracle::WhiteNoise(720, 1.0, 3));
  std::vector<Segment> ch{MakeSegment(noisy), MakeSegment(clean), MakeSegment(clean)};
  const auto scores = std::vector<double>{
      ppgtrans::quality::ChannelQualityScore(ppgtrans::quality::ComputeQualityMetrics(ch[0])),
      ppgtrans::quality::ChannelQualityScore(ppgtrans::quality::ComputeQualityMetrics(ch[1]))};
  ASSERT_LT(scores[0], scores[1]);
  const auto choice = ppgtrans::quality::SelectBestChannel(ch);
  EXPECT_EQ(choice.index, 1U);
  EXPECT_DOUBLE_EQ(choice.score, scores[1]);
}

TEST(SelectBestChannel, SingleChannel) {
  std::vector<Segment> ch{MakeSegment(Filtered(oracle::WhiteNoise(720, 1.0, 4)))};
  EXPECT_EQ(ppgtrans::quality::SelectBestChannel(ch).index, 0U);
}

TEST(SelectBestChannel, FlatChannelIsExcluded) {
  std::vector<Segment> ch{MakeSegment(std::vector<double>(720, 0.0)),
                          MakeSegment(Filtered(oracle::WhiteNoise(720, 1.0, 4)))};
  EXPECT_EQ(ppgtrans::quality::SelectBestChannel(ch).index, 1U);
  std::vector<Segment> flat{MakeSegment(std::vector<double>(720, 0.0))};
  EXPECT_EQ(CodeOf([&] { ppgtrans::quality::SelectBestChannel(flat); }), ErrorCode::kAllChannelsInvalid);
}

TEST(SelectBestChannel, PermutationKeepsSelectedContent) {
  std::vector<Segment> ch;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    auto x = oracle::PulseTrain(60, 12, 0.9);
    const auto n = oracle::WhiteNoise(720, 0.1 * static_cast<double>(s * s), s);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n[i];
    ch.push_back(MakeSegment(Filtered(x)));
  }
  const auto base = ppgtrans::quality::SelectBestChannel(ch).segment.samples;
  std::vector<std::size_t> perm{0, 1, 2, 3};
  do {
    std::vector<Segment> p;
    for (std::size_t i : perm) p.push_back(ch[i]);
    EXPECT_EQ(ppgtrans::quality::SelectBestChannel(p).segment.samples, base);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(DetectBeats, PeriodicPulseTrain) {
  const auto b = ppgtrans::quality::DetectBeats(Filtered(oracle::PulseTrain(60, 12, 1.0)), 60);
  EXPECT_GE(b.peak_indices.size(), 11U);
  EXPECT_LE(b.peak_indices.size(), 12U);
  for (double rr : b.rr_intervals_s) {
    EXPECT_GE(rr, 0.98);
    EXPECT_LE(rr, 1.02);
  }
}

TEST(DetectBeats, FlatSignalHasNoBeats) {
  EXPECT_EQ(CodeOf([] { ppgtrans::quality::DetectBeats(std::vector<double>(720, 0.0), 60); }), ErrorCode::kNoBeats);
}

TEST(DetectBeats, CloseMaximaMergeIntoOneBeat) {
  oracle::PulseShape p;
  p.systolic_time = 0.2;
  p.systolic_width = 0.05;
  p.dicrotic_delay = 0.3;
  p.dicrotic_width = 0.05;
  p.dicrotic_ratio = 0.9;
  const auto x = oracle::PulseTrain(60, 12, 1.0, p);
  std::size_t local_maxima = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) local_maxima += x[i] > x[i - 1] && x[i] >= x[i + 1];
  ASSERT_GE(local_maxima, 22U);
  const auto b = ppgtrans::quality::DetectBeats(x, 60);
  EXPECT_GE(b.peak_indices.size(), 11U);
  EXPECT_LE(b.peak_indices.size(), 12U);
  for (double rr : b.rr_intervals_s) EXPECT_NEAR(rr, 1.0, 0.02);
}

TEST(DetectBeats, OnsetsInterleaveWithPeaks) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = oracle::PulseTrain(60, 12, 0.7 + 0.02 * static_cast<double>(seed));
    const auto n = oracle::WhiteNoise(x.size(), 0.15, seed);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n[i];
    const auto b = ppgtrans::quality::DetectBeats(Filtered(x), 60);
    ASSERT_EQ(b.onset_indices.size(), b.peak_indices.size());
    for (std::size_t i = 0; i < b.peak_indices.size(); ++i) {
      EXPECT_LT(b.onset_indices[i], b.peak_indices[i]);
      if (i > 0) {
        EXPECT_GT(b.onset_indices[i], b.peak_indices[i - 1]);
      }
    }
    for (double rr : b.rr_intervals_s) EXPECT_GT(rr, 0.0);
    for (double c : b.per_beat_template_corr) {
      EXPECT_GE(c, -1.0 - 1e-12);
      EXPECT_LE(c, 1.0 + 1e-12);
    }
  }
}

TEST(Classify, CleanPeriodicPulseIsClean) {
  const auto x = Filtered(oracle::PulseTrain(60, 12, 1.0));
  const auto m = ppgtrans::quality::ComputeQualityMetrics(x, 60);
  EXPECT_GT(m.relative_power, 0.4);
  EXPECT_GT(m.template_match, 0.95);
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(x, 60, m), ArtifactClass::kClean);
}

TEST(Classify, IrregularButRegularlyTimedBeatsAreWeak) {
  const auto x = Filtered(AlternatingPulses());
  const auto m = ppgtrans::quality::ComputeQualityMetrics(x, 60);
  EXPECT_LE(m.template_match, 0.95);
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(x, 60, m), ArtifactClass::kWeak);
}

TEST(Classify, WhiteNoiseIsHeavy) {
  int heavy = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto x = Filtered(oracle::WhiteNoise(720, 1.0, seed));
    const auto m = ppgtrans::quality::ComputeQualityMetrics(x, 60);
    heavy += ppgtrans::quality::ClassifyArtifact(x, 60, m) == ArtifactClass::kHeavy;
  }
  EXPECT_GE(heavy, 48);
}

TEST(Classify, RuleTable) {
  BeatSet b;
  b.rr_intervals_s = {1.0, 1.0, 1.0};
  b.per_beat_template_corr = {0.9, 0.9, 0.9};
  const QualityMetrics weak{0, 0, 0.8, 0.9};
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(b, {0, 0, 0.41, 0.951}), ArtifactClass::kClean);
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(b, {0, 0, 0.40, 0.99}), ArtifactClass::kWeak);
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(b, weak), ArtifactClass::kWeak);
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(std::nullopt, weak), ArtifactClass::kHeavy);

  BeatSet out_of_range = b;
  out_of_range.rr_intervals_s = {1.0, 1.3, 1.0};
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(out_of_range, weak), ArtifactClass::kHeavy);
  BeatSet variable = b;
  variable.rr_intervals_s = {0.6, 1.2, 0.6, 1.2};
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(variable, weak), ArtifactClass::kHeavy);
  BeatSet unconfident = b;
  unconfident.per_beat_template_corr = {0.9, 0.5, 0.5};
  EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(unconfident, weak), ArtifactClass::kHeavy);
}

TEST(Classify, TotalOverArbitraryInputs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    BeatSet b;
    for (int k = 0; k < 5; ++k) {
      b.rr_intervals_s.push_back(1.0 + 0.5 * u(rng));
      b.per_beat_template_corr.push_back(u(rng));
    }
    const auto c = ppgtrans::quality::ClassifyArtifact(b, {u(rng), u(rng), 0.5 + 0.5 * u(rng), u(rng)});
    EXPECT_TRUE(c == ArtifactClass::kClean || c == ArtifactClass::kWeak || c == ArtifactClass::kHeavy);
  }
}

TEST(Classify, EveryWindowOfAStrictlyPeriodicPulseIsClean) {
  for (double period = 0.65; period <= 1.2; period += 0.05) {
    for (double phase = 0.0; phase < 1.0; phase += 0.25) {
      const auto x = Filtered(oracle::PulseTrain(60, 12, period, {}, phase * period));
      const auto m = ppgtrans::quality::ComputeQualityMetrics(x, 60);
      EXPECT_EQ(ppgtrans::quality::ClassifyArtifact(x, 60, m), ArtifactClass::kClean) << period << " " << phase;
    }
  }
}

TEST(Mitigate, PreservesLengthAndCleanShape) {
  const auto x = Filtered(oracle::PulseTrain(60, 12, 1.0));
  const auto b = ppgtrans::quality::DetectBeats(x, 60);
  const auto y = ppgtrans::quality::MitigateWeak(x, 60, b, 1.5);
  EXPECT_EQ(y.size(), x.size());
  EXPECT_GE(oracle::Pearson(x, y), 0.95);
}

TEST(Mitigate, SuppressesBurstWithoutLosingBeats) {
  const auto clean = Filtered(oracle::PulseTrain(60, 12, 1.0));
  const double sd = oracle::Std(clean);
  const auto noise = oracle::WhiteNoise(60, 2.0 * sd, 21);
  auto x = clean;
  for (std::size_t i = 0; i < noise.size(); ++i) x[300 + i] += noise[i];
  const auto beats = ppgtrans::quality::DetectBeats(clean, 60);
  const auto y = ppgtrans::quality::MitigateWeak(x, 60, beats, 1.5);
  const auto y_clean = ppgtrans::quality::MitigateWeak(clean, 60, beats, 1.5);
  double before = 0, after = 0;
  for (std::size_t i = 300; i < 360; ++i) {
    before = std::max(before, std::abs(x[i] - clean[i]));
    after = std::max(after, std::abs(y[i] - y_clean[i]));
  }
  EXPECT_LE(after, 0.7 * before);
  EXPECT_EQ(ppgtrans::quality::DetectBeats(y, 60).peak_indices.size(), beats.peak_indices.size());
}

}  // namespace
