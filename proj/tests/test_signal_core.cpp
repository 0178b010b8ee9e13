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

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ppgtrans/ppgtrans.hpp"

namespace {

using ppgtrans::ErrorCode;
using ppgtrans::Segment;
using ppgtrans::signal::TraceMeta;
using ppgtrans::signal::TraceRow;

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
  s.subject_id = "s01";
  s.device_id = "phone";
  s.rate = rate;
  s.duration_s = static_cast<double>(x.size()) / rate;
  s.samples = std::move(x);
  return s;
}

ppgtrans::PpgTrace UniformTrace(const std::vector<double>& x, double rate, double t0_ms = 0.0) {
  ppgtrans::PpgTrace t;
  t.subject_id = "s01";
  t.device_id = "band";
  t.nominal_rate = rate;
  t.channels = {x};
  for (std::size_t i = 0; i < x.size(); ++i) t.timestamps_ms.push_back(t0_ms + 1000.0 * static_cast<double>(i) / rate);
  return t;
}

TEST(Ingest, InvertNegatesEveryChannel) {
  std::vector<TraceRow> rows{{0, {1}}, {10, {2}}, {20, {3}}};
  TraceMeta meta;
  meta.invert = true;
  const auto t = ppgtrans::signal::IngestTrace(rows, meta);
  EXPECT_EQ(t.channels[0], (std::vector<double>{-1, -2, -3}));
  EXPECT_TRUE(t.polarity_inverted);
}

TEST(Ingest, ExactDuplicateRowIsDropped) {
  std::vector<TraceRow> rows{{0, {1}}, {10, {2}}, {10, {2}}};
  const auto t = ppgtrans::signal::IngestTrace(rows, {});
  EXPECT_EQ(t.size(), 2U);
  EXPECT_EQ(t.timestamps_ms, (std::vector<double>{0, 10}));
}

TEST(Ingest, RejectsBackwardsTimestamps) {
  std::vector<TraceRow> rows{{0, {1}}, {-5, {2}}};
  EXPECT_EQ(CodeOf([&] { ppgtrans::signal::IngestTrace(rows, {}); }), ErrorCode::kNonMonotonicTimestamps);
}

TEST(Ingest, RejectsConflictingDuplicate) {
  std::vector<TraceRow> rows{{0, {1}}, {10, {2}}, {10, {3}}};
  EXPECT_EQ(CodeOf([&] { ppgtrans::signal::IngestTrace(rows, {}); }), ErrorCode::kNonMonotonicTimestamps);
}

TEST(Ingest, RejectsTooFewRowsAndRaggedRows) {
  std::vector<TraceRow> one{{0, {1}}};
  EXPECT_EQ(CodeOf([&] { ppgtrans::signal::IngestTrace(one, {}); }), ErrorCode::kEmptyInput);
  std::vector<TraceRow> ragged{{0, {1, 2}}, {10, {2}}};
  EXPECT_EQ(CodeOf([&] { ppgtrans::signal::IngestTrace(ragged, {}); }), ErrorCode::kChannelLengthMismatch);
}

TEST(Resample, LengthFollowsSpan) {
  ppgtrans::PpgTrace t;
  t.nominal_rate = 110;
  t.channels = {std::vector<double>(1210, 0.0)};
  for (int i = 0; i < 1210; ++i) t.timestamps_ms.push_back(11000.0 * i / 1209.0);
  const auto r = ppgtrans::signal::ResampleUniform(t, 60);
  EXPECT_EQ(r.size(), 661U);
  EXPECT_EQ(r.channels[0].size(), 661U);
  EXPECT_DOUBLE_EQ(r.timestamps_ms.back(), 11000.0);
}

TEST(Resample, ConstantStaysConstant) {
  const auto r = ppgtrans::signal::ResampleUniform(UniformTrace(std::vector<double>(500, 5.0), 110), 60);
  for (double v : r.channels[0]) EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(Resample, SinusoidMatchesAnalyticOnNewGrid) {
  const auto src = UniformTrace(oracle::Sine(1.0, 110, 1101), 110);
  const auto r = ppgtrans::signal::ResampleUniform(src, 60);
  double worst = 0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = r.timestamps_ms[k] / 1000.0;
    worst = std::max(worst, std::abs(r.channels[0][k] - std::sin(2 * oracle::kPi * t)));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(Resample, ZeroSpanIsDegenerate) {
  ppgtrans::PpgTrace t;
  t.channels = {{1.0, 1.0}};
  t.timestamps_ms = {5.0, 5.0};
  EXPECT_EQ(CodeOf([&] { ppgtrans::signal::ResampleUniform(t, 60); }), ErrorCode::kDegenerateSpan);
}

TEST(Bandpass, ZeroInZeroOut) {
  const auto y = ppgtrans::filter::Bandpass(std::vector<double>(1800, 0.0), 60, 0.5, 2.0, 4);
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Bandpass, PassbandSinusoidKeepsAmplitude) {
  const auto y = ppgtrans::filter::Bandpass(oracle::Sine(1.0, 60, 1800), 60, 0.5, 2.0, 4);
  EXPECT_NEAR(oracle::FitAmplitude(y, 1.0, 60, 300, 1500), 1.0, 0.05);
}

TEST(Bandpass, VeryLowFrequencyIsStronglyAttenuated) {
  const std::size_t n = 60 * 600;
  const auto y = ppgtrans::filter::Bandpass(oracle::Sine(0.05, 60, n), 60, 0.5, 2.0, 4);
  const double gain = oracle::FitAmplitude(y, 0.05, 60, n / 4, 3 * n / 4);
  EXPECT_LE(oracle::ToDb(gain), -40.0);
}

TEST(Bandpass, FrequencyResponseMatchesAnalyticMagnitude) {
  const auto f = ppgtrans::filter::DesignBandpass(0.5, 2.0, 60, 4);
  EXPECT_EQ(f.sections().size(), 4U);
  for (double hz = 0.05; hz < 10.0; hz += 0.05) {
    const double got = std::abs(f.Response(2 * oracle::kPi * hz / 60));
    EXPECT_NEAR(got, oracle::ButterworthMagnitude(hz, 0.5, 2.0, 60, 4), 1e-9) << hz;
  }
}

TEST(Bandpass, ZeroPhaseHasNoLag) {
  const auto x = oracle::Sine(1.2, 60, 1800);
  const auto y = ppgtrans::filter::Bandpass(x, 60, 0.5, 2.0, 4);
  const auto peak = ppgtrans::features::XcorrPeakSearch(std::span<const double>(x).subspan(300, 1200),
                                                        std::span<const double>(y).subspan(300, 1200), 60, 0.5);
  EXPECT_EQ(peak.lag_s, 0.0);
}

TEST(Bandpass, RejectsBandsOutsideNyquist) {
  std::vector<double> x(100, 0.0);
  EXPECT_EQ(CodeOf([&] { ppgtrans::filter::Bandpass(x, 60, 2.0, 0.5, 4); }), ErrorCode::kBandOutOfRange);
  EXPECT_EQ(CodeOf([&] { ppgtrans::filter::Bandpass(x, 60, 0.5, 30.0, 4); }), ErrorCode::kBandOutOfRange);
}

TEST(Detrend, RemovesConstantOffset) {
  auto x = oracle::Sine(1.0, 60, 1800);
  for (double& v : x) v += 5.0;
  const auto y = ppgtrans::signal::DetrendDc(x, 60, 1.5);
  EXPECT_LE(std::abs(oracle::Mean(y)), 1e-6 * 2.0);
}

TEST(Detrend, ZeroInZeroOut) {
  for (double v : ppgtrans::signal::DetrendDc(std::vector<double>(600, 0.0), 60, 1.5)) EXPECT_EQ(v, 0.0);
}

TEST(Detrend, RemovesLinearRamp) {
  auto x = oracle::Sine(1.0, 60, 1800);
  std::vector<double> ramp(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    ramp[i] = 0.1 * static_cast<double>(i) / 60.0;
    x[i] += ramp[i];
  }
  const auto y = ppgtrans::signal::DetrendDc(x, 60, 1.5);
  EXPECT_LE(oracle::Pearson(y, ramp), 0.05);
}

TEST(SegmentWindows, CountsFollowTheHopArithmetic) {
  const auto twelve = ppgtrans::signal::SegmentWindows(MakeSegment(std::vector<double>(3600, 1.0)), 12, 12);
  EXPECT_EQ(twelve.size(), 5U);
  const auto six = ppgtrans::signal::SegmentWindows(MakeSegment(std::vector<double>(1800, 1.0)), 6, 4);
  ASSERT_EQ(six.size(), 7U);
  EXPECT_DOUBLE_EQ(six[3].start_ms, 12000.0);
  EXPECT_EQ(six[3].samples.size(), 360U);
}

TEST(SegmentWindows, ShortTraceIsRejected) {
  EXPECT_EQ(CodeOf([] { ppgtrans::signal::SegmentWindows(MakeSegment(std::vector<double>(300, 1.0)), 6, 6); }),
            ErrorCode::kTraceTooShort);
}

TEST(SegmentWindows, TilingReproducesThePrefix) {
  std::vector<double> x = oracle::WhiteNoise(1000, 1.0, 3);
  const auto w = ppgtrans::signal::SegmentWindows(MakeSegment(x), 3, 3);
  std::vector<double> joined;
  for (const auto& s : w) joined.insert(joined.end(), s.samples.begin(), s.samples.end());
  ASSERT_EQ(joined.size(), 900U);
  EXPECT_TRUE(std::equal(joined.begin(), joined.end(), x.begin()));
}

TEST(StandardizeSmooth, CubicPassesThroughUnchanged) {
  std::vector<double> x(360);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / 60.0 - 3.0;
    x[i] = 0.5 * t * t * t - t * t + 2 * t + 1;
  }
  const auto y = ppgtrans::signal::StandardizeSmooth(MakeSegment(x), 3, 11);
  auto z = x;
  ASSERT_TRUE(ppgtrans::signal::ZScoreInPlace(z));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples[i], z[i], 1e-9);
}

TEST(StandardizeSmooth, OutputIsStandardized) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = oracle::WhiteNoise(360, 3.0, seed);
    for (double& v : x) v += 7.0;
    const auto y = ppgtrans::signal::StandardizeSmooth(MakeSegment(x), 3, 11);
    EXPECT_EQ(y.stage, ppgtrans::SegmentStage::kStandardized);
    EXPECT_LE(std::abs(oracle::Mean(y.samples)), 1e-9);
    EXPECT_LE(std::abs(oracle::Std(y.samples) - 1.0), 1e-6);
  }
}

TEST(StandardizeSmooth, ReducesNoiseAroundCleanSinusoid) {
  const auto clean = oracle::Sine(1.0, 60, 360);
  const auto noise = oracle::WhiteNoise(360, 0.3, 11);
  std::vector<double> x(360);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = clean[i] + noise[i];
  auto reference = clean;
  ASSERT_TRUE(ppgtrans::signal::ZScoreInPlace(reference));
  auto before = x;
  ASSERT_TRUE(ppgtrans::signal::ZScoreInPlace(before));
  const auto after = ppgtrans::signal::StandardizeSmooth(MakeSegment(x), 3, 11).samples;
  auto residual = [&](const std::vector<double>& y) {
    // Project out the best-scaled clean component before measuring.
    double num = 0, den = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      num += y[i] * reference[i];
      den += reference[i] * reference[i];
    }
    double acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::pow(y[i] - num / den * reference[i], 2);
    return acc;
  };
  EXPECT_LT(residual(after), residual(before));
}

TEST(StandardizeSmooth, FlatSegmentIsRejected) {
  EXPECT_EQ(CodeOf([] { ppgtrans::signal::StandardizeSmooth(MakeSegment(std::vector<double>(360, 2.0)), 3, 11); }),
            ErrorCode::kFlatSignal);
}

TEST(Properties, FilteringPreservesSampleCount) {
  for (std::size_t n : {37U, 360U, 721U}) {
    const auto x = oracle::WhiteNoise(n, 1.0, n);
    EXPECT_EQ(ppgtrans::filter::Bandpass(x, 60, 0.5, 2.0, 4).size(), n);
    EXPECT_EQ(ppgtrans::signal::DetrendDc(x, 60, 1.5).size(), n);
    EXPECT_EQ(ppgtrans::signal::StandardizeSmooth(MakeSegment(x), 3, 11).samples.size(), n);
  }
}

TEST(Properties, PreprocessingKeepsDominantFrequency) {
  const ppgtrans::PreprocessConfig pre;
  for (double f = 0.8; f <= 1.8 + 1e-9; f += 0.1) {
    const auto trace = UniformTrace(oracle::Sine(f, 100, 6001), 100);
    const auto rec = ppgtrans::PreprocessTrace(trace, pre);
    const auto spec = ppgtrans::spectral::WelchPsd(rec.signal, rec.rate);
    const std::size_t peak = ppgtrans::spectral::PeakBin(spec, 0.0, 30.0);
    EXPECT_LE(std::abs(spec.freqs[peak] - f), spec.bin_width() + 1e-9) << f;
  }
}

TEST(Properties, Deterministic) {
  const auto x = oracle::WhiteNoise(900, 1.0, 5);
  EXPECT_EQ(ppgtrans::filter::Bandpass(x, 60, 0.5, 2.0, 4), ppgtrans::filter::Bandpass(x, 60, 0.5, 2.0, 4));
}

}  // namespace
