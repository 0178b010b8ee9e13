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

// Channel quality scoring, beat detection and motion-artifact triage.

#ifndef PPGTRANS_QUALITY_HPP_
#define PPGTRANS_QUALITY_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ppgtrans/error.hpp"
#include "ppgtrans/signal_core.hpp"
#include "ppgtrans/spectral.hpp"
#include "ppgtrans/stats.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans::quality {

struct QualityMetrics {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double relative_power = 0.0;  // R in [0, 1]
  double template_match = 0.0;  // T in [-1, 1]
};

struct QualityConfig {
  double weight_skew = 0.1;
  double weight_kurt = 0.1;
  double weight_power = 0.4;
  double weight_template = 0.4;
  double skew_min = -0.5;
  double skew_max = 0.8;
  double kurt_max = 0.7;
  double clean_power_min = 0.4;
  double clean_template_min = 0.95;
  double rr_min_s = 0.6;
  double rr_max_s = 1.25;
  double rr_cv_max = 0.2;
  double beat_template_corr_min = 0.8;
  // Relative-power estimator: dominant-peak half width and analysis band.
  double peak_half_width_hz = 0.15;
  double band_lo_hz = 0.5;
  double band_hi_hz = 2.0;
  int template_length = 64;

  void Validate() const {
    const double sum = weight_skew + weight_kurt + weight_power + weight_template;
    Require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::kInvalidConfig,
            "quality weights must sum to 1");
    Require(rr_min_s > 0 && rr_min_s < rr_max_s, ErrorCode::kInvalidConfig,
            "need 0 < rr_min_s < rr_max_s");
  }
};

struct BeatSet {
  std::vector<std::size_t> peak_indices;
  std::vector<std::size_t> onset_indices;  // onset_indices[i] precedes peak_indices[i]
  std::vector<double> rr_intervals_s;
  std::vector<double> per_beat_template_corr;
  double rate = 60.0;
};

enum class ArtifactClass { kClean, kWeak, kHeavy };

constexpr std::string_view ToString(ArtifactClass c) {
  switch (c) {
    case ArtifactClass::kClean: return "clean";
    case ArtifactClass::kWeak: return "weak";
    case ArtifactClass::kHeavy: return "heavy";
  }
  return "heavy";
}

namespace detail {

inline std::vector<double> ResampleBeat(std::span<const double> x, std::size_t first,
                                        std::size_t last, int length) {
  std::vector<double> out(static_cast<std::size_t>(length));
  const double span = static_cast<double>(last - first);
  for (int i = 0; i < length; ++i) {
    const double pos = static_cast<double>(first) + span * i / (length - 1);
    const auto j = std::min(static_cast<std::size_t>(pos), last - 1);
    const double w = pos - static_cast<double>(j);
    out[static_cast<std::size_t>(i)] = x[j] + w * (x[j + 1] - x[j]);
  }
  return out;
}

}  // namespace detail

// Systolic peaks (height-ordered refractory suppression), onsets as the
// minimum before each peak, and per-beat correlation to the ensemble beat.
inline BeatSet DetectBeats(std::span<const double> x, double rate, const QualityConfig& cfg = {}) {
  const std::size_t n = x.size();
  const std::vector<double> copy(x.begin(), x.end());
  const double lo = stats::Percentile(copy, 5.0);
  const double hi = stats::Percentile(copy, 95.0);
  const double amplitude = 0.5 * (hi - lo);
  Require(n >= 3 && amplitude > 1e-12 && stats::AllFinite(x), ErrorCode::kNoBeats,
          "flat or invalid signal has no beats");
  const double threshold = stats::Median(copy) + 0.3 * amplitude;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > threshold) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
  const auto min_gap = static_cast<std::size_t>(std::llround(cfg.rr_min_s * rate));
  std::vector<std::size_t> peaks;
  for (std::size_t c : candidates) {
    const bool clear = std::none_of(peaks.begin(), peaks.end(), [&](std::size_t p) {
      return (c > p ? c - p : p - c) < min_gap;
    });
    if (clear) peaks.push_back(c);
  }
  std::sort(peaks.begin(), peaks.end());
  Require(peaks.size() >= 2, ErrorCode::kNoBeats, "fewer than two systolic peaks");

  BeatSet beats;
  beats.rate = rate;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    std::size_t from = 0;
    if (i == 0) {
      if (peaks[0] == 0) continue;
      const std::size_t back = peaks[1] - peaks[0];
      from = peaks[0] > back ? peaks[0] - back : 0;
    } else {
      from = peaks[i - 1] + 1;
    }
    const auto it = std::min_element(x.begin() + static_cast<std::ptrdiff_t>(from),
                                     x.begin() + static_cast<std::ptrdiff_t>(peaks[i]));
    // A minimum on the first sample is a truncated upstroke, not an onset.
    if (i == 0 && it == x.begin()) continue;
    beats.onset_indices.push_back(static_cast<std::size_t>(it - x.begin()));
    beats.peak_indices.push_back(peaks[i]);
  }
  Require(beats.peak_indices.size() >= 2, ErrorCode::kNoBeats, "fewer than two complete beats");
  for (std::size_t i = 1; i < beats.peak_indices.size(); ++i) {
    beats.rr_intervals_s.push_back(
        static_cast<double>(beats.peak_indices[i] - beats.peak_indices[i - 1]) / rate);
  }

  std::vector<std::vector<double>> shapes;
  for (std::size_t i = 0; i + 1 < beats.onset_indices.size(); ++i) {
    const std::size_t a = beats.onset_indices[i];
    const std::size_t b = beats.onset_indices[i + 1];
    if (b > a + 1) shapes.push_back(detail::ResampleBeat(x, a, b, cfg.template_length));
  }
  if (!shapes.empty()) {
    std::vector<double> templ(static_cast<std::size_t>(cfg.template_length), 0.0);
    for (const auto& s : shapes) {
      for (std::size_t j = 0; j < templ.size(); ++j) templ[j] += s[j];
    }
    for (double& v : templ) v /= static_cast<double>(shapes.size());
    for (const auto& s : shapes) beats.per_beat_template_corr.push_back(stats::Pearson(s, templ));
  }
  return beats;
}

// Fraction of band power within +-peak_half_width of the dominant in-band
// peak. Uses a single Hann window over the whole segment, zero-padded 4x.
inline double RelativeSpectralPower(std::span<const double> x, double rate,
                                    const QualityConfig& cfg = {}) {
  spectral::WelchParams p;
  p.segment_s = static_cast<double>(x.size()) / rate;
  p.overlap = 0.0;
  p.resolution_hz = rate / (4.0 * static_cast<double>(x.size()));
  p.max_freq_hz = cfg.band_hi_hz + 0.5;
  const spectral::Spectrum s = spectral::WelchPsd(x, rate, p);
  const double total = spectral::BandPower(s, cfg.band_lo_hz, cfg.band_hi_hz);
  const std::size_t peak = spectral::PeakBin(s, cfg.band_lo_hz, cfg.band_hi_hz);
  if (!(total > 0) || peak == static_cast<std::size_t>(-1)) return 0.0;
  const double f0 = s.freqs[peak];
  const double near = spectral::BandPower(s, std::max(cfg.band_lo_hz, f0 - cfg.peak_half_width_hz),
                                          std::min(cfg.band_hi_hz, f0 + cfg.peak_half_width_hz));
  return std::clamp(near / total, 0.0, 1.0);
}

inline double TemplateMatch(const BeatSet& beats) {
  if (beats.per_beat_template_corr.size() < 2) return 0.0;
  return std::clamp(stats::Mean(beats.per_beat_template_corr), -1.0, 1.0);
}

inline QualityMetrics ComputeQualityMetrics(std::span<const double> x, double rate,
                                            const QualityConfig& cfg = {}) {
  Require(!x.empty() && stats::AllFinite(x) && stats::StdDev(x) > 1e-12, ErrorCode::kFlatSignal,
          "quality metrics need a non-flat finite segment");
  QualityMetrics m;
  m.skewness = stats::Skewness(x);
  m.excess_kurtosis = stats::ExcessKurtosis(x);
  m.relative_power = RelativeSpectralPower(x, rate, cfg);
  try {
    m.template_match = TemplateMatch(DetectBeats(x, rate, cfg));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoBeats) throw;
    m.template_match = 0.0;
  }
  return m;
}

inline QualityMetrics ComputeQualityMetrics(const Segment& segment, const QualityConfig& cfg = {}) {
  return ComputeQualityMetrics(segment.samples, segment.rate, cfg);
}

// Unified channel score: indicator terms for skewness/kurtosis plus weighted
// relative power and template match (T clipped to [0, 1]).
inline double ChannelQualityScore(const QualityMetrics& m, const QualityConfig& cfg = {}) {
  const double skew_ok = (m.skewness >= cfg.skew_min && m.skewness <= cfg.skew_max) ? 1.0 : 0.0;
  const double kurt_ok = m.excess_kurtosis <= cfg.kurt_max ? 1.0 : 0.0;
  return cfg.weight_skew * skew_ok + cfg.weight_kurt * kurt_ok +
         cfg.weight_power * m.relative_power +
         cfg.weight_template * std::clamp(m.template_match, 0.0, 1.0);
}

struct ChannelChoice {
  std::size_t index = 0;
  Segment segment;
  QualityMetrics metrics;
  double score = 0.0;
};

inline ChannelChoice SelectBestChannel(std::span<const Segment> channels,
                                       const QualityConfig& cfg = {}) {
  Require(!channels.empty(), ErrorCode::kAllChannelsInvalid, "no channels supplied");
  std::optional<ChannelChoice> best;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    QualityMetrics m;
    try {
      m = ComputeQualityMetrics(channels[c], cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFlatSignal) continue;
      throw;
    }
    const double score = ChannelQualityScore(m, cfg);
    if (!best || score > best->score) best = ChannelChoice{c, channels[c], m, score};
  }
  Require(best.has_value(), ErrorCode::kAllChannelsInvalid, "every channel is flat or non-finite");
  return *best;
}

inline ArtifactClass ClassifyArtifact(const std::optional<BeatSet>& beats,
                                      const QualityMetrics& m, const QualityConfig& cfg = {}) {
  if (m.relative_power > cfg.clean_power_min && m.template_match > cfg.clean_template_min) {
    return ArtifactClass::kClean;
  }
  if (!beats || beats->rr_intervals_s.empty()) return ArtifactClass::kHeavy;
  const auto confident = std::count_if(
      beats->per_beat_template_corr.begin(), beats->per_beat_template_corr.end(),
      [&](double r) { return r >= cfg.beat_template_corr_min; });
  const auto& rr = beats->rr_intervals_s;
  const double mean_rr = stats::Mean(rr);
  const double cv = mean_rr > 0 ? stats::StdDev(rr) / mean_rr : 1e9;
  const bool in_range = std::all_of(rr.begin(), rr.end(), [&](double v) {
    return v >= cfg.rr_min_s - 1e-12 && v <= cfg.rr_max_s + 1e-12;
  });
  if (confident >= 2 && cv <= cfg.rr_cv_max && in_range) return ArtifactClass::kWeak;
  return ArtifactClass::kHeavy;
}

// Detects beats and classifies in one step; NoBeats maps to Heavy.
inline ArtifactClass ClassifyArtifact(std::span<const double> x, double rate,
                                      const QualityMetrics& m, const QualityConfig& cfg = {}) {
  std::optional<BeatSet> beats;
  try {
    beats = DetectBeats(x, rate, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoBeats) throw;
  }
  return ClassifyArtifact(beats, m, cfg);
}

// Heart-rate adaptive moving average (0.25 x median RR), then DC removal.
inline std::vector<double> MitigateWeak(std::span<const double> x, double rate,
                                        const BeatSet& beats, double detrend_window_s) {
  const double median_rr = beats.rr_intervals_s.empty() ? 1.0 : stats::Median(beats.rr_intervals_s);
  const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.25 * median_rr * rate)));
  const std::size_t half = len / 2;
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + (len - half));
    smooth[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return signal::DetrendDc(smooth, rate, detrend_window_s);
}

inline Segment MitigateWeak(const Segment& segment, const BeatSet& beats, double detrend_window_s) {
  Segment out = segment;
  out.samples = MitigateWeak(segment.samples, segment.rate, beats, detrend_window_s);
  out.stage = SegmentStage::kMaChecked;
  return out;
}

struct QualityReport {
  std::size_t channel = 0;
  QualityMetrics metrics;
  double score = 0.0;
  ArtifactClass cls = ArtifactClass::kHeavy;
  double start_ms = 0.0;
};

}  // namespace ppgtrans::quality

#endif  // PPGTRANS_QUALITY_HPP_
