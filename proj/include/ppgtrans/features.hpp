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

// Per-signal descriptors and the 21 pairwise features (14 absolute
// differences followed by 7 similarity measures).

#ifndef PPGTRANS_FEATURES_HPP_
#define PPGTRANS_FEATURES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppgtrans/dtw.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/quality.hpp"
#include "ppgtrans/spectral.hpp"
#include "ppgtrans/stats.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans::features {

inline constexpr std::size_t kNumDifferences = 14;
inline constexpr std::size_t kNumSimilarities = 7;
inline constexpr std::size_t kNumFeatures = kNumDifferences + kNumSimilarities;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "diff_heart_rate",     "diff_ppi_systolic_std", "diff_prt_mean",     "diff_prt_std",
    "diff_prt_ratio",      "diff_prt_ratio_std",    "diff_skewness",     "diff_kurtosis",
    "diff_main_freq",      "diff_second_freq",      "diff_hf_energy",    "diff_lf_energy",
    "diff_lf_hf_ratio",    "diff_spectral_entropy", "coherence",         "max_xcorr",
    "max_lag_s",           "dtw_distance",          "pearson",           "cosine_time",
    "cosine_psd",
};

// Column indices of the similarity block inside the 21-vector.
enum FeatureIndex : std::size_t {
  kCoherence = 14,
  kMaxXcorr = 15,
  kMaxLag = 16,
  kDtw = 17,
  kPearson = 18,
  kCosineTime = 19,
  kCosinePsd = 20,
};

struct FeatureConfig {
  spectral::WelchParams welch;
  double band_lo_hz = 0.5;
  double band_hi_hz = 2.0;
  double split_hz = 1.0;  // LF/HF boundary
  double max_lag_s = 2.0;
  double second_peak_min_sep_hz = 0.1;
  double lf_hf_epsilon = 1e-6;
  quality::QualityConfig beats;

  // Welch sub-window never exceeds the segment.
  static FeatureConfig ForWindow(double window_s) {
    FeatureConfig c;
    c.welch.segment_s = std::min(c.welch.segment_s, window_s);
    return c;
  }
};

struct SignalDescriptors {
  double heart_rate_bpm = 0.0;
  double ppi_systolic_std_s = 0.0;
  double prt_mean_s = 0.0;
  double prt_std_s = 0.0;
  double prt_ratio = 0.0;
  double prt_ratio_std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double main_freq_hz = 0.0;
  double second_freq_hz = 0.0;
  double hf_energy_ratio = 0.0;
  double lf_energy_ratio = 0.0;
  double lf_hf_ratio = 0.0;
  double spectral_entropy = 0.0;

  std::array<double, kNumDifferences> AsArray() const {
    return {heart_rate_bpm, ppi_systolic_std_s, prt_mean_s,    prt_std_s,       prt_ratio,
            prt_ratio_std,  skewness,           kurtosis,      main_freq_hz,    second_freq_hz,
            hf_energy_ratio, lf_energy_ratio,   lf_hf_ratio,   spectral_entropy};
  }
};

inline spectral::Spectrum WelchPsd(const Segment& s, const FeatureConfig& cfg = {}) {
  return spectral::WelchPsd(s.samples, s.rate, cfg.welch);
}

inline SignalDescriptors ComputeDescriptors(std::span<const double> x, double rate,
                                            const quality::BeatSet& beats,
                                            const spectral::Spectrum& spec,
                                            const FeatureConfig& cfg = {}) {
  Require(beats.peak_indices.size() >= 2, ErrorCode::kNoBeats, "descriptors need two beats");
  SignalDescriptors d;
  const double mean_rr = stats::Mean(beats.rr_intervals_s);
  d.heart_rate_bpm = 60.0 / mean_rr;
  d.ppi_systolic_std_s = stats::StdDev(beats.rr_intervals_s);

  std::vector<double> prt, ratio;
  for (std::size_t i = 0; i < beats.peak_indices.size(); ++i) {
    const double rise =
        static_cast<double>(beats.peak_indices[i] - beats.onset_indices[i]) / rate;
    prt.push_back(rise);
    if (i + 1 < beats.onset_indices.size()) {
      const double cycle =
          static_cast<double>(beats.onset_indices[i + 1] - beats.onset_indices[i]) / rate;
      if (cycle > 0) ratio.push_back(rise / cycle);
    }
  }
  d.prt_mean_s = stats::Mean(prt);
  d.prt_std_s = stats::StdDev(prt);
  d.prt_ratio = stats::Mean(ratio);
  d.prt_ratio_std = stats::StdDev(ratio);
  d.skewness = stats::Skewness(x);
  d.kurtosis = stats::ExcessKurtosis(x);

  const double total = spectral::BandPower(spec, cfg.band_lo_hz, cfg.band_hi_hz);
  Require(total > 0 && std::isfinite(total), ErrorCode::kDegenerateSpectrum,
          "no power in the analysis band");
  const std::size_t main = spectral::PeakBin(spec, cfg.band_lo_hz, cfg.band_hi_hz);
  d.main_freq_hz = spec.freqs[main];

  double best = -1.0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    const double f = spec.freqs[k];
    if (f < cfg.band_lo_hz - 1e-9 || f > cfg.band_hi_hz + 1e-9) continue;
    if (std::abs(f - d.main_freq_hz) < cfg.second_peak_min_sep_hz) continue;
    const bool left_ok = k == 0 || spec.psd[k] > spec.psd[k - 1];
    const bool right_ok = k + 1 >= spec.psd.size() || spec.psd[k] >= spec.psd[k + 1];
    if (left_ok && right_ok && spec.psd[k] > best) {
      best = spec.psd[k];
      d.second_freq_hz = f;
    }
  }

  d.hf_energy_ratio = spectral::BandPower(spec, cfg.split_hz, cfg.band_hi_hz) / total;
  d.lf_energy_ratio = spectral::BandPower(spec, cfg.band_lo_hz, cfg.split_hz, false) / total;
  d.lf_hf_ratio = d.lf_energy_ratio / std::max(d.hf_energy_ratio, cfg.lf_hf_epsilon);

  double entropy = 0.0;
  std::size_t bins = 0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    const double f = spec.freqs[k];
    if (f < cfg.band_lo_hz - 1e-9 || f > cfg.band_hi_hz + 1e-9) continue;
    ++bins;
    const double p = spec.psd[k] * spec.bin_width() / total;
    if (p > 0) entropy -= p * std::log(p);
  }
  d.spectral_entropy = bins > 1 ? std::clamp(entropy / std::log(static_cast<double>(bins)), 0.0, 1.0)
                                : 0.0;
  return d;
}

inline SignalDescriptors ComputeDescriptors(const Segment& s, const FeatureConfig& cfg = {}) {
  const auto beats = quality::DetectBeats(s.samples, s.rate, cfg.beats);
  return ComputeDescriptors(s.samples, s.rate, beats, WelchPsd(s, cfg), cfg);
}

inline std::array<double, kNumDifferences> PairDifferences(const SignalDescriptors& d1,
                                                           const SignalDescriptors& d2) {
  const auto a = d1.AsArray();
  const auto b = d2.AsArray();
  std::array<double, kNumDifferences> out{};
  for (std::size_t i = 0; i < kNumDifferences; ++i) out[i] = std::abs(a[i] - b[i]);
  return out;
}

inline double CoherenceBand(const Segment& a, const Segment& b, const FeatureConfig& cfg = {}) {
  Require(a.samples.size() == b.samples.size() && a.rate == b.rate, ErrorCode::kInvalidParams,
          "coherence needs equal-length, equal-rate segments");
  return spectral::BandCoherence(a.samples, b.samples, a.rate, cfg.band_lo_hz, cfg.band_hi_hz,
                                 cfg.welch);
}

struct XcorrPeak {
  double value = 0.0;
  double lag_s = 0.0;
};

// Pearson correlation of the overlapping parts for every integer lag in
// [-max_lag, max_lag]. Positive lag: b trails a. Near-ties (1e-12) go to the
// smaller |lag|, then to the negative lag.
inline XcorrPeak XcorrPeakSearch(std::span<const double> a, std::span<const double> b, double rate,
                                 double max_lag_s) {
  const auto n = static_cast<std::ptrdiff_t>(std::min(a.size(), b.size()));
  const std::ptrdiff_t max_lag =
      std::min<std::ptrdiff_t>(std::llround(max_lag_s * rate), std::max<std::ptrdiff_t>(0, n - 2));
  XcorrPeak best{-2.0, 0.0};
  std::ptrdiff_t best_lag = 0;
  for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
    const std::ptrdiff_t a0 = lag >= 0 ? 0 : -lag;
    const std::ptrdiff_t b0 = lag >= 0 ? lag : 0;
    const std::ptrdiff_t len = n - (lag >= 0 ? lag : -lag);
    const double r = stats::Pearson(a.subspan(static_cast<std::size_t>(a0), static_cast<std::size_t>(len)),
                                    b.subspan(static_cast<std::size_t>(b0), static_cast<std::size_t>(len)));
    const bool higher = r > best.value + 1e-12;
    const bool tie = !higher && r >= best.value - 1e-12;
    const bool preferred =
        std::abs(lag) < std::abs(best_lag) || (std::abs(lag) == std::abs(best_lag) && lag < best_lag);
    if (higher || (tie && preferred)) {
      best.value = r;
      best_lag = lag;
    }
  }
  best.lag_s = static_cast<double>(best_lag) / rate;
  best.value = std::clamp(best.value, -1.0, 1.0);
  return best;
}

inline XcorrPeak XcorrPeakSearch(const Segment& a, const Segment& b, double max_lag_s = 2.0) {
  return XcorrPeakSearch(a.samples, b.samples, a.rate, max_lag_s);
}

struct LinearSimilarity {
  double pearson = 0.0;
  double cosine = 0.0;
};

inline LinearSimilarity LinearSimilarities(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size() && !a.empty(), ErrorCode::kInvalidParams,
          "linear similarities need equal, nonzero lengths");
  Require(stats::StdDev(a) > 1e-12 && stats::StdDev(b) > 1e-12, ErrorCode::kFlatSignal,
          "linear similarities need nonzero variance");
  return {stats::Pearson(a, b), stats::Cosine(a, b)};
}

// Cosine similarity of two PSDs restricted to the analysis band.
inline double PsdCosine(const spectral::Spectrum& sa, const spectral::Spectrum& sb,
                        double lo_hz = 0.5, double hi_hz = 2.0) {
  Require(sa.freqs.size() == sb.freqs.size() &&
              std::equal(sa.freqs.begin(), sa.freqs.end(), sb.freqs.begin(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-9; }),
          ErrorCode::kGridMismatch, "PSDs are on different frequency grids");
  std::vector<double> a, b;
  for (std::size_t k = 0; k < sa.freqs.size(); ++k) {
    if (sa.freqs[k] < lo_hz - 1e-9 || sa.freqs[k] > hi_hz + 1e-9) continue;
    a.push_back(sa.psd[k]);
    b.push_back(sb.psd[k]);
  }
  return std::clamp(stats::Cosine(a, b), 0.0, 1.0);
}

struct PairIdentity {
  std::string subject_a, device_a;
  double t_a = 0.0;
  std::string subject_b, device_b;
  double t_b = 0.0;
};

struct PairFeatureVector {
  std::array<double, kNumDifferences> diffs{};
  std::array<double, kNumSimilarities> sims{};
  PairIdentity id;
  int label = 0;  // 1 = positive (same subject, synchronous), 0 = negative

  std::array<double, kNumFeatures> values() const {
    std::array<double, kNumFeatures> v{};
    std::copy(diffs.begin(), diffs.end(), v.begin());
    std::copy(sims.begin(), sims.end(), v.begin() + kNumDifferences);
    return v;
  }
};

// `a` is the token-device segment. Both must be standardized and of equal
// length/rate. Constituent errors propagate.
inline PairFeatureVector ExtractPairFeatures(const Segment& a, const Segment& b,
                                             const FeatureConfig& cfg = {}) {
  Require(a.samples.size() == b.samples.size() && a.rate == b.rate, ErrorCode::kInvalidParams,
          "pair segments must share length and rate");
  const auto beats_a = quality::DetectBeats(a.samples, a.rate, cfg.beats);
  const auto beats_b = quality::DetectBeats(b.samples, b.rate, cfg.beats);
  const auto cross = spectral::WelchCross(a.samples, b.samples, a.rate, cfg.welch);
  spectral::Spectrum spec_a{cross.freqs, cross.pxx, cfg.welch, a.rate};
  spectral::Spectrum spec_b{cross.freqs, cross.pyy, cfg.welch, b.rate};

  PairFeatureVector out;
  out.id = {a.subject_id, a.device_id, a.start_ms, b.subject_id, b.device_id, b.start_ms};
  out.diffs = PairDifferences(ComputeDescriptors(a.samples, a.rate, beats_a, spec_a, cfg),
                              ComputeDescriptors(b.samples, b.rate, beats_b, spec_b, cfg));

  const XcorrPeak xc = XcorrPeakSearch(a.samples, b.samples, a.rate, cfg.max_lag_s);
  const LinearSimilarity lin = LinearSimilarities(a.samples, b.samples);
  out.sims = {spectral::BandCoherence(cross, cfg.band_lo_hz, cfg.band_hi_hz),
              xc.value,
              xc.lag_s,
              DtwDistance(a.samples, b.samples),
              lin.pearson,
              lin.cosine,
              PsdCosine(spec_a, spec_b, cfg.band_lo_hz, cfg.band_hi_hz)};
  for (double v : out.values()) {
    Require(std::isfinite(v), ErrorCode::kNonFiniteFeature, "pair produced a non-finite feature");
  }
  return out;
}

}  // namespace ppgtrans::features

#endif  // PPGTRANS_FEATURES_HPP_
