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

// Seeded synthetic multi-device PPG: one AR(1) cardiac driver per subject,
// two-Gaussian beats rendered per site with transit delay, morphology
// perturbation, noise and baseline wander, plus motion-artifact injection.

#ifndef PPGTRANS_SYNTH_HPP_
#define PPGTRANS_SYNTH_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ppgtrans/butterworth.hpp"
#include "ppgtrans/corpus.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/stats.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans::synth {

inline constexpr double kMinDurationS = 30.0;
// Generated RR intervals keep a margin inside the physiological [0.6, 1.25] s
// range so that beat-detection jitter does not push them out.
inline constexpr double kMinRrS = 0.62;
inline constexpr double kMaxRrS = 1.2;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, stream id).
inline std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t id) {
  return std::mt19937_64(SplitMix64(SplitMix64(seed) ^ SplitMix64(id + 0x51ed270b)));
}

struct Morphology {
  double systolic_time_s = 0.16;
  double systolic_width_s = 0.09;
  double dicrotic_delay_s = 0.27;
  double dicrotic_width_s = 0.12;
  double dicrotic_ratio = 0.45;
};

struct SubjectParams {
  double base_hr_bpm = 70.0;
  double hrv_std_s = 0.03;
  double rr_autocorrelation = 0.7;
  // Slow heart-rate modulation, peak deviation in bpm.
  double hr_drift_bpm = 4.0;
  Morphology morphology;
  std::uint64_t rng_seed = 1;

  void Validate() const {
    Require(base_hr_bpm >= 50 && base_hr_bpm <= 95, ErrorCode::kInvalidParams,
            "base_hr_bpm must lie in [50, 95]");
    Require(hrv_std_s >= 0, ErrorCode::kInvalidParams, "hrv_std_s must be >= 0");
    Require(rr_autocorrelation >= 0 && rr_autocorrelation < 1, ErrorCode::kInvalidParams,
            "rr_autocorrelation must lie in [0, 1)");
    Require(hr_drift_bpm >= 0, ErrorCode::kInvalidParams, "hr_drift_bpm must be >= 0");
    Require(morphology.systolic_width_s > 0 && morphology.dicrotic_width_s > 0,
            ErrorCode::kInvalidParams, "beat widths must be positive");
  }
};

struct SiteParams {
  std::string device_id = "band";
  DeviceKind device_kind = DeviceKind::kWearable;
  double rate_hz = 100.0;
  int channels = 1;
  double transit_delay_s = 0.2;
  double amplitude = 1.0;
  // Relative per-site perturbation of beat widths and dicrotic ratio.
  double morphology_jitter = 0.1;
  double noise_std = 0.1;
  // In-band colored noise (AR(1) low-passed), stationary std.
  double colored_noise_std = 0.2;
  double wander_amplitude = 0.3;
  double wander_hz = 0.2;
  // Extra noise multiplier per additional channel.
  double channel_noise_step = 1.0;
  bool invert = false;
  double timestamp_jitter_ms = 0.0;

  void Validate() const {
    Require(transit_delay_s >= 0, ErrorCode::kInvalidParams, "transit_delay_s must be >= 0");
    Require(noise_std >= 0 && colored_noise_std >= 0 && wander_amplitude >= 0,
            ErrorCode::kInvalidParams, "noise levels must be >= 0");
    Require(rate_hz >= 10 && channels >= 1, ErrorCode::kInvalidParams,
            "site needs rate >= 10 Hz and at least one channel");
    Require(timestamp_jitter_ms >= 0 && timestamp_jitter_ms < 250.0 / rate_hz,
            ErrorCode::kInvalidParams, "timestamp jitter must stay below a quarter sample period");
  }
};

// Site catalogue: the token first, then wearables in a fixed order.
inline std::vector<SiteParams> DefaultSites(int n_devices) {
  Require(n_devices >= 2 && n_devices <= 5, ErrorCode::kInvalidParams,
          "device count must lie in [2, 5]");
  SiteParams phone;
  phone.device_id = "phone";
  phone.device_kind = DeviceKind::kToken;
  phone.rate_hz = 30.0;
  phone.transit_delay_s = 0.15;
  phone.noise_std = 0.1;
  phone.colored_noise_std = 0.15;
  phone.invert = true;
  phone.timestamp_jitter_ms = 2.0;

  SiteParams band;
  band.device_id = "band";
  band.rate_hz = 100.0;
  band.channels = 2;
  band.transit_delay_s = 0.20;
  band.noise_std = 0.08;
  band.colored_noise_std = 0.1;
  band.channel_noise_step = 1.5;

  SiteParams ring = band;
  ring.device_id = "ring";
  ring.rate_hz = 50.0;
  ring.channels = 1;
  ring.transit_delay_s = 0.22;

  SiteParams glasses = band;
  glasses.device_id = "glasses";
  glasses.rate_hz = 25.0;
  glasses.channels = 1;
  glasses.transit_delay_s = 0.08;
  glasses.colored_noise_std = 0.2;

  SiteParams earphone = band;
  earphone.device_id = "earphone";
  earphone.rate_hz = 50.0;
  earphone.channels = 1;
  earphone.transit_delay_s = 0.10;

  std::vector<SiteParams> all{phone, band, ring, glasses, earphone};
  all.resize(static_cast<std::size_t>(n_devices));
  return all;
}

// Onset times of the shared cardiac driver over [t_begin, t_end).
inline std::vector<double> BeatTimes(const SubjectParams& p, double t_begin, double t_end) {
  std::mt19937_64 rng = Stream(p.rng_seed, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double ph1 = 2 * std::numbers::pi * unif(rng);
  const double ph2 = 2 * std::numbers::pi * unif(rng);
  const double per1 = 70.0 + 40.0 * unif(rng);
  const double per2 = 200.0 + 100.0 * unif(rng);
  auto hr = [&](double t) {
    return std::clamp(p.base_hr_bpm + p.hr_drift_bpm * (0.6 * std::sin(2 * std::numbers::pi * t / per1 + ph1) +
                                                        0.4 * std::sin(2 * std::numbers::pi * t / per2 + ph2)),
                      52.0, 96.0);
  };
  const double rho = p.rr_autocorrelation;
  const double innov = p.hrv_std_s * std::sqrt(1.0 - rho * rho);
  double e = p.hrv_std_s * gauss(rng);
  std::vector<double> beats;
  double t = t_begin - 60.0 / p.base_hr_bpm * unif(rng);
  while (t < t_end) {
    beats.push_back(t);
    e = rho * e + innov * gauss(rng);
    t += std::clamp(60.0 / hr(t) + e, kMinRrS, kMaxRrS);
  }
  return beats;
}

namespace detail {

inline Morphology PerturbMorphology(const Morphology& m, double jitter, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto scale = [&] { return std::clamp(1.0 + jitter * gauss(rng), 0.5, 1.5); };
  Morphology out = m;
  out.systolic_width_s *= scale();
  out.dicrotic_width_s *= scale();
  out.dicrotic_ratio *= scale();
  out.dicrotic_delay_s *= scale();
  return out;
}

inline double Gauss(double x, double w) { return std::exp(-0.5 * (x / w) * (x / w)); }

}  // namespace detail

// One trace per site, all driven by the same beat sequence. Traces are in
// corrected polarity; `polarity_inverted` marks sites whose raw export is
// sign-flipped.
inline std::vector<PpgTrace> GenSubject(const SubjectParams& params, const std::vector<SiteParams>& sites,
                                        double duration_s, const std::string& subject_id,
                                        const std::string& tag = "sitting", double t0_s = 0.0) {
  params.Validate();
  Require(duration_s >= kMinDurationS, ErrorCode::kInvalidParams, "duration must be >= 30 s");
  Require(!sites.empty(), ErrorCode::kInvalidParams, "at least one site is required");
  for (const auto& s : sites) s.Validate();

  const std::vector<double> beats = BeatTimes(params, t0_s - 2.0, t0_s + duration_s + 1.0);
  std::vector<PpgTrace> out;
  for (std::size_t si = 0; si < sites.size(); ++si) {
    const SiteParams& site = sites[si];
    std::mt19937_64 rng = Stream(params.rng_seed, 100 + si);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Morphology m = detail::PerturbMorphology(params.morphology, site.morphology_jitter, rng);

    PpgTrace tr;
    tr.subject_id = subject_id;
    tr.device_id = site.device_id;
    tr.device_kind = site.device_kind;
    tr.tag = tag;
    tr.nominal_rate = site.rate_hz;
    tr.polarity_inverted = site.invert;
    const auto n = static_cast<std::size_t>(std::floor(duration_s * site.rate_hz)) + 1;
    tr.timestamps_ms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double jitter = i == 0 ? 0.0 : site.timestamp_jitter_ms * unif(rng);
      tr.timestamps_ms[i] = std::round((t0_s * 1000.0 + static_cast<double>(i) * 1000.0 / site.rate_hz + jitter) * 10.0) / 10.0;
    }

    std::vector<double> clean(n, 0.0);
    const double reach = m.systolic_time_s + m.dicrotic_delay_s + 4 * std::max(m.systolic_width_s, m.dicrotic_width_s);
    for (double b : beats) {
      const double onset = b + site.transit_delay_s;
      const auto first = static_cast<std::ptrdiff_t>(std::ceil((onset - t0_s - 0.5) * site.rate_hz));
      const auto last = static_cast<std::ptrdiff_t>(std::floor((onset - t0_s + reach) * site.rate_hz));
      for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, first);
           i <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, last); ++i) {
        const double t = tr.timestamps_ms[static_cast<std::size_t>(i)] / 1000.0 - onset;
        clean[static_cast<std::size_t>(i)] +=
            site.amplitude * (detail::Gauss(t - m.systolic_time_s, m.systolic_width_s) +
                              m.dicrotic_ratio * detail::Gauss(t - m.systolic_time_s - m.dicrotic_delay_s,
                                                               m.dicrotic_width_s));
      }
    }

    const double wander_phase = std::numbers::pi * (1.0 + unif(rng));
    const double a = std::exp(-2.0 * std::numbers::pi * 1.2 / site.rate_hz);
    const double colored_gain = std::sqrt(1.0 - a * a);
    for (int c = 0; c < site.channels; ++c) {
      const double scale = std::pow(site.channel_noise_step, c);
      std::vector<double> ch(n);
      double colored = site.colored_noise_std * gauss(rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = tr.timestamps_ms[i] / 1000.0;
        colored = a * colored + colored_gain * site.colored_noise_std * gauss(rng);
        ch[i] = clean[i] + scale * (site.noise_std * gauss(rng) + colored) +
                site.wander_amplitude * std::sin(2 * std::numbers::pi * site.wander_hz * t + wander_phase) +
                1.0;
      }
      tr.channels.push_back(std::move(ch));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

struct CorpusSpec {
  int n_subjects = 20;
  int n_devices = 2;
  double duration_s = 600.0;
  std::uint64_t master_seed = 7;
  std::vector<std::string> tags{"sitting"};
  // Noise multiplier applied to sessions after the first tag.
  double later_tag_noise_scale = 1.3;
  std::vector<SiteParams> sites;  // empty: DefaultSites(n_devices)

  void Validate() const {
    Require(n_subjects >= 2, ErrorCode::kInvalidParams, "a corpus needs at least 2 subjects");
    Require(!tags.empty(), ErrorCode::kInvalidParams, "at least one session tag is required");
    Require(duration_s >= kMinDurationS, ErrorCode::kInvalidParams, "duration must be >= 30 s");
  }
};

inline std::string SubjectId(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%02d", i + 1);
  return buf;
}

// Stratified base heart rates over [50, 95] with pairwise gap >= 1 bpm while
// n <= 45, in seeded random order.
inline std::vector<double> StratifiedHeartRates(int n, std::uint64_t seed) {
  std::mt19937_64 rng = Stream(seed, 7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double width = 45.0 / n;
  const double half_jitter = std::max(0.0, (width - 1.0) / 2.0);
  std::vector<double> hr(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) hr[static_cast<std::size_t>(i)] = 50.0 + (i + 0.5) * width + half_jitter * unif(rng);
  std::shuffle(hr.begin(), hr.end(), rng);
  return hr;
}

inline SubjectParams DrawSubject(double base_hr, std::uint64_t seed) {
  std::mt19937_64 rng = Stream(seed, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SubjectParams p;
  p.base_hr_bpm = base_hr;
  p.rng_seed = seed;
  p.hrv_std_s = 0.02 + 0.02 * u(rng);
  p.morphology.systolic_time_s = 0.13 + 0.06 * u(rng);
  p.morphology.systolic_width_s = 0.07 + 0.04 * u(rng);
  p.morphology.dicrotic_delay_s = 0.22 + 0.10 * u(rng);
  p.morphology.dicrotic_width_s = 0.09 + 0.05 * u(rng);
  p.morphology.dicrotic_ratio = 0.3 + 0.3 * u(rng);
  return p;
}

inline std::uint64_t SubjectSeed(std::uint64_t master, int i) {
  return SplitMix64(master * 1000003ULL + static_cast<std::uint64_t>(i));
}

inline std::vector<SubjectParams> CorpusSubjects(const CorpusSpec& spec) {
  const auto hrs = StratifiedHeartRates(spec.n_subjects, spec.master_seed);
  std::vector<SubjectParams> out;
  for (int i = 0; i < spec.n_subjects; ++i) {
    out.push_back(DrawSubject(hrs[static_cast<std::size_t>(i)], SubjectSeed(spec.master_seed, i)));
  }
  return out;
}

// Raw traces: subjects x tags x devices. Sessions of different tags are
// separated in time by one minute.
inline std::vector<PpgTrace> GenCorpusTraces(const CorpusSpec& spec) {
  spec.Validate();
  const auto base_sites = spec.sites.empty() ? DefaultSites(spec.n_devices) : spec.sites;
  const auto subjects = CorpusSubjects(spec);
  std::vector<PpgTrace> out;
  for (int i = 0; i < spec.n_subjects; ++i) {
    for (std::size_t k = 0; k < spec.tags.size(); ++k) {
      auto sites = base_sites;
      if (k > 0) {
        for (auto& s : sites) {
          s.noise_std *= spec.later_tag_noise_scale;
          s.colored_noise_std *= spec.later_tag_noise_scale;
        }
      }
      SubjectParams p = subjects[static_cast<std::size_t>(i)];
      const double t0 = static_cast<double>(k) * (spec.duration_s + 60.0);
      auto traces = GenSubject(p, sites, spec.duration_s, SubjectId(i), spec.tags[k], t0);
      for (auto& t : traces) out.push_back(std::move(t));
    }
  }
  return out;
}

inline Corpus GenCorpus(const CorpusSpec& spec, const PreprocessConfig& pre = {},
                        const quality::QualityConfig& qc = {}) {
  return PreprocessCorpus(GenCorpusTraces(spec), pre, qc);
}

enum class ArtifactKind { kBurst, kDropout, kWander };

inline ArtifactKind ParseArtifactKind(std::string_view s) {
  if (s == "burst") return ArtifactKind::kBurst;
  if (s == "dropout") return ArtifactKind::kDropout;
  if (s == "wander") return ArtifactKind::kWander;
  throw Error(ErrorCode::kInvalidParams, "artifact kind must be burst, dropout or wander");
}

inline constexpr double kBurstLoHz = 0.3;
inline constexpr double kBurstHiHz = 5.0;
inline constexpr double kArtifactWanderHz = 0.3;

// Corrupts [t_start_s, t_start_s + dur_s) relative to the trace start.
// `magnitude` is in units of the channel's standard deviation for burst and
// wander; for dropout the window collapses to (1 - magnitude) of its
// deviation from the window mean. Samples outside the window are untouched.
inline PpgTrace InjectArtifact(const PpgTrace& trace, ArtifactKind kind, double t_start_s, double dur_s,
                               double magnitude, std::uint64_t seed = 1) {
  Require(!trace.timestamps_ms.empty(), ErrorCode::kEmptyInput, "empty trace");
  Require(dur_s > 0 && t_start_s >= 0 && t_start_s + dur_s <= trace.duration_s() + 1e-9,
          ErrorCode::kWindowOutOfRange, "artifact window lies outside the trace");
  Require(magnitude >= 0, ErrorCode::kInvalidParams, "magnitude must be >= 0");
  PpgTrace out = trace;
  if (magnitude == 0) return out;
  const double t0 = trace.timestamps_ms.front() + t_start_s * 1000.0;
  const double t1 = t0 + dur_s * 1000.0;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.timestamps_ms[i] >= t0 && trace.timestamps_ms[i] < t1) idx.push_back(i);
  }
  if (idx.empty()) return out;
  std::mt19937_64 rng = Stream(seed, 11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rate = trace.nominal_rate;
  for (auto& ch : out.channels) {
    const double sd = stats::StdDev(ch);
    if (kind == ArtifactKind::kBurst) {
      std::vector<double> noise(idx.size() + 2 * static_cast<std::size_t>(rate));
      for (double& v : noise) v = gauss(rng);
      const auto sos = filter::DesignBandpass(kBurstLoHz, std::min(kBurstHiHz, 0.45 * rate), rate, 2);
      std::vector<std::array<double, 2>> state(sos.sections().size(), {0.0, 0.0});
      sos.Apply(noise, state);
      std::vector<double> core(noise.begin() + static_cast<std::ptrdiff_t>(rate),
                               noise.begin() + static_cast<std::ptrdiff_t>(rate) + static_cast<std::ptrdiff_t>(idx.size()));
      const double nsd = stats::StdDev(core);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        ch[idx[k]] += nsd > 0 ? magnitude * sd * core[k] / nsd : 0.0;
      }
    } else if (kind == ArtifactKind::kDropout) {
      double mean = 0.0;
      for (std::size_t i : idx) mean += ch[i];
      mean /= static_cast<double>(idx.size());
      const double keep = std::max(0.0, 1.0 - magnitude);
      for (std::size_t i : idx) ch[i] = mean + keep * (ch[i] - mean);
    } else {
      for (std::size_t i : idx) {
        const double t = (trace.timestamps_ms[i] - t0) / 1000.0;
        ch[i] += magnitude * sd * std::sin(2 * std::numbers::pi * kArtifactWanderHz * t);
      }
    }
  }
  return out;
}

}  // namespace ppgtrans::synth

#endif  // PPGTRANS_SYNTH_HPP_
