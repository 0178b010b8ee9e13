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

// End-to-end per-device preprocessing: resample, bandpass, 12 s quality
// blocks (channel selection, detrending, triage, mitigation), and cutting of
// standardized feature windows from the result.

#ifndef PPGTRANS_CORPUS_HPP_
#define PPGTRANS_CORPUS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ppgtrans/butterworth.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/quality.hpp"
#include "ppgtrans/signal_core.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans {

// One device's recording after the MA stage. `signal` is the concatenation of
// the processed quality blocks on a uniform grid starting at `t0_ms`.
struct Recording {
  std::string subject_id;
  std::string device_id;
  DeviceKind device_kind = DeviceKind::kWearable;
  std::string tag = "sitting";
  double t0_ms = 0.0;
  double rate = 60.0;
  std::size_t block_samples = 720;
  std::vector<double> signal;
  std::vector<quality::QualityReport> blocks;

  double end_ms() const { return t0_ms + static_cast<double>(signal.size()) * 1000.0 / rate; }

  bool BlockUsable(std::size_t b) const {
    return b < blocks.size() && blocks[b].cls != quality::ArtifactClass::kHeavy;
  }

  // Sample index of `t_ms`, or nullopt when a window of `n` samples starting
  // there would leave the recording.
  std::optional<std::size_t> IndexOf(double t_ms, std::size_t n) const {
    const double pos = (t_ms - t0_ms) * rate / 1000.0;
    const auto idx = static_cast<long long>(std::llround(pos));
    if (idx < 0 || static_cast<std::size_t>(idx) + n > signal.size()) return std::nullopt;
    return static_cast<std::size_t>(idx);
  }

  bool RangeUsable(std::size_t first, std::size_t n) const {
    if (n == 0) return false;
    const std::size_t b0 = first / block_samples;
    const std::size_t b1 = std::min(blocks.size() - 1, (first + n - 1) / block_samples);
    for (std::size_t b = b0; b <= b1; ++b) {
      if (!BlockUsable(b)) return false;
    }
    return true;
  }

  // MA-checked (not yet standardized) window, or nullopt when it is outside
  // the recording or touches a heavily corrupted block.
  std::optional<Segment> RawWindow(double start_ms, double window_s) const {
    const auto n = static_cast<std::size_t>(std::llround(window_s * rate));
    const auto idx = IndexOf(start_ms, n);
    if (!idx || !RangeUsable(*idx, n)) return std::nullopt;
    Segment seg;
    seg.subject_id = subject_id;
    seg.device_id = device_id;
    seg.device_kind = device_kind;
    seg.tag = tag;
    seg.start_ms = t0_ms + static_cast<double>(*idx) * 1000.0 / rate;
    seg.duration_s = window_s;
    seg.rate = rate;
    seg.samples.assign(signal.begin() + static_cast<std::ptrdiff_t>(*idx),
                       signal.begin() + static_cast<std::ptrdiff_t>(*idx + n));
    seg.stage = SegmentStage::kMaChecked;
    return seg;
  }

  // Standardized, smoothed feature window; nullopt if unavailable or flat.
  std::optional<Segment> Window(double start_ms, double window_s,
                                const PreprocessConfig& cfg) const {
    auto raw = RawWindow(start_ms, window_s);
    if (!raw) return std::nullopt;
    try {
      return signal::StandardizeSmooth(*raw, cfg.savgol_order, cfg.savgol_window_samples);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFlatSignal) return std::nullopt;
      throw;
    }
  }

  // Window starts on the epoch-anchored grid {k * hop} that fit inside the
  // recording and avoid heavy blocks.
  std::vector<double> WindowStarts(double window_s, double hop_s) const {
    std::vector<double> starts;
    const double hop_ms = hop_s * 1000.0;
    const auto n = static_cast<std::size_t>(std::llround(window_s * rate));
    for (double t = std::ceil(t0_ms / hop_ms - 1e-9) * hop_ms;
         t + window_s * 1000.0 <= end_ms() + 1e-6; t += hop_ms) {
      const auto idx = IndexOf(t, n);
      if (idx && RangeUsable(*idx, n)) starts.push_back(t);
    }
    return starts;
  }

  std::size_t CountClass(quality::ArtifactClass c) const {
    return static_cast<std::size_t>(std::count_if(
        blocks.begin(), blocks.end(), [&](const auto& b) { return b.cls == c; }));
  }
};

namespace detail {

struct BlockResult {
  std::vector<double> samples;
  quality::QualityReport report;
};

inline BlockResult ProcessBlock(const PpgTrace& filtered, std::size_t first, std::size_t n,
                                const PreprocessConfig& pre, const quality::QualityConfig& qc) {
  std::vector<Segment> channels;
  for (const auto& ch : filtered.channels) {
    Segment s;
    s.rate = filtered.nominal_rate;
    s.samples = signal::DetrendDc(
        std::span<const double>(ch).subspan(first, n), filtered.nominal_rate, pre.detrend_window_s);
    channels.push_back(std::move(s));
  }
  BlockResult out;
  out.report.start_ms = filtered.timestamps_ms[first];
  try {
    quality::ChannelChoice choice = quality::SelectBestChannel(channels, qc);
    out.report.channel = choice.index;
    out.report.metrics = choice.metrics;
    out.report.score = choice.score;
    std::optional<quality::BeatSet> beats;
    try {
      beats = quality::DetectBeats(choice.segment.samples, choice.segment.rate, qc);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoBeats) throw;
    }
    out.report.cls = quality::ClassifyArtifact(beats, choice.metrics, qc);
    out.samples = std::move(choice.segment.samples);
    if (out.report.cls == quality::ArtifactClass::kWeak) {
      out.samples = quality::MitigateWeak(out.samples, filtered.nominal_rate, *beats,
                                          pre.detrend_window_s);
    }
    if (!signal::ZScoreInPlace(out.samples)) out.report.cls = quality::ArtifactClass::kHeavy;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllChannelsInvalid) throw;
    out.report.cls = quality::ArtifactClass::kHeavy;
    out.samples.assign(n, 0.0);
  }
  return out;
}

}  // namespace detail

// Resample, bandpass and triage a raw trace. Blocks are `window_ma_s` long;
// a trailing partial block is judged on the last full-length window and only
// its new samples are appended.
inline Recording PreprocessTrace(const PpgTrace& trace, const PreprocessConfig& pre = {},
                                 const quality::QualityConfig& qc = {}) {
  pre.Validate();
  const PpgTrace uniform = signal::ResampleUniform(trace, pre.target_rate);
  const PpgTrace filtered =
      filter::Bandpass(uniform, pre.band_lo_hz, pre.band_hi_hz, pre.filter_order);

  Recording rec;
  rec.subject_id = trace.subject_id;
  rec.device_id = trace.device_id;
  rec.device_kind = trace.device_kind;
  rec.tag = trace.tag;
  rec.t0_ms = uniform.timestamps_ms.front();
  rec.rate = pre.target_rate;
  rec.block_samples = static_cast<std::size_t>(std::llround(pre.window_ma_s * pre.target_rate));
  const std::size_t n = uniform.size();
  const std::size_t w = rec.block_samples;
  Require(n >= w, ErrorCode::kTraceTooShort,
          trace.subject_id + "/" + trace.device_id + " is shorter than one quality block");

  const std::size_t full = n / w;
  for (std::size_t b = 0; b < full; ++b) {
    auto block = detail::ProcessBlock(filtered, b * w, w, pre, qc);
    rec.signal.insert(rec.signal.end(), block.samples.begin(), block.samples.end());
    rec.blocks.push_back(block.report);
  }
  const std::size_t tail = n - full * w;
  if (tail > 0) {
    auto block = detail::ProcessBlock(filtered, n - w, w, pre, qc);
    rec.signal.insert(rec.signal.end(), block.samples.end() - static_cast<std::ptrdiff_t>(tail),
                      block.samples.end());
    block.report.start_ms = filtered.timestamps_ms[full * w];
    rec.blocks.push_back(block.report);
  }
  return rec;
}

struct SegmentRef {
  std::string subject_id;
  std::string device_id;
  double start_ms = 0.0;

  auto operator<=>(const SegmentRef&) const = default;
};

// All preprocessed recordings of a study.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Recording> recordings) : recordings_(std::move(recordings)) {
    std::sort(recordings_.begin(), recordings_.end(), [](const auto& a, const auto& b) {
      return std::tie(a.subject_id, a.device_id, a.t0_ms) <
             std::tie(b.subject_id, b.device_id, b.t0_ms);
    });
  }

  void Add(Recording r) {
    recordings_.push_back(std::move(r));
    *this = Corpus(std::move(recordings_));
  }

  const std::vector<Recording>& recordings() const { return recordings_; }

  std::vector<std::string> subjects() const {
    std::set<std::string> s;
    for (const auto& r : recordings_) s.insert(r.subject_id);
    return {s.begin(), s.end()};
  }

  std::vector<std::string> devices(DeviceKind kind) const {
    std::set<std::string> s;
    for (const auto& r : recordings_) {
      if (r.device_kind == kind) s.insert(r.device_id);
    }
    return {s.begin(), s.end()};
  }

  std::optional<DeviceKind> KindOf(const std::string& device_id) const {
    for (const auto& r : recordings_) {
      if (r.device_id == device_id) return r.device_kind;
    }
    return std::nullopt;
  }

  std::vector<const Recording*> Find(const std::string& subject, const std::string& device) const {
    std::vector<const Recording*> out;
    for (const auto& r : recordings_) {
      if (r.subject_id == subject && r.device_id == device) out.push_back(&r);
    }
    return out;
  }

  // Recording of (subject, device) that fully contains the window.
  const Recording* Containing(const SegmentRef& ref, double window_s) const {
    for (const auto& r : recordings_) {
      if (r.subject_id != ref.subject_id || r.device_id != ref.device_id) continue;
      if (ref.start_ms >= r.t0_ms - 1e-6 && ref.start_ms + window_s * 1000.0 <= r.end_ms() + 1e-6) {
        return &r;
      }
    }
    return nullptr;
  }

  std::optional<Segment> Window(const SegmentRef& ref, double window_s,
                                const PreprocessConfig& cfg) const {
    const Recording* r = Containing(ref, window_s);
    if (r == nullptr) return std::nullopt;
    return r->Window(ref.start_ms, window_s, cfg);
  }

 private:
  std::vector<Recording> recordings_;
};

inline Corpus PreprocessCorpus(const std::vector<PpgTrace>& traces, const PreprocessConfig& pre = {},
                               const quality::QualityConfig& qc = {}) {
  std::vector<Recording> recs;
  recs.reserve(traces.size());
  for (const auto& t : traces) recs.push_back(PreprocessTrace(t, pre, qc));
  return Corpus(std::move(recs));
}

}  // namespace ppgtrans

#endif  // PPGTRANS_CORPUS_HPP_
