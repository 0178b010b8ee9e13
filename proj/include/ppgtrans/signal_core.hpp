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

// Trace ingestion and the uniform-sampling / windowing half of the signal
// normalization chain. Filtering lives in butterworth.hpp.

#ifndef PPGTRANS_SIGNAL_CORE_HPP_
#define PPGTRANS_SIGNAL_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppgtrans/error.hpp"
#include "ppgtrans/savgol.hpp"
#include "ppgtrans/stats.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans::signal {

struct TraceRow {
  double t_ms = 0.0;
  std::vector<double> values;
};

struct TraceMeta {
  std::string subject_id;
  std::string device_id;
  DeviceKind device_kind = DeviceKind::kWearable;
  bool invert = false;
  std::string tag = "sitting";
  // 0 means "estimate from the timestamps".
  double nominal_rate = 0.0;
};

inline PpgTrace IngestTrace(std::span<const TraceRow> rows, const TraceMeta& meta) {
  Require(rows.size() >= 2, ErrorCode::kEmptyInput, "a trace needs at least two rows");
  const std::size_t n_channels = rows.front().values.size();
  Require(n_channels >= 1, ErrorCode::kEmptyInput, "a trace needs at least one channel");

  PpgTrace trace;
  trace.subject_id = meta.subject_id;
  trace.device_id = meta.device_id;
  trace.device_kind = meta.device_kind;
  trace.tag = meta.tag;
  trace.channels.assign(n_channels, {});
  for (auto& ch : trace.channels) ch.reserve(rows.size());
  trace.timestamps_ms.reserve(rows.size());

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TraceRow& row = rows[i];
    Require(row.values.size() == n_channels, ErrorCode::kChannelLengthMismatch,
            "row " + std::to_string(i) + " has " + std::to_string(row.values.size()) +
                " channels, expected " + std::to_string(n_channels));
    if (!trace.timestamps_ms.empty()) {
      const double last = trace.timestamps_ms.back();
      if (row.t_ms == last) {
        const TraceRow& prev = rows[i - 1];
        Require(prev.values == row.values, ErrorCode::kNonMonotonicTimestamps,
                "conflicting samples at t=" + std::to_string(row.t_ms));
        continue;
      }
      Require(row.t_ms > last, ErrorCode::kNonMonotonicTimestamps,
              "timestamp " + std::to_string(row.t_ms) + " follows " + std::to_string(last));
    }
    trace.timestamps_ms.push_back(row.t_ms);
    for (std::size_t c = 0; c < n_channels; ++c) {
      trace.channels[c].push_back(meta.invert ? -row.values[c] : row.values[c]);
    }
  }
  trace.polarity_inverted = meta.invert;
  if (meta.nominal_rate > 0) {
    trace.nominal_rate = meta.nominal_rate;
  } else if (trace.size() >= 2 && trace.duration_s() > 0) {
    trace.nominal_rate = static_cast<double>(trace.size() - 1) / trace.duration_s();
  } else {
    trace.nominal_rate = 1.0;
  }
  return trace;
}

// Number of grid points at `rate` covering [t0, t_end].
inline std::size_t UniformLength(double span_ms, double rate) {
  return static_cast<std::size_t>(std::floor(span_ms * rate / 1000.0 + 1e-9)) + 1;
}

// Linear interpolation of every channel onto a uniform grid starting at t0.
inline PpgTrace ResampleUniform(const PpgTrace& trace, double target_rate) {
  Require(target_rate > 0, ErrorCode::kInvalidParams, "target rate must be positive");
  Require(trace.size() >= 2, ErrorCode::kDegenerateSpan, "need two samples to resample");
  const double t0 = trace.timestamps_ms.front();
  const double t_end = trace.timestamps_ms.back();
  Require(t_end > t0, ErrorCode::kDegenerateSpan, "trace spans zero time");

  const std::size_t n_out = UniformLength(t_end - t0, target_rate);
  PpgTrace out = trace;
  out.nominal_rate = target_rate;
  out.timestamps_ms.resize(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    out.timestamps_ms[k] = t0 + static_cast<double>(k) * 1000.0 / target_rate;
  }
  const auto& ts = trace.timestamps_ms;
  for (std::size_t c = 0; c < trace.channels.size(); ++c) {
    const auto& src = trace.channels[c];
    auto& dst = out.channels[c];
    dst.resize(n_out);
    std::size_t j = 0;
    for (std::size_t k = 0; k < n_out; ++k) {
      const double t = out.timestamps_ms[k];
      while (j + 2 < ts.size() && ts[j + 1] <= t) ++j;
      const double span = ts[j + 1] - ts[j];
      const double w = std::clamp((t - ts[j]) / span, 0.0, 1.0);
      dst[k] = src[j] + w * (src[j + 1] - src[j]);
    }
  }
  return out;
}

// Centered sliding-mean baseline removal (window truncated at the edges),
// followed by removal of the residual mean.
inline std::vector<double> DetrendDc(std::span<const double> x, double rate, double window_s) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(window_s * rate)) / 2);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = x[i] - (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  const double m = stats::Mean(out);
  for (double& v : out) v -= m;
  return out;
}

inline Segment DetrendDc(const Segment& segment, double window_s) {
  Segment out = segment;
  out.samples = DetrendDc(segment.samples, segment.rate, window_s);
  return out;
}

inline std::size_t WindowCount(std::size_t n, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0 || n < window) return 0;
  return (n - window) / hop + 1;
}

// Cuts a uniformly sampled single-channel source into fixed windows.
inline std::vector<Segment> SegmentWindows(const Segment& source, double window_s, double hop_s) {
  Require(hop_s > 0 && window_s > 0, ErrorCode::kInvalidParams, "window and hop must be positive");
  const auto w = static_cast<std::size_t>(std::llround(window_s * source.rate));
  const auto h = static_cast<std::size_t>(std::llround(hop_s * source.rate));
  Require(source.samples.size() >= w && w > 0, ErrorCode::kTraceTooShort,
          "trace shorter than one " + std::to_string(window_s) + " s window");
  const std::size_t count = WindowCount(source.samples.size(), w, h);
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Segment seg;
    seg.subject_id = source.subject_id;
    seg.device_id = source.device_id;
    seg.device_kind = source.device_kind;
    seg.tag = source.tag;
    seg.rate = source.rate;
    seg.duration_s = window_s;
    seg.start_ms = source.start_ms + static_cast<double>(k * h) * 1000.0 / source.rate;
    seg.samples.assign(source.samples.begin() + static_cast<std::ptrdiff_t>(k * h),
                       source.samples.begin() + static_cast<std::ptrdiff_t>(k * h + w));
    seg.stage = source.stage;
    out.push_back(std::move(seg));
  }
  return out;
}

// Returns false when the signal is flat (std below a relative epsilon).
inline bool ZScoreInPlace(std::vector<double>& x) {
  const double m = stats::Mean(x);
  const double sd = stats::StdDev(x);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(m))) || !std::isfinite(sd)) return false;
  for (double& v : x) v = (v - m) / sd;
  return true;
}

// z-standardize, Savitzky-Golay smooth, then re-standardize.
inline Segment StandardizeSmooth(const Segment& segment, int savgol_order, int savgol_window) {
  Segment out = segment;
  Require(ZScoreInPlace(out.samples), ErrorCode::kFlatSignal,
          "segment of " + segment.subject_id + "/" + segment.device_id + " is flat");
  const filter::SavitzkyGolay sg(savgol_window, savgol_order);
  out.samples = sg.Apply(out.samples);
  Require(ZScoreInPlace(out.samples), ErrorCode::kFlatSignal, "segment flat after smoothing");
  out.stage = SegmentStage::kStandardized;
  return out;
}

}  // namespace ppgtrans::signal

#endif  // PPGTRANS_SIGNAL_CORE_HPP_
