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

#ifndef PPGTRANS_TYPES_HPP_
#define PPGTRANS_TYPES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ppgtrans/error.hpp"

namespace ppgtrans {

enum class DeviceKind { kToken, kWearable };

constexpr std::string_view ToString(DeviceKind kind) {
  return kind == DeviceKind::kToken ? "token" : "wearable";
}

inline DeviceKind ParseDeviceKind(std::string_view text) {
  if (text == "token") return DeviceKind::kToken;
  if (text == "wearable") return DeviceKind::kWearable;
  throw Error(ErrorCode::kInvalidConfig,
              "device_kind must be 'token' or 'wearable', got '" + std::string(text) + "'");
}

// A timestamped optical pulse waveform from one device. `channels[c][i]` is
// sampled at `timestamps_ms[i]`.
struct PpgTrace {
  std::string subject_id;
  std::string device_id;
  DeviceKind device_kind = DeviceKind::kWearable;
  // Recording condition, e.g. posture. Used only by split filters.
  std::string tag = "sitting";
  std::vector<std::vector<double>> channels;
  std::vector<double> timestamps_ms;
  double nominal_rate = 0.0;
  bool polarity_inverted = false;

  std::size_t size() const { return timestamps_ms.size(); }
  double duration_s() const {
    return timestamps_ms.empty() ? 0.0
                                 : (timestamps_ms.back() - timestamps_ms.front()) / 1000.0;
  }
};

enum class SegmentStage { kFiltered, kMaChecked, kStandardized };

// A fixed-duration, uniformly sampled single-channel window.
struct Segment {
  std::string subject_id;
  std::string device_id;
  DeviceKind device_kind = DeviceKind::kWearable;
  std::string tag = "sitting";
  double start_ms = 0.0;
  double duration_s = 0.0;
  double rate = 60.0;
  std::vector<double> samples;
  SegmentStage stage = SegmentStage::kFiltered;
};

struct PreprocessConfig {
  double band_lo_hz = 0.5;
  double band_hi_hz = 2.0;
  int filter_order = 4;
  double target_rate = 60.0;
  double window_ma_s = 12.0;
  double window_feat_s = 6.0;
  double train_hop_s = 4.0;
  double test_hop_s = 6.0;
  int savgol_order = 3;
  int savgol_window_samples = 11;
  double detrend_window_s = 1.5;

  void Validate() const {
    Require(band_lo_hz > 0 && band_lo_hz < band_hi_hz && band_hi_hz < target_rate / 2,
            ErrorCode::kInvalidConfig, "need 0 < band_lo_hz < band_hi_hz < target_rate/2");
    Require(filter_order >= 1, ErrorCode::kInvalidConfig, "filter_order must be >= 1");
    Require(savgol_window_samples % 2 == 1 && savgol_window_samples > savgol_order,
            ErrorCode::kInvalidConfig, "savgol window must be odd and exceed the order");
    Require(savgol_order >= 0, ErrorCode::kInvalidConfig, "savgol_order must be >= 0");
    Require(window_ma_s > 0 && window_feat_s > 0 && train_hop_s > 0 && test_hop_s > 0,
            ErrorCode::kInvalidConfig, "window and hop lengths must be positive");
    Require(detrend_window_s > 0, ErrorCode::kInvalidConfig, "detrend window must be positive");
  }
};

}  // namespace ppgtrans

#endif  // PPGTRANS_TYPES_HPP_
