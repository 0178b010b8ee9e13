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

#ifndef PPGTRANS_ERROR_HPP_
#define PPGTRANS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppgtrans {

enum class ErrorCode {
  kEmptyInput,
  kNonMonotonicTimestamps,
  kChannelLengthMismatch,
  kDegenerateSpan,
  kBandOutOfRange,
  kTraceTooShort,
  kFlatSignal,
  kAllChannelsInvalid,
  kNoBeats,
  kSegmentTooShort,
  kDegenerateSpectrum,
  kGridMismatch,
  kNoTokenDevice,
  kNoPositivePairs,
  kTooFewSubjects,
  kSingleClassInput,
  kNonFiniteFeature,
  kCorruptModelFile,
  kVersionMismatch,
  kDurationTooShort,
  kInvalidParams,
  kWindowOutOfRange,
  kInsufficientOverlap,
  kInvalidConfig,
  kIo,
};

constexpr std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kChannelLengthMismatch: return "ChannelLengthMismatch";
    case ErrorCode::kDegenerateSpan: return "DegenerateSpan";
    case ErrorCode::kBandOutOfRange: return "BandOutOfRange";
    case ErrorCode::kTraceTooShort: return "TraceTooShort";
    case ErrorCode::kFlatSignal: return "FlatSignal";
    case ErrorCode::kAllChannelsInvalid: return "AllChannelsInvalid";
    case ErrorCode::kNoBeats: return "NoBeats";
    case ErrorCode::kSegmentTooShort: return "SegmentTooShort";
    case ErrorCode::kDegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kNoTokenDevice: return "NoTokenDevice";
    case ErrorCode::kNoPositivePairs: return "NoPositivePairs";
    case ErrorCode::kTooFewSubjects: return "TooFewSubjects";
    case ErrorCode::kSingleClassInput: return "SingleClassInput";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kCorruptModelFile: return "CorruptModelFile";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kDurationTooShort: return "DurationTooShort";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kWindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

// All library failures are reported through this exception. The code lets
// callers (and the CLI exit-code mapping) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace ppgtrans

#endif  // PPGTRANS_ERROR_HPP_
