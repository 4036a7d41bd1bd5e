// Copyright 2026 The bodymetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BODYMETRICS_ERROR_HPP_
#define BODYMETRICS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace bodymetrics {

enum class ErrorCode {
  kMalformedFrame,
  kDimensionMismatch,
  kParseError,
  kUnsupportedFormat,
  kIoError,
  kEmptyCloud,
  kDegenerateCloud,
  kTooFewPoints,
  kIndexOutOfRange,
  kDegenerateCoincident,
  kDegenerateCollinear,
  kDegenerateCoplanar,
  kInvalidMesh,
  kInvalidIntrinsics,
  kNonPositiveDensity,
  kParameterOutOfRange,
  kInvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFrame: return "MalformedFrame";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDegenerateCoincident: return "DegenerateCoincident";
    case ErrorCode::kDegenerateCollinear: return "DegenerateCollinear";
    case ErrorCode::kDegenerateCoplanar: return "DegenerateCoplanar";
    case ErrorCode::kInvalidMesh: return "InvalidMesh";
    case ErrorCode::kInvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::kNonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::kParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code and, once it has passed through
/// the pipeline, the name of the stage that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Error(ErrorCode code, std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + std::string(to_string(code)) + ": " +
                           message),
        code_(code),
        stage_(std::move(stage)),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  bool is_degenerate_hull() const noexcept {
    return code_ == ErrorCode::kDegenerateCoincident ||
           code_ == ErrorCode::kDegenerateCollinear ||
           code_ == ErrorCode::kDegenerateCoplanar;
  }

  Error with_stage(std::string stage) const {
    return Error(code_, std::move(stage), detail_);
  }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace bodymetrics

#endif  // BODYMETRICS_ERROR_HPP_
