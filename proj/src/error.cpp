// Copyright 2026 The gradepipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gradepipe/error.h"

namespace gradepipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kUnsortedLevels: return "UnsortedLevels";
    case ErrorCode::kInvalidPyramid: return "InvalidPyramid";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kNoFinerLevel: return "NoFinerLevel";
    case ErrorCode::kDegenerateConfig: return "DegenerateConfig";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kMissingGradient: return "MissingGradient";
    case ErrorCode::kNoGraph: return "NoGraph";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kEmptySlideList: return "EmptySlideList";
    case ErrorCode::kTooManySlides: return "TooManySlides";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kTooFewSlides: return "TooFewSlides";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoFailure:
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kMissingGradient:
    case ErrorCode::kNoGraph:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gradepipe
