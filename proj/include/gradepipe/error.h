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

#ifndef GRADEPIPE_ERROR_H_
#define GRADEPIPE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gradepipe {

/// Failure categories raised across the pipeline. Each maps onto one of the
/// CLI exit codes through `is_input_error`.
enum class ErrorCode {
  kBadMagic,
  kTruncatedFile,
  kUnsortedLevels,
  kInvalidPyramid,
  kIoFailure,
  kNoFinerLevel,
  kDegenerateConfig,
  kShapeMismatch,
  kInvalidDistribution,
  kMissingGradient,
  kNoGraph,
  kInvalidConfig,
  kEmptyList,
  kEmptySlideList,
  kTooManySlides,
  kMissingClass,
  kTooFewSlides,
  kNonFiniteLoss,
  kConfigMismatch,
  kParseError,
};

std::string_view error_code_name(ErrorCode code);

/// True for errors caused by the caller's input (bad files, bad configs)
/// rather than a failure while running.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace gradepipe

#endif  // GRADEPIPE_ERROR_H_
