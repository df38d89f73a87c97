// Copyright 2026 The WIG Authors.
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

#ifndef WIG_ERROR_H_
#define WIG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace wig {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kIo,
  kEmptyVocabulary,
  kAllDocumentsEmpty,
  kEmptyCorpus,
  kNumericalCollapse,
  kDegenerateReconstruction,
  kNonFiniteLoss,
  kDegenerateSvd,
  kEmptyInput,
  kZeroVariance,
  kSeriesTooShort,
  kNoOverlap,
  kInsufficientOverlap,
  kMissingStageInput,
  kOutputLocked,
};

// Coarse classes used to pick a process exit code.
enum class ErrorClass { kUsage, kData, kNumerical };

std::string_view ErrorCodeName(ErrorCode code);
ErrorClass ClassOf(ErrorCode code);

// All library failures are reported as wig::Error. The code is stable and
// meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  // The message without the code-name prefix.
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace wig

#endif  // WIG_ERROR_H_
