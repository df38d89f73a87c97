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

#include "wig/error.h"

namespace wig {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kEmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::kAllDocumentsEmpty: return "AllDocumentsEmpty";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNumericalCollapse: return "NumericalCollapse";
    case ErrorCode::kDegenerateReconstruction: return "DegenerateReconstruction";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kDegenerateSvd: return "DegenerateSVD";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::kMissingStageInput: return "MissingStageInput";
    case ErrorCode::kOutputLocked: return "OutputLocked";
  }
  return "Unknown";
}

ErrorClass ClassOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return ErrorClass::kUsage;
    case ErrorCode::kNumericalCollapse:
    case ErrorCode::kDegenerateReconstruction:
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kDegenerateSvd:
      return ErrorClass::kNumerical;
    default:
      return ErrorClass::kData;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      message_(message) {}

}  // namespace wig
