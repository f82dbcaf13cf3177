// Copyright 2026 The Postforge Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace postforge {

enum class ErrorCode {
    kInvalidArgument,
    kParse,
    kZeroOverlap,
    kHalfProbability,
    kNonTerminalPostselect,
    kNonTerminalMarkers,
    kNonUnitaryInput,
    kTooWide,
    kUnsupportedGate,
    kCounterTooSmall,
    kLayoutTooSmall,
    kLayoutMismatch,
    kDegenerateBranch,
    kZeroMatrix,
};

inline const char *error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kParse: return "ParseError";
        case ErrorCode::kZeroOverlap: return "ZeroOverlap";
        case ErrorCode::kHalfProbability: return "HalfProbability";
        case ErrorCode::kNonTerminalPostselect: return "NonTerminalPostselect";
        case ErrorCode::kNonTerminalMarkers: return "NonTerminalMarkers";
        case ErrorCode::kNonUnitaryInput: return "NonUnitaryInput";
        case ErrorCode::kTooWide: return "TooWide";
        case ErrorCode::kUnsupportedGate: return "UnsupportedGate";
        case ErrorCode::kCounterTooSmall: return "CounterTooSmall";
        case ErrorCode::kLayoutTooSmall: return "LayoutTooSmall";
        case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
        case ErrorCode::kDegenerateBranch: return "DegenerateBranch";
        case ErrorCode::kZeroMatrix: return "ZeroMatrix";
    }
    return "Unknown";
}

/// Base of every exception thrown by the library. `code()` identifies the
/// failure class; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {
    }
    ErrorCode code() const noexcept {
        return code_;
    }

   private:
    ErrorCode code_;
};

template <ErrorCode C>
class CodedError : public Error {
   public:
    explicit CodedError(const std::string &what) : Error(C, what) {
    }
};

using InvalidArgument = CodedError<ErrorCode::kInvalidArgument>;
using ParseError = CodedError<ErrorCode::kParse>;
using ZeroOverlap = CodedError<ErrorCode::kZeroOverlap>;
using HalfProbability = CodedError<ErrorCode::kHalfProbability>;
using NonTerminalPostselect = CodedError<ErrorCode::kNonTerminalPostselect>;
using NonTerminalMarkers = CodedError<ErrorCode::kNonTerminalMarkers>;
using NonUnitaryInput = CodedError<ErrorCode::kNonUnitaryInput>;
using TooWide = CodedError<ErrorCode::kTooWide>;
using UnsupportedGate = CodedError<ErrorCode::kUnsupportedGate>;
using CounterTooSmall = CodedError<ErrorCode::kCounterTooSmall>;
using LayoutTooSmall = CodedError<ErrorCode::kLayoutTooSmall>;
using LayoutMismatch = CodedError<ErrorCode::kLayoutMismatch>;
using DegenerateBranch = CodedError<ErrorCode::kDegenerateBranch>;
using ZeroMatrix = CodedError<ErrorCode::kZeroMatrix>;

}  // namespace postforge
