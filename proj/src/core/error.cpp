// Copyright 2026 The deid Authors.
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

#include "deid/core/error.hpp"

namespace deid {
namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           const SourceLocation& where) {
  std::string out(to_string(code));
  if (!where.file.empty() || where.line > 0 || where.offset) {
    out += " at ";
    if (!where.file.empty()) out += where.file;
    if (where.line > 0) {
      if (!where.file.empty()) out += ':';
      out += "line " + std::to_string(where.line);
    }
    if (where.offset) {
      if (!where.file.empty() || where.line > 0) out += ", ";
      out += "offset " + std::to_string(*where.offset);
    }
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidUtf8: return "InvalidUtf8";
    case ErrorCode::kInvalidDocument: return "InvalidDocument";
    case ErrorCode::kEntityTokenMisalignment: return "EntityTokenMisalignment";
    case ErrorCode::kInvalidBioSequence: return "InvalidBioSequence";
    case ErrorCode::kMalformedMarkup: return "MalformedMarkup";
    case ErrorCode::kUnknownTag: return "UnknownTag";
    case ErrorCode::kEmptyEntity: return "EmptyEntity";
    case ErrorCode::kMissingEnvelope: return "MissingEnvelope";
    case ErrorCode::kBadColumnCount: return "BadColumnCount";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kMissingDocument: return "MissingDocument";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnparseableDate: return "UnparseableDate";
    case ErrorCode::kMissingLexicon: return "MissingLexicon";
    case ErrorCode::kPlanIncomplete: return "PlanIncomplete";
    case ErrorCode::kInvalidPattern: return "InvalidPattern";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptySide: return "EmptySide";
    case ErrorCode::kBothEmpty: return "BothEmpty";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kRatioMismatch: return "RatioMismatch";
    case ErrorCode::kSlotMissing: return "SlotMissing";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kSpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

bool is_io_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kTimeout:
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kSpanOutOfRange:
    case ErrorCode::kBackendError:
    case ErrorCode::kTransportError:
    case ErrorCode::kIoError:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, std::string message, SourceLocation where)
    : std::runtime_error(format_message(code, message, where)),
      code_(code),
      where_(std::move(where)),
      detail_(std::move(message)) {}

}  // namespace deid
