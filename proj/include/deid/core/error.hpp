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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deid {

enum class ErrorCode {
  // validation
  kInvalidUtf8,
  kInvalidDocument,
  kEntityTokenMisalignment,
  kInvalidBioSequence,
  kMalformedMarkup,
  kUnknownTag,
  kEmptyEntity,
  kMissingEnvelope,
  kBadColumnCount,
  kMalformedLine,
  kSchemaMismatch,
  kMissingDocument,
  kLengthMismatch,
  kEmptyInput,
  kUnparseableDate,
  kMissingLexicon,
  kPlanIncomplete,
  kInvalidPattern,
  kDimensionMismatch,
  kEmptySide,
  kBothEmpty,
  kEmptyCorpus,
  kRatioMismatch,
  kSlotMissing,
  kInvalidConfig,
  // I/O and backends
  kTimeout,
  kProtocolViolation,
  kSpanOutOfRange,
  kBackendError,
  kTransportError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// True for failures caused by files, processes or the network rather than by
// invalid input. The CLI maps these to exit code 2.
bool is_io_error(ErrorCode code);

struct SourceLocation {
  std::string file;
  std::size_t line = 0;                 // 1-based, 0 = unknown
  std::optional<std::size_t> offset;    // character offset into a text
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, SourceLocation where = {});

  ErrorCode code() const noexcept { return code_; }
  const SourceLocation& where() const noexcept { return where_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  SourceLocation where_;
  std::string detail_;
};

}  // namespace deid
