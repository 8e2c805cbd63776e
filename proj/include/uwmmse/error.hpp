// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace uwmmse {

/// Failure categories surfaced by the library. The values line up with the
/// status codes of the C API (uwmmse.h) so the boundary is a plain cast.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimension = 2,
  kConvergence = 3,
  kDegenerateInput = 4,
  kDomain = 5,
  kNonFinite = 6,
  kIo = 7,
  kCorruptFile = 8,
  kVersionMismatch = 9,
  kShapeMismatch = 10,
  kUnknownFigure = 11,
  kIndexOutOfRange = 12,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uwmmse
