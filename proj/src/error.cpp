// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/error.hpp"

namespace uwmmse {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kCorruptFile: return "corrupt_file";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kUnknownFigure: return "unknown_figure";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
  }
  return "unknown";
}

}  // namespace uwmmse
