/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/errors.hpp"

namespace extcal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kAmbiguousAttitude: return "AmbiguousAttitude";
    case ErrorCode::kDegenerateMotion: return "DegenerateMotion";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kInsufficientExcitation: return "InsufficientExcitation";
    case ErrorCode::kNotStatic: return "NotStatic";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace extcal
