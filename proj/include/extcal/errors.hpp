/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace extcal {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyWindow,
  kNonMonotonicTime,
  kSingularSystem,
  kDegenerateGeometry,
  kAmbiguousAttitude,
  kDegenerateMotion,
  kNotConverged,
  kInsufficientExcitation,
  kNotStatic,
  kInsufficientData,
  kParseError,
  kNonUnitQuaternion,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind instead of the message.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace extcal
