// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faders {

enum class ErrorCode {
  InvalidPitch,
  TokenOverflow,
  EmptySegment,
  ShapeError,
  IndexError,
  UnsupportedInMode,
  BatchTooSmall,
  EmptyCorpus,
  InvalidLabel,
  MalformedMidi,
  ParseError,
  InvalidSweep,
  InsufficientSamples,
  InvalidConfig,
  IoError,
};

std::string_view error_name(ErrorCode code);

// Every domain failure surfaces as this exception; `code()` carries the
// module-level error name used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace faders
