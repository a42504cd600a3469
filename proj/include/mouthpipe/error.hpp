#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mouthpipe {

enum class ErrorCode {
  BadMagic,
  BadHeader,
  UnsupportedMaxval,
  Truncated,
  ZeroFps,
  OutOfRange,
  DegenerateRange,
  UnsortedEvents,
  Config,
  Source,
  Sink,
  Service,
  Calibration,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the core; the C API maps codes onto status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mouthpipe
