#include "mouthpipe/error.hpp"

namespace mouthpipe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::ZeroFps: return "ZeroFps";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::UnsortedEvents: return "UnsortedEvents";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Source: return "Source";
    case ErrorCode::Sink: return "Sink";
    case ErrorCode::Service: return "Service";
    case ErrorCode::Calibration: return "Calibration";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace mouthpipe
