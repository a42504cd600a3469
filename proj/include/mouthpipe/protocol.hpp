#pragma once

// JSON control/telemetry protocol: one JSON object per WebSocket text frame,
// snake_case fields, tagged by "type".
//
// inbound  set_thresholds{i_min?, r_max?} | toggle_filter{which, on}
//          set_filter_params{t_a?, alpha?, k_max?} | set_mapping{preset | bindings}
//          calibrate{phase} | get_config{}
// outbound ack{cmd, revision[, config]} | rejection{cmd, reason}
//          telemetry{...} | calibration{phase, status[, reason]}

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mouthpipe/config.hpp"
#include "mouthpipe/mapping.hpp"
#include "mouthpipe/segmentation.hpp"
#include "mouthpipe/shape.hpp"

namespace mouthpipe {

struct SetThresholds {
  std::optional<int> i_min;
  std::optional<int> r_max;
};
struct ToggleFilter {
  char which = 'A';
  bool on = true;
};
struct SetFilterParams {
  std::optional<double> t_a;
  std::optional<double> alpha;
  std::optional<int> k_max;
};
struct SetMapping {
  std::optional<std::string> preset;
  std::optional<std::vector<Binding>> bindings;
};
struct Calibrate {
  CalibrationPhase phase = CalibrationPhase::Closed;
};
struct GetConfig {};

using Command = std::variant<SetThresholds, ToggleFilter, SetFilterParams, SetMapping, Calibrate, GetConfig>;

std::string_view command_name(const Command& c);

/// Command refused; the reason goes back to the client verbatim.
class Rejection : public std::runtime_error {
 public:
  Rejection(std::string cmd, const std::string& reason) : std::runtime_error(reason), cmd_(std::move(cmd)) {}
  const std::string& cmd() const { return cmd_; }

 private:
  std::string cmd_;
};

/// Unknown fields are ignored; out-of-range values and unknown tags reject.
Command parse_command(const nlohmann::json& j);
/// Applies a mutation to a copy of `cfg`. GetConfig and Calibrate leave it unchanged.
RuntimeConfig apply_command(const RuntimeConfig& cfg, const Command& c);

/// Authoritative live configuration shared between the control service
/// (writer) and the pipeline loop (reader at frame boundaries). Every applied
/// command bumps the revision by one.
class ConfigStore {
 public:
  explicit ConfigStore(RuntimeConfig cfg = {});

  struct Snapshot {
    RuntimeConfig config;
    std::uint64_t revision = 0;
  };

  Snapshot snapshot() const;
  std::uint64_t revision() const;
  /// Throws Rejection; returns the new revision.
  std::uint64_t apply(const Command& c);
  /// Installs a calibration produced by the guided protocol; bumps the revision.
  std::uint64_t set_calibration(const CalibrationSet& cal);
  std::vector<CalibrationPhase> take_calibration_requests();

 private:
  mutable std::mutex mu_;
  RuntimeConfig cfg_;
  std::uint64_t revision_ = 0;
  std::vector<CalibrationPhase> calibration_requests_;
};

/// Text in, reply text out. Malformed input yields a rejection, never a throw.
std::string handle_command_text(ConfigStore& store, const std::string& text);

// ---------------------------------------------------------------------------
// Mask overlay

/// A downscaled bit is set iff any source bit in its factor x factor block is.
Mask downscale_mask(const Mask& m, int factor);
/// Row-major alternating runs over the downscaled mask, starting with a
/// (possibly empty) run of zeros.
std::vector<std::uint32_t> encode_mask_rle(const Mask& m, int factor);
/// Throws Error(OutOfRange) if the runs do not cover width*height exactly.
Mask decode_mask_rle(const std::vector<std::uint32_t>& runs, std::uint32_t width, std::uint32_t height);

/// Everything a telemetry message needs; the mask is encoded per viewer.
struct TelemetryFrame {
  std::uint64_t frame = 0;
  double t_ms = 0.0;
  bool blob = false;
  ShapeParams shape;
  std::vector<ControlEvent> cc;
  Mask mask;
  double fps = 0.0;
  double proc_ms = 0.0;
  std::uint64_t revision = 0;

  std::string to_json_text(int downscale) const;
};

}  // namespace mouthpipe
