#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mouthpipe/protocol.hpp"

namespace mouthpipe {

/// Maximum telemetry messages buffered per viewer before the oldest is dropped.
inline constexpr std::size_t kViewerQueueLimit = 32;

/// WebSocket endpoint for live tuning and telemetry.
///
/// Runs its own I/O thread. Commands from any viewer go through the shared
/// ConfigStore; telemetry fans out to all viewers without ever blocking the
/// caller. A viewer may pick its overlay downscale with "?downscale=N" on the
/// handshake URL.
class ControlServer {
 public:
  ControlServer(ConfigStore& store, int default_downscale);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  /// Binds "host:port" (port 0 picks a free one) and returns the bound port.
  std::uint16_t start(const std::string& address);
  void stop();

  void publish(std::shared_ptr<const TelemetryFrame> frame);
  /// Control-plane broadcast; never dropped.
  void notify(std::string text);

  std::size_t viewers() const;
  std::uint64_t dropped() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace mouthpipe
