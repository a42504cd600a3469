#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mouthpipe {

struct ControlEvent {
  double t_ms = 0.0;
  int channel = 0;     // 0-15
  int controller = 0;  // 0-127
  int value = 0;       // 0-127

  friend bool operator==(const ControlEvent&, const ControlEvent&) = default;
};

/// Control change status byte 0xBn, never running status.
std::array<std::uint8_t, 3> encode_cc(const ControlEvent& e);

/// Drops an event when the last emitted event on the same (channel,
/// controller) carried the same value.
class Deduplicator {
 public:
  bool enabled = true;

  /// True if the event should be emitted; records it when so.
  bool pass(const ControlEvent& e);
  std::vector<ControlEvent> filter(std::span<const ControlEvent> events);
  void reset() { last_.clear(); }

 private:
  std::map<std::pair<int, int>, int> last_;
};

std::vector<ControlEvent> dedup(std::span<const ControlEvent> events);

struct SmfConfig {
  std::uint16_t ticks_per_quarter = 480;
  std::uint32_t tempo_us_per_quarter = 500000;
};

std::vector<std::uint8_t> encode_vlq(std::uint32_t v);

/// Standard MIDI File, format 0: header, one track holding a tempo meta
/// event, the control changes and end-of-track. Events must be sorted by t_ms.
std::vector<std::uint8_t> write_smf(std::span<const ControlEvent> events, const SmfConfig& cfg = {});

// ---------------------------------------------------------------------------
// Sinks

class MidiSink {
 public:
  virtual ~MidiSink() = default;
  virtual void send(const ControlEvent& e) = 0;
  virtual void finish() {}
};

/// One datagram per message. Never blocks: a send that would block is
/// dropped and counted.
class UdpMidiSink final : public MidiSink {
 public:
  /// "host:port"
  explicit UdpMidiSink(const std::string& address);
  ~UdpMidiSink() override;
  UdpMidiSink(const UdpMidiSink&) = delete;
  UdpMidiSink& operator=(const UdpMidiSink&) = delete;

  void send(const ControlEvent& e) override;
  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  int fd_ = -1;
  std::vector<std::uint8_t> addr_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
};

/// "t=<ms> B0 4A 64" per line, uppercase hex.
class HexMidiSink final : public MidiSink {
 public:
  explicit HexMidiSink(std::FILE* out = stdout) : out_(out) {}
  void send(const ControlEvent& e) override;

 private:
  std::FILE* out_;
};

std::string format_hex_line(const ControlEvent& e);

/// Collects events and writes the file on finish().
class SmfMidiSink final : public MidiSink {
 public:
  SmfMidiSink(std::filesystem::path path, SmfConfig cfg);
  void send(const ControlEvent& e) override { events_.push_back(e); }
  void finish() override;

 private:
  std::filesystem::path path_;
  SmfConfig cfg_;
  std::vector<ControlEvent> events_;
  bool written_ = false;
};

}  // namespace mouthpipe
