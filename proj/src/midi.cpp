#include "mouthpipe/midi.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

std::array<std::uint8_t, 3> encode_cc(const ControlEvent& e) {
  if (e.channel < 0 || e.channel > 15) throw Error(ErrorCode::OutOfRange, "channel " + std::to_string(e.channel));
  if (e.controller < 0 || e.controller > 127)
    throw Error(ErrorCode::OutOfRange, "controller " + std::to_string(e.controller));
  if (e.value < 0 || e.value > 127) throw Error(ErrorCode::OutOfRange, "value " + std::to_string(e.value));
  return {std::uint8_t(0xB0 | e.channel), std::uint8_t(e.controller), std::uint8_t(e.value)};
}

bool Deduplicator::pass(const ControlEvent& e) {
  if (!enabled) return true;
  const auto key = std::make_pair(e.channel, e.controller);
  auto it = last_.find(key);
  if (it != last_.end() && it->second == e.value) return false;
  last_[key] = e.value;
  return true;
}

std::vector<ControlEvent> Deduplicator::filter(std::span<const ControlEvent> events) {
  std::vector<ControlEvent> out;
  for (const auto& e : events) {
    if (pass(e)) out.push_back(e);
  }
  return out;
}

std::vector<ControlEvent> dedup(std::span<const ControlEvent> events) {
  Deduplicator d;
  return d.filter(events);
}

std::vector<std::uint8_t> encode_vlq(std::uint32_t v) {
  if (v > 0x0FFFFFFF) throw Error(ErrorCode::OutOfRange, "delta time exceeds 28 bits");
  std::uint8_t buf[4];
  int n = 0;
  buf[n++] = std::uint8_t(v & 0x7F);
  while (v >>= 7) buf[n++] = std::uint8_t(0x80 | (v & 0x7F));
  std::vector<std::uint8_t> out;
  while (n > 0) out.push_back(buf[--n]);
  return out;
}

namespace {

void put_be16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(std::uint8_t(v >> 8));
  o.push_back(std::uint8_t(v));
}

void put_be32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) o.push_back(std::uint8_t(v >> s));
}

}  // namespace

std::vector<std::uint8_t> write_smf(std::span<const ControlEvent> events, const SmfConfig& cfg) {
  if (cfg.ticks_per_quarter < 1 || cfg.ticks_per_quarter > 0x7FFF)
    throw Error(ErrorCode::OutOfRange, "ticks_per_quarter must be in [1, 32767]");
  if (cfg.tempo_us_per_quarter == 0 || cfg.tempo_us_per_quarter > 0xFFFFFF)
    throw Error(ErrorCode::OutOfRange, "tempo must fit 24 bits and be nonzero");
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t_ms < events[i - 1].t_ms) throw Error(ErrorCode::UnsortedEvents, "event " + std::to_string(i));
  }

  const double ticks_per_ms = double(cfg.ticks_per_quarter) * 1000.0 / double(cfg.tempo_us_per_quarter);
  std::vector<std::uint8_t> track;
  // Tempo meta event at time zero.
  track.insert(track.end(), {0x00, 0xFF, 0x51, 0x03});
  track.push_back(std::uint8_t(cfg.tempo_us_per_quarter >> 16));
  track.push_back(std::uint8_t(cfg.tempo_us_per_quarter >> 8));
  track.push_back(std::uint8_t(cfg.tempo_us_per_quarter));

  double prev_ms = 0.0;
  for (const auto& e : events) {
    const double dt = std::max(0.0, e.t_ms - prev_ms);
    const auto delta = encode_vlq(std::uint32_t(std::llround(dt * ticks_per_ms)));
    track.insert(track.end(), delta.begin(), delta.end());
    const auto msg = encode_cc(e);
    track.insert(track.end(), msg.begin(), msg.end());
    prev_ms = e.t_ms;
  }
  track.insert(track.end(), {0x00, 0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1};
  put_be16(out, cfg.ticks_per_quarter);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_be32(out, std::uint32_t(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

// ---------------------------------------------------------------------------
// Sinks

UdpMidiSink::UdpMidiSink(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Sink, "UDP address must be host:port");
  std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  unsigned port_num = 0;
  const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), port_num);
  if (ec != std::errc{} || end != port.data() + port.size() || port_num == 0 || port_num > 65535)
    throw Error(ErrorCode::Sink, "bad UDP port in " + address);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0 || !res)
    throw Error(ErrorCode::Sink, "cannot resolve " + address + ": " + ::gai_strerror(rc));
  fd_ = ::socket(res->ai_family, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw Error(ErrorCode::Sink, std::string("socket: ") + std::strerror(errno));
  }
  auto* p = reinterpret_cast<const std::uint8_t*>(res->ai_addr);
  addr_.assign(p, p + res->ai_addrlen);
  ::freeaddrinfo(res);
}

UdpMidiSink::~UdpMidiSink() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpMidiSink::send(const ControlEvent& e) {
  const auto msg = encode_cc(e);
  const auto rc = ::sendto(fd_, msg.data(), msg.size(), MSG_DONTWAIT,
                           reinterpret_cast<const sockaddr*>(addr_.data()), socklen_t(addr_.size()));
  if (rc == ssize_t(msg.size())) ++sent_;
  else ++dropped_;
}

std::string format_hex_line(const ControlEvent& e) {
  const auto b = encode_cc(e);
  char buf[64];
  std::snprintf(buf, sizeof buf, "t=%.3f %02X %02X %02X", e.t_ms, b[0], b[1], b[2]);
  return buf;
}

void HexMidiSink::send(const ControlEvent& e) {
  std::fprintf(out_, "%s\n", format_hex_line(e).c_str());
}

SmfMidiSink::SmfMidiSink(std::filesystem::path path, SmfConfig cfg) : path_(std::move(path)), cfg_(cfg) {
  // Fail early on an unwritable destination rather than at the end of a session.
  std::ofstream probe(path_, std::ios::binary | std::ios::trunc);
  if (!probe) throw Error(ErrorCode::Sink, "cannot write " + path_.string());
}

void SmfMidiSink::finish() {
  if (written_) return;
  const auto bytes = write_smf(events_, cfg_);
  std::ofstream o(path_, std::ios::binary | std::ios::trunc);
  o.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!o) throw Error(ErrorCode::Sink, "write failed for " + path_.string());
  written_ = true;
}

}  // namespace mouthpipe
