#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "../support/oracles.hpp"
#include "mouthpipe/error.hpp"
#include "mouthpipe/midi.hpp"

using namespace mouthpipe;
using Bytes = std::vector<std::uint8_t>;

TEST(EncodeCc, GoldenBytes) {
  EXPECT_EQ(encode_cc({0, 0, 74, 100}), (std::array<std::uint8_t, 3>{0xB0, 0x4A, 0x64}));
  EXPECT_EQ(encode_cc({0, 9, 1, 0}), (std::array<std::uint8_t, 3>{0xB9, 0x01, 0x00}));
  EXPECT_EQ(encode_cc({0, 15, 127, 127}), (std::array<std::uint8_t, 3>{0xBF, 0x7F, 0x7F}));
}

TEST(EncodeCc, OutOfRangeFields) {
  for (ControlEvent e : {ControlEvent{0, 0, 74, 128}, ControlEvent{0, 16, 74, 1}, ControlEvent{0, -1, 74, 1},
                         ControlEvent{0, 0, 128, 1}, ControlEvent{0, 0, 1, -1}}) {
    try {
      encode_cc(e);
      ADD_FAILURE();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::OutOfRange);
    }
  }
}

TEST(EncodeCc, InjectiveWithControlChangeStatus) {
  std::set<std::array<std::uint8_t, 3>> seen;
  for (int ch = 0; ch < 16; ++ch)
    for (int c = 0; c < 128; ++c)
      for (int v = 0; v < 128; v += 7) {
        const auto b = encode_cc({0, ch, c, v});
        ASSERT_EQ(b[0] >> 4, 0xB);
        ASSERT_TRUE(seen.insert(b).second);
      }
}

TEST(Dedup, DropsRepeatsPerController) {
  std::vector<ControlEvent> in;
  for (int v : {5, 5, 6, 6, 5}) in.push_back({0, 0, 74, v});
  const auto out = dedup(in);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].value, 5);
  EXPECT_EQ(out[1].value, 6);
  EXPECT_EQ(out[2].value, 5);
}

TEST(Dedup, IndependentControllers) {
  const std::vector<ControlEvent> in{{0, 0, 74, 9}, {0, 0, 71, 9}, {0, 1, 74, 9}};
  EXPECT_EQ(dedup(in).size(), 3u);
  EXPECT_TRUE(dedup(std::vector<ControlEvent>{}).empty());
}

TEST(Dedup, Idempotent) {
  oracle::Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    std::vector<ControlEvent> s;
    for (int i = 0; i < 200; ++i)
      s.push_back({double(i), oracle::uniform(rng, 0, 1), oracle::uniform(rng, 70, 72), oracle::uniform(rng, 0, 3)});
    const auto once = dedup(s);
    EXPECT_EQ(dedup(once), once);
  }
}

TEST(Dedup, BypassKeepsEverything) {
  Deduplicator d;
  d.enabled = false;
  EXPECT_TRUE(d.pass({0, 0, 1, 1}));
  EXPECT_TRUE(d.pass({0, 0, 1, 1}));
}

TEST(Vlq, ReferenceTable) {
  EXPECT_EQ(encode_vlq(0), (Bytes{0x00}));
  EXPECT_EQ(encode_vlq(127), (Bytes{0x7F}));
  EXPECT_EQ(encode_vlq(128), (Bytes{0x81, 0x00}));
  EXPECT_EQ(encode_vlq(16383), (Bytes{0xFF, 0x7F}));
  EXPECT_EQ(encode_vlq(16384), (Bytes{0x81, 0x80, 0x00}));
  EXPECT_EQ(encode_vlq(0x0FFFFFFF), (Bytes{0xFF, 0xFF, 0xFF, 0x7F}));
}

TEST(Smf, EmptyEventList) {
  const auto b = write_smf({});
  const Bytes want{0x4D, 0x54, 0x68, 0x64, 0, 0, 0, 6, 0, 0, 0, 1, 0x01, 0xE0,
                   0x4D, 0x54, 0x72, 0x6B, 0, 0, 0, 11,
                   0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20,
                   0x00, 0xFF, 0x2F, 0x00};
  EXPECT_EQ(b, want);
}

TEST(Smf, TwoEventsHalfSecondApart) {
  const std::vector<ControlEvent> ev{{0, 0, 74, 10}, {500, 0, 74, 20}};
  const auto b = write_smf(ev);
  const Bytes header{0x4D, 0x54, 0x68, 0x64, 0, 0, 0, 6, 0, 0, 0, 1, 0x01, 0xE0};
  ASSERT_GE(b.size(), header.size());
  EXPECT_TRUE(std::equal(header.begin(), header.end(), b.begin()));
  const auto f = oracle::read_smf(b);
  ASSERT_EQ(f.events.size(), 2u);
  EXPECT_EQ(f.events[0].tick, 0u);
  EXPECT_EQ(f.events[1].tick - f.events[0].tick, 480u);
  // Second delta encodes 480 as 83 60.
  const Bytes tail{0x00, 0xB0, 0x4A, 0x0A, 0x83, 0x60, 0xB0, 0x4A, 0x14, 0x00, 0xFF, 0x2F, 0x00};
  EXPECT_TRUE(std::equal(tail.begin(), tail.end(), b.end() - std::ptrdiff_t(tail.size())));
}

TEST(Smf, UnsortedEventsRejected) {
  const std::vector<ControlEvent> ev{{10, 0, 74, 10}, {5, 0, 74, 20}};
  try {
    write_smf(ev);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedEvents);
  }
}

TEST(Smf, RoundTripThroughReader) {
  oracle::Rng rng(32);
  for (int t = 0; t < 30; ++t) {
    SmfConfig cfg{std::uint16_t(oracle::uniform(rng, 24, 960)), std::uint32_t(oracle::uniform(rng, 300000, 900000))};
    std::vector<ControlEvent> ev;
    double time = 0;
    for (int i = 0; i < 100; ++i) {
      time += oracle::uniform(rng, 0, 3) == 0 ? 0 : oracle::uniform_real(rng, 0, 400);
      ev.push_back({time, oracle::uniform(rng, 0, 15), oracle::uniform(rng, 0, 127), oracle::uniform(rng, 0, 127)});
    }
    const auto f = oracle::read_smf(write_smf(ev, cfg));
    EXPECT_EQ(f.format, 0);
    EXPECT_EQ(f.tracks, 1);
    EXPECT_EQ(f.division, cfg.ticks_per_quarter);
    EXPECT_EQ(f.tempo, cfg.tempo_us_per_quarter);
    EXPECT_TRUE(f.end_of_track);
    ASSERT_EQ(f.events.size(), ev.size());
    const double ticks_per_ms = cfg.ticks_per_quarter * 1000.0 / cfg.tempo_us_per_quarter;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      EXPECT_EQ(f.events[i].status, 0xB0 | ev[i].channel);
      EXPECT_EQ(f.events[i].data1, ev[i].controller);
      EXPECT_EQ(f.events[i].data2, ev[i].value);
      // Each delta is rounded on its own, so cumulative drift is at most half a tick per event.
      EXPECT_NEAR(double(f.events[i].tick), ev[i].t_ms * ticks_per_ms, 0.5 * double(i + 1) + 1e-9);
    }
  }
}

TEST(HexSink, Format) {
  EXPECT_EQ(format_hex_line({12.5, 0, 74, 100}), "t=12.500 B0 4A 64");
  EXPECT_EQ(format_hex_line({0, 9, 1, 0}), "t=0.000 B9 01 00");
}

TEST(SmfSink, WritesOnFinish) {
  const auto path = std::filesystem::temp_directory_path() / "mp_sink_test.mid";
  std::filesystem::remove(path);
  {
    SmfMidiSink sink(path, {});
    sink.send({0, 0, 74, 1});
    sink.send({500, 0, 74, 2});
    sink.finish();
    sink.finish();
  }
  std::ifstream in(path, std::ios::binary);
  const Bytes b{std::istreambuf_iterator<char>(in), {}};
  const std::vector<ControlEvent> ev{{0, 0, 74, 1}, {500, 0, 74, 2}};
  EXPECT_EQ(b, write_smf(ev));
  std::filesystem::remove(path);
}

TEST(SmfSink, UnwritablePathIsSinkError) {
  try {
    SmfMidiSink sink("/nonexistent-dir/out.mid", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Sink);
  }
}

TEST(UdpSink, OneDatagramPerMessage) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  timeval tv{2, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  UdpMidiSink sink("127.0.0.1:" + std::to_string(ntohs(addr.sin_port)));
  sink.send({0, 0, 74, 100});
  sink.send({0, 9, 1, 0});
  std::uint8_t buf[16];
  ASSERT_EQ(::recv(fd, buf, sizeof buf, 0), 3);
  EXPECT_EQ(Bytes(buf, buf + 3), (Bytes{0xB0, 0x4A, 0x64}));
  ASSERT_EQ(::recv(fd, buf, sizeof buf, 0), 3);
  EXPECT_EQ(Bytes(buf, buf + 3), (Bytes{0xB9, 0x01, 0x00}));
  EXPECT_EQ(sink.sent(), 2u);
  EXPECT_EQ(sink.dropped(), 0u);
  ::close(fd);
}

TEST(UdpSink, BadAddressIsSinkError) {
  EXPECT_THROW(UdpMidiSink("no-port-here"), Error);
  EXPECT_THROW(UdpMidiSink("127.0.0.1:99999"), Error);
}
