#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mouthpipe/config.hpp"
#include "mouthpipe/control_service.hpp"
#include "mouthpipe/frame_io.hpp"
#include "mouthpipe/mapping.hpp"
#include "mouthpipe/midi.hpp"
#include "mouthpipe/pipeline.hpp"
#include "mouthpipe/protocol.hpp"

namespace mouthpipe {

struct TimingSummary {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
};

TimingSummary summarize(std::vector<double> samples);

struct SessionReport {
  std::uint64_t frames = 0;
  std::uint64_t noblob = 0;
  std::uint64_t events = 0;
  bool truncated = false;
  std::string error;  // source failure that ended the session early
  double wall_s = 0.0;
  double fps = 0.0;
  TimingSummary frame;  // end to end, all stages plus output
  std::array<TimingSummary, kStageCount> stages{};
  std::uint64_t udp_dropped = 0;
  std::uint64_t telemetry_dropped = 0;

  nlohmann::json to_json() const;
};

struct RunOptions {
  /// Pace frames at the source rate and stamp them from the clock.
  bool realtime = false;
  /// Replay the source until stopped.
  bool loop = false;
  std::uint32_t repeat = 1;
};

inline constexpr const char* kCsvHeader = "frame,t_ms,blob,area,cx,cy,height,width,major,minor,q,m";
std::string csv_row(const FrameResult& r);

/// Owns the pipeline loop and everything attached to it: MIDI sinks, the CSV
/// log, the control service and the guided-calibration capture. Commands from
/// the service take effect at the next frame boundary.
class Session {
 public:
  explicit Session(RuntimeConfig cfg);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Opens the sinks named in the midi section of the configuration.
  void open_outputs();
  void add_sink(std::unique_ptr<MidiSink> sink);
  void open_csv(const std::filesystem::path& path);
  /// Starts the control service; returns the bound port.
  std::uint16_t listen(const std::string& address);

  FrameResult process(Frame f);
  SessionReport run(FrameSource& source, const RunOptions& opt = {});
  /// Safe to call from a signal handler.
  void request_stop() noexcept { stop_.store(true); }
  bool stop_requested() const noexcept { return stop_.load(); }
  /// Flushes sinks (writes the SMF). Idempotent.
  void finish();

  SessionReport report() const;
  ConfigStore& store() { return store_; }
  const Pipeline& pipeline() const { return pipeline_; }
  std::uint64_t revision() const { return revision_; }

 private:
  void sync_config();
  void record(const FrameResult& r, double frame_us);

  ConfigStore store_;
  Pipeline pipeline_;
  std::uint64_t revision_ = 0;
  GuidedCalibrator calibrator_;

  std::vector<std::unique_ptr<MidiSink>> sinks_;
  std::vector<UdpMidiSink*> udp_sinks_;
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> csv_{nullptr, &std::fclose};
  std::unique_ptr<ControlServer> server_;

  std::atomic<bool> stop_{false};
  bool finished_ = false;

  std::vector<double> frame_us_;
  std::array<std::vector<double>, kStageCount> stage_us_;
  std::uint64_t events_ = 0;
  double fps_estimate_ = 0.0;
  double last_frame_clock_ms_ = -1.0;
  SessionReport run_state_;
};

/// Runs the guided protocol over a recorded source: kGuidedFrames (or
/// `frames`) starting at closed_at are the closed-mouth phase, the same count
/// from open_at the open phase. Returns the config with guided ranges for the
/// bound pixel-valued sources.
RuntimeConfig calibrate_from_source(const RuntimeConfig& cfg, FrameSource& source, std::uint64_t closed_at,
                                    std::uint64_t open_at, int frames = kGuidedFrames);

}  // namespace mouthpipe
