#include "mouthpipe/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

TimingSummary summarize(std::vector<double> samples) {
  TimingSummary s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / double(n);
  s.median_us = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  // Nearest-rank percentile.
  const auto rank = std::size_t(std::ceil(0.99 * double(n)));
  s.p99_us = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

namespace {

json timing_json(const TimingSummary& t) {
  return {{"mean_us", t.mean_us}, {"median_us", t.median_us}, {"p99_us", t.p99_us}};
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

json SessionReport::to_json() const {
  json st = json::object();
  for (std::size_t i = 0; i < kStageCount; ++i) st[std::string(to_string(Stage(i)))] = timing_json(stages[i]);
  return {{"frames", frames},
          {"noblob", noblob},
          {"events", events},
          {"truncated", truncated},
          {"error", error},
          {"wall_s", wall_s},
          {"fps", fps},
          {"frame", timing_json(frame)},
          {"stages", st},
          {"udp_dropped", udp_dropped},
          {"telemetry_dropped", telemetry_dropped}};
}

std::string csv_row(const FrameResult& r) {
  const auto& s = r.shape;
  std::string row = std::to_string(r.frame_id);
  for (double v : {r.t_ms, r.blob ? 1.0 : 0.0, s.area, s.cx, s.cy, s.height, s.width, s.major, s.minor, s.q, s.m}) {
    row += ',';
    row += fmt6(v);
  }
  return row;
}

// ---------------------------------------------------------------------------

Session::Session(RuntimeConfig cfg) : store_(cfg), pipeline_(cfg) {}

Session::~Session() {
  if (server_) server_->stop();
  try {
    finish();
  } catch (...) {
  }
}

void Session::open_outputs() {
  const auto& m = pipeline_.config().midi;
  if (!m.udp.empty()) {
    auto udp = std::make_unique<UdpMidiSink>(m.udp);
    udp_sinks_.push_back(udp.get());
    sinks_.push_back(std::move(udp));
  }
  if (m.stdout_hex) sinks_.push_back(std::make_unique<HexMidiSink>(stdout));
  if (!m.smf_path.empty()) sinks_.push_back(std::make_unique<SmfMidiSink>(m.smf_path, m.smf));
}

void Session::add_sink(std::unique_ptr<MidiSink> sink) {
  if (auto* udp = dynamic_cast<UdpMidiSink*>(sink.get())) udp_sinks_.push_back(udp);
  sinks_.push_back(std::move(sink));
}

void Session::open_csv(const std::filesystem::path& path) {
  csv_.reset(std::fopen(path.c_str(), "wb"));
  if (!csv_) throw Error(ErrorCode::Sink, "cannot write " + path.string());
  std::fprintf(csv_.get(), "%s\n", kCsvHeader);
}

std::uint16_t Session::listen(const std::string& address) {
  server_ = std::make_unique<ControlServer>(store_, pipeline_.config().service.downscale);
  return server_->start(address);
}

void Session::sync_config() {
  if (store_.revision() != revision_) {
    auto snap = store_.snapshot();
    pipeline_.reconfigure(snap.config);
    revision_ = snap.revision;
  }
  for (CalibrationPhase p : store_.take_calibration_requests()) calibrator_.begin(p);
}

FrameResult Session::process(Frame f) {
  sync_config();
  const auto start = Clock::now();
  FrameResult r = pipeline_.process(f);

  const auto out_start = Clock::now();
  if (calibrator_.capturing()) {
    const auto phase = *calibrator_.phase();
    const char* phase_name = phase == CalibrationPhase::Closed ? "closed" : "open";
    if (calibrator_.observe(r.filtered)) {
      json note{{"type", "calibration"}, {"phase", phase_name}, {"status", "captured"}};
      if (calibrator_.has(CalibrationPhase::Closed) && calibrator_.has(CalibrationPhase::Open)) {
        try {
          auto cal = pipeline_.config().calibration;
          calibrator_.apply(cal, guided_targets(pipeline_.config().bindings));
          store_.set_calibration(cal);
          note["status"] = "applied";
        } catch (const Error& e) {
          note["status"] = "rejected";
          note["reason"] = e.what();
        }
      }
      if (server_) server_->notify(note.dump());
    }
  }

  for (const auto& e : r.events) {
    for (auto& s : sinks_) s->send(e);
  }
  if (csv_) std::fprintf(csv_.get(), "%s\n", csv_row(r).c_str());
  const auto end = Clock::now();
  r.timings[std::size_t(Stage::Output)] = std::chrono::duration<double, std::micro>(end - out_start).count();
  const double frame_us = std::chrono::duration<double, std::micro>(end - start).count();

  const double now_ms = std::chrono::duration<double, std::milli>(end.time_since_epoch()).count();
  if (last_frame_clock_ms_ >= 0.0 && now_ms > last_frame_clock_ms_) {
    const double inst = 1000.0 / (now_ms - last_frame_clock_ms_);
    fps_estimate_ = fps_estimate_ > 0.0 ? 0.9 * fps_estimate_ + 0.1 * inst : inst;
  }
  last_frame_clock_ms_ = now_ms;

  if (server_ && server_->viewers() > 0) {
    auto t = std::make_shared<TelemetryFrame>();
    t->frame = r.frame_id;
    t->t_ms = r.t_ms;
    t->blob = r.blob;
    t->shape = r.filtered;
    t->cc = r.events;
    t->mask = r.mask;
    t->fps = fps_estimate_;
    t->proc_ms = frame_us / 1000.0;
    t->revision = revision_;
    server_->publish(std::move(t));
  }

  record(r, frame_us);
  return r;
}

void Session::record(const FrameResult& r, double frame_us) {
  frame_us_.push_back(frame_us);
  for (std::size_t i = 0; i < kStageCount; ++i) stage_us_[i].push_back(r.timings[i]);
  events_ += r.events.size();
}

SessionReport Session::run(FrameSource& source, const RunOptions& opt) {
  SessionReport& rs = run_state_;
  const auto start = Clock::now();
  const std::uint64_t frames_before = frame_us_.size();
  double offset_ms = 0.0;
  double last_t = 0.0;
  std::uint32_t pass = 0;

  while (!stop_requested()) {
    std::uint64_t in_pass = 0;
    while (!stop_requested()) {
      std::optional<Frame> f;
      try {
        f = source.next();
      } catch (const Error& e) {
        rs.truncated = true;
        rs.error = e.what();
        break;
      }
      if (!f) break;
      ++in_pass;
      if (opt.realtime) {
        const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double, std::milli>(offset_ms + f->t_ms));
        std::this_thread::sleep_until(due);
        f->t_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      } else {
        f->t_ms += offset_ms;
      }
      last_t = f->t_ms;
      process(std::move(*f));
    }
    if (source.truncated()) rs.truncated = true;
    if (!rs.error.empty() || in_pass == 0) break;
    ++pass;
    if (!opt.loop && pass >= opt.repeat) break;
    offset_ms = last_t + 1000.0 / source.fps();
    source.rewind();
  }

  rs.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  const auto processed = frame_us_.size() - frames_before;
  rs.fps = rs.wall_s > 0.0 ? double(processed) / rs.wall_s : 0.0;
  auto out = report();
  out.wall_s = rs.wall_s;
  out.fps = rs.fps;
  return out;
}

void Session::finish() {
  if (finished_) return;
  finished_ = true;
  for (auto& s : sinks_) s->finish();
  if (csv_) std::fflush(csv_.get());
}

SessionReport Session::report() const {
  SessionReport r = run_state_;
  r.frames = frame_us_.size();
  r.noblob = pipeline_.state().frames_noblob;
  r.events = events_;
  r.frame = summarize(frame_us_);
  for (std::size_t i = 0; i < kStageCount; ++i) r.stages[i] = summarize(stage_us_[i]);
  r.udp_dropped = 0;
  for (const auto* u : udp_sinks_) r.udp_dropped += u->dropped();
  r.telemetry_dropped = server_ ? server_->dropped() : 0;
  return r;
}

// ---------------------------------------------------------------------------

RuntimeConfig calibrate_from_source(const RuntimeConfig& cfg, FrameSource& source, std::uint64_t closed_at,
                                    std::uint64_t open_at, int frames) {
  if (frames < 1) throw Error(ErrorCode::Calibration, "frames per phase must be >= 1");
  const auto n = std::uint64_t(frames);
  if (closed_at < open_at + n && open_at < closed_at + n)
    throw Error(ErrorCode::Calibration, "closed and open windows overlap");

  Pipeline pipeline(cfg);
  GuidedCalibrator cal(frames);
  std::uint64_t k = 0;
  while (auto f = source.next()) {
    if (k == closed_at) cal.begin(CalibrationPhase::Closed);
    if (k == open_at) cal.begin(CalibrationPhase::Open);
    const auto r = pipeline.process(*f);
    cal.observe(r.filtered);
    ++k;
  }
  if (!cal.has(CalibrationPhase::Closed) || !cal.has(CalibrationPhase::Open))
    throw Error(ErrorCode::Calibration,
                "source ended after " + std::to_string(k) + " frames, before both phases were captured");
  RuntimeConfig out = cfg;
  cal.apply(out.calibration, guided_targets(cfg.bindings));
  out.validate();
  return out;
}

}  // namespace mouthpipe
