#include "mouthpipe/mouthpipe.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "mouthpipe/config.hpp"
#include "mouthpipe/error.hpp"
#include "mouthpipe/frame_io.hpp"
#include "mouthpipe/session.hpp"

using namespace mouthpipe;

struct mp_config {
  RuntimeConfig cfg;
};

struct mp_source {
  std::unique_ptr<FrameSource> src;
  Frame current;
};

struct mp_session {
  std::unique_ptr<Session> session;
  FrameResult last;
};

namespace {

thread_local std::string g_last_error;

mp_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::DegenerateRange:
      return MP_ERR_CONFIG;
    case ErrorCode::BadMagic:
    case ErrorCode::BadHeader:
    case ErrorCode::UnsupportedMaxval:
    case ErrorCode::Truncated:
    case ErrorCode::ZeroFps:
    case ErrorCode::Source:
      return MP_ERR_SOURCE;
    case ErrorCode::Sink:
    case ErrorCode::UnsortedEvents:
      return MP_ERR_SINK;
    case ErrorCode::Service:
      return MP_ERR_SERVICE;
    case ErrorCode::Calibration:
      return MP_ERR_CALIBRATION;
    case ErrorCode::OutOfRange:
      return MP_ERR_RANGE;
  }
  return MP_ERR_INTERNAL;
}

/// Runs fn, translating exceptions into status codes and mp_last_error().
template <typename Fn>
mp_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MP_ERR_INTERNAL;
  }
}

mp_status invalid(const char* what) {
  g_last_error = what;
  return MP_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

mp_shape to_c(const ShapeParams& s) {
  return {s.height, s.width, s.major, s.minor, s.q, s.m, s.area, s.cx, s.cy};
}

Frame to_frame(const mp_frame_view& v) {
  Frame f(v.width, v.height, v.t_ms);
  std::memcpy(f.pixels.data(), v.pixels, f.pixels.size());
  return f;
}

}  // namespace

extern "C" {

const char* mp_version(void) { return "0.1.0"; }

const char* mp_last_error(void) { return g_last_error.c_str(); }

const char* mp_status_name(mp_status status) {
  switch (status) {
    case MP_OK: return "ok";
    case MP_END_OF_STREAM: return "end of stream";
    case MP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MP_ERR_CONFIG: return "config error";
    case MP_ERR_SOURCE: return "source error";
    case MP_ERR_SINK: return "sink error";
    case MP_ERR_SERVICE: return "service error";
    case MP_ERR_CALIBRATION: return "calibration error";
    case MP_ERR_RANGE: return "value out of range";
    case MP_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void mp_string_free(char* s) { std::free(s); }

// ---- config

mp_status mp_config_new(mp_config** out) {
  if (!out) return invalid("out is null");
  return guarded([&] {
    *out = new mp_config{};
    return MP_OK;
  });
}

mp_status mp_config_load(const char* path, mp_config** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new mp_config{load_config(path)};
    return MP_OK;
  });
}

mp_status mp_config_parse(const char* json, mp_config** out) {
  if (!json || !out) return invalid("null argument");
  return guarded([&] {
    *out = new mp_config{parse_config(json)};
    return MP_OK;
  });
}

mp_status mp_config_merge(mp_config* cfg, const char* json_patch) {
  if (!cfg || !json_patch) return invalid("null argument");
  return guarded([&] {
    cfg->cfg = parse_config(json_patch, cfg->cfg);
    return MP_OK;
  });
}

mp_status mp_config_to_json(const mp_config* cfg, char** out_json) {
  if (!cfg || !out_json) return invalid("null argument");
  return guarded([&] {
    *out_json = dup_string(to_json(cfg->cfg).dump(2));
    return MP_OK;
  });
}

mp_status mp_config_save(const mp_config* cfg, const char* path) {
  if (!cfg || !path) return invalid("null argument");
  return guarded([&] {
    save_config(cfg->cfg, path);
    return MP_OK;
  });
}

void mp_config_free(mp_config* cfg) { delete cfg; }

// ---- sources

mp_status mp_source_open(const char* path, double fps, mp_source** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new mp_source{open_source(path, fps > 0.0 ? fps : 30.0), {}};
    return MP_OK;
  });
}

mp_status mp_source_next(mp_source* src, mp_frame_view* out) {
  if (!src || !out) return invalid("null argument");
  return guarded([&] {
    auto f = src->src->next();
    if (!f) return MP_END_OF_STREAM;
    src->current = std::move(*f);
    *out = {src->current.width, src->current.height, src->current.t_ms, src->current.pixels.data()};
    return MP_OK;
  });
}

mp_status mp_source_rewind(mp_source* src) {
  if (!src) return invalid("null argument");
  return guarded([&] {
    src->src->rewind();
    return MP_OK;
  });
}

uint64_t mp_source_delivered(const mp_source* src) { return src ? src->src->delivered() : 0; }

int mp_source_truncated(const mp_source* src) { return src && src->src->truncated() ? 1 : 0; }

double mp_source_fps(const mp_source* src) { return src ? src->src->fps() : 0.0; }

void mp_source_free(mp_source* src) { delete src; }

mp_status mp_scenario_render(const char* scenario_path, const char* out_path, uint64_t* frames_written) {
  if (!scenario_path || !out_path) return invalid("null argument");
  return guarded([&] {
    const auto n = write_scenario_mvs(load_scenario(scenario_path), out_path);
    if (frames_written) *frames_written = n;
    return MP_OK;
  });
}

// ---- sessions

mp_status mp_session_new(const mp_config* cfg, mp_session** out) {
  if (!cfg || !out) return invalid("null argument");
  return guarded([&] {
    *out = new mp_session{std::make_unique<Session>(cfg->cfg), {}};
    return MP_OK;
  });
}

mp_status mp_session_open_outputs(mp_session* s) {
  if (!s) return invalid("null argument");
  return guarded([&] {
    s->session->open_outputs();
    return MP_OK;
  });
}

mp_status mp_session_open_csv(mp_session* s, const char* path) {
  if (!s || !path) return invalid("null argument");
  return guarded([&] {
    s->session->open_csv(path);
    return MP_OK;
  });
}

mp_status mp_session_listen(mp_session* s, const char* address, uint16_t* bound_port) {
  if (!s || !address) return invalid("null argument");
  return guarded([&] {
    const auto port = s->session->listen(address);
    if (bound_port) *bound_port = port;
    return MP_OK;
  });
}

mp_status mp_session_process(mp_session* s, const mp_frame_view* frame, mp_frame_summary* out) {
  if (!s || !frame || !frame->pixels) return invalid("null argument");
  return guarded([&] {
    s->last = s->session->process(to_frame(*frame));
    if (out) {
      out->frame_id = s->last.frame_id;
      out->t_ms = s->last.t_ms;
      out->blob = s->last.blob ? 1 : 0;
      out->shape = to_c(s->last.shape);
      out->filtered = to_c(s->last.filtered);
      out->event_count = uint32_t(s->last.events.size());
      out->revision = s->session->revision();
    }
    return MP_OK;
  });
}

mp_status mp_session_last_events(const mp_session* s, mp_control_event* events, size_t cap, size_t* count) {
  if (!s || (!events && cap > 0)) return invalid("null argument");
  const auto& ev = s->last.events;
  const size_t n = std::min(cap, ev.size());
  for (size_t i = 0; i < n; ++i) events[i] = {ev[i].t_ms, ev[i].channel, ev[i].controller, ev[i].value};
  if (count) *count = ev.size();
  return MP_OK;
}

mp_status mp_session_run(mp_session* s, mp_source* src, uint32_t flags, uint32_t repeat) {
  if (!s || !src) return invalid("null argument");
  return guarded([&] {
    RunOptions opt;
    opt.realtime = (flags & MP_RUN_REALTIME) != 0;
    opt.loop = (flags & MP_RUN_LOOP) != 0;
    opt.repeat = repeat == 0 ? 1 : repeat;
    const auto report = s->session->run(*src->src, opt);
    if (!report.error.empty()) {
      g_last_error = report.error;
      return MP_ERR_SOURCE;
    }
    return MP_OK;
  });
}

void mp_session_request_stop(mp_session* s) {
  if (s) s->session->request_stop();
}

mp_status mp_session_finish(mp_session* s) {
  if (!s) return invalid("null argument");
  return guarded([&] {
    s->session->finish();
    return MP_OK;
  });
}

mp_status mp_session_report_json(const mp_session* s, char** out_json) {
  if (!s || !out_json) return invalid("null argument");
  return guarded([&] {
    *out_json = dup_string(s->session->report().to_json().dump(2));
    return MP_OK;
  });
}

mp_status mp_session_config_json(const mp_session* s, char** out_json) {
  if (!s || !out_json) return invalid("null argument");
  return guarded([&] {
    *out_json = dup_string(to_json(s->session->store().snapshot().config).dump(2));
    return MP_OK;
  });
}

void mp_session_free(mp_session* s) { delete s; }

// ---- calibration

mp_status mp_calibrate_guided(mp_config* cfg, mp_source* src, uint64_t closed_at, uint64_t open_at,
                              uint32_t frames) {
  if (!cfg || !src) return invalid("null argument");
  return guarded([&] {
    cfg->cfg = calibrate_from_source(cfg->cfg, *src->src, closed_at, open_at,
                                     frames == 0 ? kGuidedFrames : int(frames));
    return MP_OK;
  });
}

mp_status mp_encode_cc(const mp_control_event* e, uint8_t out[3]) {
  if (!e || !out) return invalid("null argument");
  return guarded([&] {
    const auto b = encode_cc({e->t_ms, e->channel, e->controller, e->value});
    std::memcpy(out, b.data(), 3);
    return MP_OK;
  });
}

}  // extern "C"
