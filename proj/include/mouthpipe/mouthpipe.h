/* mouthpipe.h
 *
 * C interface to the mouth-shape MIDI controller pipeline: video frames in,
 * MIDI control changes out, with a WebSocket control/telemetry service.
 *
 * All objects are opaque handles created by mp_*_new, mp_*_open or mp_*_load and released
 * by the matching mp_*_free. Every fallible call returns an mp_status; on
 * failure mp_last_error() describes the problem (per thread). Strings
 * returned through char** are owned by the caller and released with
 * mp_string_free.
 */
#ifndef MOUTHPIPE_H
#define MOUTHPIPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(MOUTHPIPE_BUILDING)
#define MP_API __attribute__((visibility("default")))
#else
#define MP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mp_status {
  MP_OK = 0,
  MP_END_OF_STREAM = 1,
  MP_ERR_INVALID_ARGUMENT = -1,
  MP_ERR_CONFIG = -2,
  MP_ERR_SOURCE = -3,
  MP_ERR_SINK = -4,
  MP_ERR_SERVICE = -5,
  MP_ERR_CALIBRATION = -6,
  MP_ERR_RANGE = -7,
  MP_ERR_INTERNAL = -99
} mp_status;

typedef struct mp_config mp_config;
typedef struct mp_source mp_source;
typedef struct mp_session mp_session;

typedef struct mp_frame_view {
  uint32_t width;
  uint32_t height;
  double t_ms;
  const uint8_t* pixels; /* width*height*3 bytes, RGB24 row-major */
} mp_frame_view;

typedef struct mp_shape {
  double height, width, major, minor, q, m, area, cx, cy;
} mp_shape;

typedef struct mp_control_event {
  double t_ms;
  int32_t channel;
  int32_t controller;
  int32_t value;
} mp_control_event;

typedef struct mp_frame_summary {
  uint64_t frame_id;
  double t_ms;
  int32_t blob;
  mp_shape shape;    /* measured, held across frames without a blob */
  mp_shape filtered; /* after the temporal filters */
  uint32_t event_count;
  uint64_t revision;
} mp_frame_summary;

enum {
  MP_RUN_REALTIME = 1u << 0,
  MP_RUN_LOOP = 1u << 1
};

MP_API const char* mp_version(void);
MP_API const char* mp_last_error(void);
MP_API const char* mp_status_name(mp_status status);
MP_API void mp_string_free(char* s);

/* ---- configuration (JSON) ---------------------------------------------- */
MP_API mp_status mp_config_new(mp_config** out);
MP_API mp_status mp_config_load(const char* path, mp_config** out);
MP_API mp_status mp_config_parse(const char* json, mp_config** out);
/* Overlays the fields present in json_patch; unchanged on failure. */
MP_API mp_status mp_config_merge(mp_config* cfg, const char* json_patch);
MP_API mp_status mp_config_to_json(const mp_config* cfg, char** out_json);
MP_API mp_status mp_config_save(const mp_config* cfg, const char* path);
MP_API void mp_config_free(mp_config* cfg);

/* ---- frame sources ----------------------------------------------------- */
/* Directory of .ppm files, a scenario .json, a single .ppm, or an MVS1 stream.
 * fps applies to PPM inputs. */
MP_API mp_status mp_source_open(const char* path, double fps, mp_source** out);
/* The frame view stays valid until the next call on the source. */
MP_API mp_status mp_source_next(mp_source* src, mp_frame_view* out);
MP_API mp_status mp_source_rewind(mp_source* src);
MP_API uint64_t mp_source_delivered(const mp_source* src);
MP_API int mp_source_truncated(const mp_source* src);
MP_API double mp_source_fps(const mp_source* src);
MP_API void mp_source_free(mp_source* src);

/* Renders a scenario file into an MVS1 raw stream. */
MP_API mp_status mp_scenario_render(const char* scenario_path, const char* out_path, uint64_t* frames_written);

/* ---- sessions ---------------------------------------------------------- */
MP_API mp_status mp_session_new(const mp_config* cfg, mp_session** out);
/* Opens the MIDI sinks named in the config's midi section. */
MP_API mp_status mp_session_open_outputs(mp_session* s);
MP_API mp_status mp_session_open_csv(mp_session* s, const char* path);
/* Starts the control service on "host:port"; port 0 picks a free port. */
MP_API mp_status mp_session_listen(mp_session* s, const char* address, uint16_t* bound_port);
MP_API mp_status mp_session_process(mp_session* s, const mp_frame_view* frame, mp_frame_summary* out);
/* Copies up to cap events emitted by the last processed frame. */
MP_API mp_status mp_session_last_events(const mp_session* s, mp_control_event* events, size_t cap, size_t* count);
MP_API mp_status mp_session_run(mp_session* s, mp_source* src, uint32_t flags, uint32_t repeat);
/* Async-signal-safe. */
MP_API void mp_session_request_stop(mp_session* s);
/* Flushes sinks, writing the SMF if one is configured. */
MP_API mp_status mp_session_finish(mp_session* s);
MP_API mp_status mp_session_report_json(const mp_session* s, char** out_json);
/* Live configuration including service-applied commands. */
MP_API mp_status mp_session_config_json(const mp_session* s, char** out_json);
MP_API void mp_session_free(mp_session* s);

/* ---- guided calibration ------------------------------------------------ */
/* Treats `frames` frames from closed_at as the closed-mouth phase and from
 * open_at as the open phase; updates cfg's calibration in place. */
MP_API mp_status mp_calibrate_guided(mp_config* cfg, mp_source* src, uint64_t closed_at, uint64_t open_at,
                                     uint32_t frames);

/* ---- encoders ---------------------------------------------------------- */
MP_API mp_status mp_encode_cc(const mp_control_event* e, uint8_t out[3]);

#ifdef __cplusplus
}
#endif

#endif /* MOUTHPIPE_H */
