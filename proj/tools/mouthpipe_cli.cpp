// mouthpipe: command line front end over the C API.
//
//   run        live pipeline + control service
//   offline    batch run writing a per-frame CSV and a Standard MIDI File
//   bench      throughput/latency report as JSON
//   synth      render a scenario file to an MVS1 stream
//   calibrate  guided calibration from a recorded source
//
// Exit status: 1 config error, 2 source error, 3 sink/service error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mouthpipe/mouthpipe.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSource = 2;
constexpr int kExitSink = 3;

mp_session* g_session = nullptr;

extern "C" void on_signal(int) {
  if (g_session) mp_session_request_stop(g_session);
}

int exit_code_for(mp_status st) {
  switch (st) {
    case MP_ERR_SOURCE: return kExitSource;
    case MP_ERR_SINK:
    case MP_ERR_SERVICE: return kExitSink;
    default: return kExitConfig;
  }
}

int fail(mp_status st, const char* context) {
  std::fprintf(stderr, "mouthpipe: %s: %s\n", context, mp_last_error());
  return exit_code_for(st);
}

struct ConfigPtr {
  mp_config* p = nullptr;
  ~ConfigPtr() { mp_config_free(p); }
};
struct SourcePtr {
  mp_source* p = nullptr;
  ~SourcePtr() { mp_source_free(p); }
};
struct SessionPtr {
  mp_session* p = nullptr;
  ~SessionPtr() {
    g_session = nullptr;
    mp_session_free(p);
  }
};

std::string take_string(char* s) {
  std::string out = s ? s : "";
  mp_string_free(s);
  return out;
}

/// --config, else $MOUTHPIPE_CONFIG, else built-in defaults.
mp_status load_config(const std::string& flag_path, mp_config** out) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("MOUTHPIPE_CONFIG")) path = env;
  }
  return path.empty() ? mp_config_new(out) : mp_config_load(path.c_str(), out);
}

std::string config_path(const std::string& flag_path) {
  if (!flag_path.empty()) return flag_path;
  const char* env = std::getenv("MOUTHPIPE_CONFIG");
  return env ? env : "";
}

struct Common {
  std::string source;
  std::string config;
  double fps = 0.0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--source", c.source, "PPM directory, MVS1 stream or scenario .json")->required();
  cmd->add_option("--config", c.config, "JSON config file (falls back to $MOUTHPIPE_CONFIG)");
  cmd->add_option("--fps", c.fps, "frame rate for PPM sequences");
}

/// Loads the config, applies the patch and opens the source.
int prepare(const Common& c, const nlohmann::json& patch, ConfigPtr& cfg, SourcePtr& src) {
  if (auto st = load_config(c.config, &cfg.p); st != MP_OK) return fail(st, "config");
  nlohmann::json p = patch;
  if (c.fps > 0.0) p["source"]["fps"] = c.fps;
  if (!p.empty()) {
    if (auto st = mp_config_merge(cfg.p, p.dump().c_str()); st != MP_OK) return fail(st, "config");
  }
  double fps = c.fps;
  if (fps <= 0.0) {
    char* json = nullptr;
    if (mp_config_to_json(cfg.p, &json) == MP_OK) fps = nlohmann::json::parse(take_string(json))["source"]["fps"];
  }
  if (auto st = mp_source_open(c.source.c_str(), fps, &src.p); st != MP_OK) return fail(st, "source");
  return 0;
}

int print_report(mp_session* s) {
  char* json = nullptr;
  if (auto st = mp_session_report_json(s, &json); st != MP_OK) return fail(st, "report");
  std::printf("%s\n", take_string(json).c_str());
  std::fflush(stdout);
  return 0;
}

int cmd_run(const Common& c, const std::string& listen, const std::string& udp, bool hex, bool loop) {
  nlohmann::json patch = nlohmann::json::object();
  if (!listen.empty()) patch["service"]["listen"] = listen;
  if (!udp.empty()) patch["midi"]["udp"] = udp;
  if (hex) patch["midi"]["stdout_hex"] = true;
  ConfigPtr cfg;
  SourcePtr src;
  if (int rc = prepare(c, patch, cfg, src)) return rc;

  char* json = nullptr;
  mp_config_to_json(cfg.p, &json);
  const auto resolved = nlohmann::json::parse(take_string(json));

  SessionPtr session;
  if (auto st = mp_session_new(cfg.p, &session.p); st != MP_OK) return fail(st, "session");
  if (auto st = mp_session_open_outputs(session.p); st != MP_OK) return fail(st, "midi output");
  uint16_t port = 0;
  const std::string address = resolved["service"]["listen"];
  if (auto st = mp_session_listen(session.p, address.c_str(), &port); st != MP_OK) return fail(st, "service");
  std::fprintf(stderr, "mouthpipe: control service on port %u\n", unsigned(port));

  g_session = session.p;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto st = mp_session_run(session.p, src.p, uint32_t(MP_RUN_REALTIME) | (loop ? uint32_t(MP_RUN_LOOP) : 0u), 1);
  mp_session_finish(session.p);
  print_report(session.p);
  return st == MP_OK ? 0 : fail(st, "run");
}

int cmd_offline(const Common& c, const std::string& csv, const std::string& smf) {
  nlohmann::json patch;
  patch["midi"]["udp"] = "";
  patch["midi"]["stdout_hex"] = false;
  patch["midi"]["smf"]["path"] = smf;
  ConfigPtr cfg;
  SourcePtr src;
  if (int rc = prepare(c, patch, cfg, src)) return rc;

  SessionPtr session;
  if (auto st = mp_session_new(cfg.p, &session.p); st != MP_OK) return fail(st, "session");
  if (auto st = mp_session_open_outputs(session.p); st != MP_OK) return fail(st, "smf");
  if (!csv.empty()) {
    if (auto st = mp_session_open_csv(session.p, csv.c_str()); st != MP_OK) return fail(st, "csv");
  }
  const auto st = mp_session_run(session.p, src.p, 0, 1);
  if (auto fst = mp_session_finish(session.p); fst != MP_OK) return fail(fst, "finish");
  return st == MP_OK ? 0 : fail(st, "offline");
}

int cmd_bench(const Common& c, unsigned repeat) {
  nlohmann::json patch;
  patch["midi"]["udp"] = "";
  patch["midi"]["stdout_hex"] = false;
  patch["midi"]["smf"]["path"] = "";
  ConfigPtr cfg;
  SourcePtr src;
  if (int rc = prepare(c, patch, cfg, src)) return rc;
  SessionPtr session;
  if (auto st = mp_session_new(cfg.p, &session.p); st != MP_OK) return fail(st, "session");
  const auto st = mp_session_run(session.p, src.p, 0, repeat);
  print_report(session.p);
  return st == MP_OK ? 0 : fail(st, "bench");
}

int cmd_synth(const std::string& scenario, const std::string& out) {
  uint64_t n = 0;
  if (auto st = mp_scenario_render(scenario.c_str(), out.c_str(), &n); st != MP_OK) return fail(st, "synth");
  std::fprintf(stderr, "mouthpipe: wrote %llu frames to %s\n", static_cast<unsigned long long>(n), out.c_str());
  return 0;
}

int cmd_calibrate(const Common& c, uint64_t closed_at, uint64_t open_at, unsigned frames, std::string out) {
  ConfigPtr cfg;
  SourcePtr src;
  if (int rc = prepare(c, nlohmann::json::object(), cfg, src)) return rc;
  if (out.empty()) out = config_path(c.config);
  if (out.empty()) {
    std::fprintf(stderr, "mouthpipe: calibrate needs --config or --out to write the result\n");
    return kExitConfig;
  }
  if (auto st = mp_calibrate_guided(cfg.p, src.p, closed_at, open_at, frames); st != MP_OK)
    return fail(st, "calibrate");
  if (auto st = mp_config_save(cfg.p, out.c_str()); st != MP_OK) return fail(st, "save");
  std::fprintf(stderr, "mouthpipe: calibration written to %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mouth-shape video to MIDI control-change pipeline"};
  app.require_subcommand(1);

  Common run_c, off_c, bench_c, cal_c;
  std::string listen, udp, csv, smf, scenario, synth_out, cal_out;
  bool hex = false, loop = false;
  unsigned repeat = 1, frames = 30;
  uint64_t closed_at = 0, open_at = 30;

  auto* run = app.add_subcommand("run", "live pipeline with control service");
  add_common(run, run_c);
  run->add_option("--listen", listen, "control service address host:port");
  run->add_option("--midi-udp", udp, "send MIDI datagrams to host:port");
  run->add_flag("--midi-hex", hex, "print MIDI messages as hex on stdout");
  run->add_flag("--loop", loop, "replay the source until interrupted");

  auto* off = app.add_subcommand("offline", "batch analysis to CSV and SMF");
  add_common(off, off_c);
  off->add_option("--out-csv", csv, "per-frame shape parameters")->required();
  off->add_option("--out-smf", smf, "Standard MIDI File of the emitted control changes")->required();

  auto* bench = app.add_subcommand("bench", "throughput report");
  add_common(bench, bench_c);
  bench->add_option("--repeat", repeat, "passes over the source")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "render a scenario to an MVS1 stream");
  synth->add_option("--scenario", scenario, "scenario JSON")->required();
  synth->add_option("--out", synth_out, "output MVS1 file")->required();

  auto* cal = app.add_subcommand("calibrate", "guided calibration from a recording");
  add_common(cal, cal_c);
  cal->add_option("--closed-at", closed_at, "first frame of the closed-mouth phase");
  cal->add_option("--open-at", open_at, "first frame of the open-mouth phase");
  cal->add_option("--frames", frames, "frames per phase")->check(CLI::PositiveNumber);
  cal->add_option("--out", cal_out, "where to write the calibrated config (default: the input config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*run) return cmd_run(run_c, listen, udp, hex, loop);
  if (*off) return cmd_offline(off_c, csv, smf);
  if (*bench) return cmd_bench(bench_c, repeat);
  if (*synth) return cmd_synth(scenario, synth_out);
  if (*cal) return cmd_calibrate(cal_c, closed_at, open_at, frames, cal_out);
  return 0;
}
