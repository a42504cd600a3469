#include "mouthpipe/config.hpp"

#include <fstream>
#include <sstream>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

using nlohmann::json;

void RuntimeConfig::validate() const {
  try {
    segmentation.validate();
    filters.validate();
    for (const auto& c : calibration) c.validate();
    if (bindings.empty()) throw Error(ErrorCode::Config, "mapping needs at least one binding");
    for (const auto& b : bindings) b.validate();
    if (midi.smf.ticks_per_quarter < 1 || midi.smf.ticks_per_quarter > 0x7FFF)
      throw Error(ErrorCode::OutOfRange, "ticks_per_quarter out of range");
    if (midi.smf.tempo_us_per_quarter == 0 || midi.smf.tempo_us_per_quarter > 0xFFFFFF)
      throw Error(ErrorCode::OutOfRange, "tempo_us_per_quarter out of range");
    if (service.downscale < 1) throw Error(ErrorCode::OutOfRange, "downscale must be >= 1");
    if (!(source_fps > 0.0)) throw Error(ErrorCode::ZeroFps, "source fps must be positive");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config || e.code() == ErrorCode::DegenerateRange) throw;
    throw Error(ErrorCode::Config, e.what());
  }
}

json to_json(const Binding& b) {
  return {{"source", to_string(b.source)},
          {"curve", to_string(b.curve)},
          {"channel", b.channel},
          {"controller", b.controller}};
}

Binding binding_from_json(const json& j) {
  Binding b;
  const auto src = parse_source(j.at("source").get<std::string>());
  if (!src) throw Error(ErrorCode::Config, "unknown binding source " + j.at("source").get<std::string>());
  b.source = *src;
  if (j.contains("curve")) {
    const auto c = parse_curve(j["curve"].get<std::string>());
    if (!c) throw Error(ErrorCode::Config, "unknown curve " + j["curve"].get<std::string>());
    b.curve = *c;
  }
  b.channel = j.value("channel", 0);
  b.controller = j.at("controller").get<int>();
  b.validate();
  return b;
}

json to_json(const RuntimeConfig& c) {
  json cal = json::object();
  for (Source s : kAllSources) {
    const auto& r = calibration_for(c.calibration, s);
    cal[std::string(to_string(s))] = {{"p_min", r.p_min}, {"p_max", r.p_max}, {"mode", to_string(r.mode)}};
  }
  json bindings = json::array();
  for (const auto& b : c.bindings) bindings.push_back(to_json(b));
  return {
      {"segmentation",
       {{"i_min", c.segmentation.i_min}, {"r_max", c.segmentation.r_max}, {"min_blob_px", c.segmentation.min_blob_px}}},
      {"filters",
       {{"a_enabled", c.filters.a_enabled},
        {"t_a", c.filters.t_a},
        {"k_max", c.filters.k_max},
        {"b_enabled", c.filters.b_enabled},
        {"alpha", c.filters.alpha}}},
      {"calibration", cal},
      {"mapping", {{"preset", c.preset}, {"bindings", bindings}}},
      {"midi",
       {{"dedup", c.midi.dedup},
        {"udp", c.midi.udp},
        {"stdout_hex", c.midi.stdout_hex},
        {"smf",
         {{"path", c.midi.smf_path},
          {"ticks_per_quarter", c.midi.smf.ticks_per_quarter},
          {"tempo_us_per_quarter", c.midi.smf.tempo_us_per_quarter}}}}},
      {"service", {{"listen", c.service.listen}, {"downscale", c.service.downscale}}},
      {"source", {{"fps", c.source_fps}}},
  };
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& field) {
  if (obj.contains(key) && !obj[key].is_null()) field = obj[key].get<T>();
}

}  // namespace

RuntimeConfig config_from_json(const json& j, const RuntimeConfig& base) {
  RuntimeConfig c = base;
  try {
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    if (j.contains("segmentation")) {
      const auto& s = j["segmentation"];
      take(s, "i_min", c.segmentation.i_min);
      take(s, "r_max", c.segmentation.r_max);
      take(s, "min_blob_px", c.segmentation.min_blob_px);
    }
    if (j.contains("filters")) {
      const auto& f = j["filters"];
      take(f, "a_enabled", c.filters.a_enabled);
      take(f, "t_a", c.filters.t_a);
      take(f, "k_max", c.filters.k_max);
      take(f, "b_enabled", c.filters.b_enabled);
      take(f, "alpha", c.filters.alpha);
    }
    if (j.contains("calibration")) {
      for (const auto& [name, r] : j["calibration"].items()) {
        const auto src = parse_source(name);
        if (!src) throw Error(ErrorCode::Config, "unknown calibration source " + name);
        auto& cal = calibration_for(c.calibration, *src);
        take(r, "p_min", cal.p_min);
        take(r, "p_max", cal.p_max);
        if (r.contains("mode")) {
          const auto m = parse_calibration_mode(r["mode"].get<std::string>());
          if (!m) throw Error(ErrorCode::Config, "unknown calibration mode for " + name);
          cal.mode = *m;
        }
      }
    }
    if (j.contains("mapping")) {
      const auto& m = j["mapping"];
      if (m.contains("bindings") && !m["bindings"].is_null()) {
        c.bindings.clear();
        for (const auto& b : m["bindings"]) c.bindings.push_back(binding_from_json(b));
        c.preset = m.value("preset", std::string("custom"));
      } else if (m.contains("preset")) {
        const auto name = m["preset"].get<std::string>();
        const auto p = find_preset(name);
        if (!p) throw Error(ErrorCode::Config, "unknown preset " + name);
        c.preset = p->name;
        c.bindings = p->bindings;
      }
    }
    if (j.contains("midi")) {
      const auto& m = j["midi"];
      take(m, "dedup", c.midi.dedup);
      take(m, "udp", c.midi.udp);
      take(m, "stdout_hex", c.midi.stdout_hex);
      if (m.contains("smf")) {
        const auto& s = m["smf"];
        take(s, "path", c.midi.smf_path);
        take(s, "ticks_per_quarter", c.midi.smf.ticks_per_quarter);
        take(s, "tempo_us_per_quarter", c.midi.smf.tempo_us_per_quarter);
      }
    }
    if (j.contains("service")) {
      take(j["service"], "listen", c.service.listen);
      take(j["service"], "downscale", c.service.downscale);
    }
    if (j.contains("source")) take(j["source"], "fps", c.source_fps);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  c.validate();
  return c;
}

RuntimeConfig parse_config(const std::string& text, const RuntimeConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return config_from_json(j, base);
}

RuntimeConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const RuntimeConfig& c, const std::filesystem::path& path) {
  std::ofstream o(path, std::ios::trunc);
  if (!o) throw Error(ErrorCode::Config, "cannot write config " + path.string());
  o << to_json(c).dump(2) << '\n';
}

}  // namespace mouthpipe
