#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mouthpipe/filters.hpp"
#include "mouthpipe/mapping.hpp"
#include "mouthpipe/midi.hpp"
#include "mouthpipe/segmentation.hpp"

namespace mouthpipe {

struct MidiOutputConfig {
  bool dedup = true;
  std::string udp;  // "host:port", empty = off
  bool stdout_hex = false;
  std::string smf_path;  // empty = off
  SmfConfig smf;
};

struct ServiceConfig {
  std::string listen = "127.0.0.1:8765";
  int downscale = 2;
};

/// Everything the pipeline and its outputs can be tuned with. Loaded from and
/// saved to a single JSON document; see README for the schema.
struct RuntimeConfig {
  SegmentationParams segmentation;
  FilterParams filters;
  CalibrationSet calibration = default_calibration();
  std::string preset = "wah";  // label only once bindings are resolved
  std::vector<Binding> bindings = find_preset("wah")->bindings;
  MidiOutputConfig midi;
  ServiceConfig service;
  double source_fps = 30.0;

  void validate() const;
};

nlohmann::json to_json(const RuntimeConfig& c);
/// Overlays the fields present in `j` onto `base` and validates the result.
/// Explicit bindings take precedence over a preset name.
RuntimeConfig config_from_json(const nlohmann::json& j, const RuntimeConfig& base = {});
RuntimeConfig parse_config(const std::string& text, const RuntimeConfig& base = {});
RuntimeConfig load_config(const std::filesystem::path& path);
void save_config(const RuntimeConfig& c, const std::filesystem::path& path);

nlohmann::json to_json(const Binding& b);
Binding binding_from_json(const nlohmann::json& j);

}  // namespace mouthpipe
