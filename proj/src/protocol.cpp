#include "mouthpipe/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

using nlohmann::json;

std::string_view command_name(const Command& c) {
  struct Visitor {
    std::string_view operator()(const SetThresholds&) const { return "set_thresholds"; }
    std::string_view operator()(const ToggleFilter&) const { return "toggle_filter"; }
    std::string_view operator()(const SetFilterParams&) const { return "set_filter_params"; }
    std::string_view operator()(const SetMapping&) const { return "set_mapping"; }
    std::string_view operator()(const Calibrate&) const { return "calibrate"; }
    std::string_view operator()(const GetConfig&) const { return "get_config"; }
  };
  return std::visit(Visitor{}, c);
}

namespace {

std::optional<int> int_field(const json& j, const std::string& cmd, const char* key, int lo, int hi) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  const auto& v = j[key];
  if (!v.is_number()) throw Rejection(cmd, std::string(key) + " must be a number");
  const double d = v.get<double>();
  if (d != std::floor(d)) throw Rejection(cmd, std::string(key) + " must be an integer");
  if (d < lo || d > hi) throw Rejection(cmd, std::string(key) + " out of range");
  return int(d);
}

std::optional<double> real_field(const json& j, const std::string& cmd, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw Rejection(cmd, std::string(key) + " must be a number");
  const double d = j[key].get<double>();
  if (!std::isfinite(d)) throw Rejection(cmd, std::string(key) + " out of range");
  return d;
}

}  // namespace

Command parse_command(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw Rejection("", "message must be an object with a string \"type\"");
  const std::string type = j["type"].get<std::string>();

  if (type == "set_thresholds") {
    SetThresholds c;
    c.i_min = int_field(j, type, "i_min", 0, 255);
    c.r_max = int_field(j, type, "r_max", 0, 255);
    if (!c.i_min && !c.r_max) throw Rejection(type, "needs i_min and/or r_max");
    return c;
  }
  if (type == "toggle_filter") {
    ToggleFilter c;
    if (!j.contains("which") || !j["which"].is_string()) throw Rejection(type, "which must be \"A\" or \"B\"");
    const auto which = j["which"].get<std::string>();
    if (which != "A" && which != "B") throw Rejection(type, "which must be \"A\" or \"B\"");
    if (!j.contains("on") || !j["on"].is_boolean()) throw Rejection(type, "on must be a boolean");
    c.which = which[0];
    c.on = j["on"].get<bool>();
    return c;
  }
  if (type == "set_filter_params") {
    SetFilterParams c;
    c.t_a = real_field(j, type, "t_a");
    c.alpha = real_field(j, type, "alpha");
    c.k_max = int_field(j, type, "k_max", 1, 1 << 20);
    if (c.t_a && !(*c.t_a > 0.0)) throw Rejection(type, "t_a out of range");
    if (c.alpha && !(*c.alpha > 0.0 && *c.alpha <= 1.0)) throw Rejection(type, "alpha out of range");
    if (!c.t_a && !c.alpha && !c.k_max) throw Rejection(type, "needs t_a, alpha and/or k_max");
    return c;
  }
  if (type == "set_mapping") {
    SetMapping c;
    if (j.contains("bindings") && !j["bindings"].is_null()) {
      if (!j["bindings"].is_array() || j["bindings"].empty()) throw Rejection(type, "bindings must be a nonempty array");
      std::vector<Binding> bs;
      try {
        for (const auto& b : j["bindings"]) bs.push_back(binding_from_json(b));
      } catch (const Error& e) {
        throw Rejection(type, e.what());
      } catch (const json::exception& e) {
        throw Rejection(type, std::string("malformed binding: ") + e.what());
      }
      c.bindings = std::move(bs);
    } else if (j.contains("preset") && j["preset"].is_string()) {
      const auto name = j["preset"].get<std::string>();
      if (!find_preset(name)) throw Rejection(type, "unknown preset " + name);
      c.preset = name;
    } else {
      throw Rejection(type, "needs preset or bindings");
    }
    return c;
  }
  if (type == "calibrate") {
    Calibrate c;
    const auto phase = j.contains("phase") && j["phase"].is_string() ? j["phase"].get<std::string>() : "";
    if (phase == "closed") c.phase = CalibrationPhase::Closed;
    else if (phase == "open") c.phase = CalibrationPhase::Open;
    else throw Rejection(type, "phase must be \"closed\" or \"open\"");
    return c;
  }
  if (type == "get_config") return GetConfig{};
  throw Rejection(type, "unknown command type " + type);
}

RuntimeConfig apply_command(const RuntimeConfig& cfg, const Command& cmd) {
  RuntimeConfig next = cfg;
  struct Visitor {
    RuntimeConfig& c;
    void operator()(const SetThresholds& s) const {
      if (s.i_min) c.segmentation.i_min = *s.i_min;
      if (s.r_max) c.segmentation.r_max = *s.r_max;
    }
    void operator()(const ToggleFilter& t) const { (t.which == 'A' ? c.filters.a_enabled : c.filters.b_enabled) = t.on; }
    void operator()(const SetFilterParams& p) const {
      if (p.t_a) c.filters.t_a = *p.t_a;
      if (p.alpha) c.filters.alpha = *p.alpha;
      if (p.k_max) c.filters.k_max = *p.k_max;
    }
    void operator()(const SetMapping& m) const {
      if (m.bindings) {
        c.bindings = *m.bindings;
        c.preset = "custom";
      } else if (m.preset) {
        const auto p = find_preset(*m.preset);
        c.preset = p->name;
        c.bindings = p->bindings;
      }
    }
    void operator()(const Calibrate&) const {}
    void operator()(const GetConfig&) const {}
  };
  std::visit(Visitor{next}, cmd);
  try {
    next.validate();
  } catch (const Error& e) {
    throw Rejection(std::string(command_name(cmd)), e.what());
  }
  return next;
}

ConfigStore::ConfigStore(RuntimeConfig cfg) : cfg_(std::move(cfg)) {}

ConfigStore::Snapshot ConfigStore::snapshot() const {
  std::lock_guard lk(mu_);
  return {cfg_, revision_};
}

std::uint64_t ConfigStore::revision() const {
  std::lock_guard lk(mu_);
  return revision_;
}

std::uint64_t ConfigStore::apply(const Command& c) {
  std::lock_guard lk(mu_);
  if (std::holds_alternative<GetConfig>(c)) return revision_;
  cfg_ = apply_command(cfg_, c);
  if (const auto* cal = std::get_if<Calibrate>(&c)) calibration_requests_.push_back(cal->phase);
  return ++revision_;
}

std::uint64_t ConfigStore::set_calibration(const CalibrationSet& cal) {
  std::lock_guard lk(mu_);
  cfg_.calibration = cal;
  return ++revision_;
}

std::vector<CalibrationPhase> ConfigStore::take_calibration_requests() {
  std::lock_guard lk(mu_);
  return std::exchange(calibration_requests_, {});
}

std::string handle_command_text(ConfigStore& store, const std::string& text) {
  std::string cmd_name;
  try {
    const json j = json::parse(text);
    const Command cmd = parse_command(j);
    cmd_name = command_name(cmd);
    json reply{{"type", "ack"}, {"cmd", cmd_name}};
    if (std::holds_alternative<GetConfig>(cmd)) {
      const auto snap = store.snapshot();
      reply["revision"] = snap.revision;
      reply["config"] = to_json(snap.config);
    } else {
      reply["revision"] = store.apply(cmd);
    }
    return reply.dump();
  } catch (const Rejection& r) {
    return json{{"type", "rejection"}, {"cmd", r.cmd()}, {"reason", r.what()}}.dump();
  } catch (const json::exception& e) {
    return json{{"type", "rejection"}, {"cmd", cmd_name}, {"reason", std::string("malformed JSON: ") + e.what()}}.dump();
  }
}

// ---------------------------------------------------------------------------

Mask downscale_mask(const Mask& m, int factor) {
  if (factor < 1) throw Error(ErrorCode::OutOfRange, "downscale factor must be >= 1");
  if (factor == 1) return m;
  const auto f = std::uint32_t(factor);
  Mask out((m.width + f - 1) / f, (m.height + f - 1) / f);
  for (std::uint32_t y = 0; y < m.height; ++y) {
    for (std::uint32_t x = 0; x < m.width; ++x) {
      if (m.get(x, y)) out.set(x / f, y / f);
    }
  }
  return out;
}

std::vector<std::uint32_t> encode_mask_rle(const Mask& m, int factor) {
  const Mask d = downscale_mask(m, factor);
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t len = 0;
  for (std::uint8_t b : d.bits) {
    if (b == current) {
      ++len;
    } else {
      runs.push_back(len);
      current = b;
      len = 1;
    }
  }
  runs.push_back(len);
  return runs;
}

Mask decode_mask_rle(const std::vector<std::uint32_t>& runs, std::uint32_t width, std::uint32_t height) {
  Mask m(width, height);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint32_t len : runs) {
    if (len > m.bits.size() - pos) throw Error(ErrorCode::OutOfRange, "RLE runs overflow the mask");
    std::fill_n(m.bits.begin() + std::ptrdiff_t(pos), len, value);
    pos += len;
    value ^= 1;
  }
  if (pos != m.bits.size()) throw Error(ErrorCode::OutOfRange, "RLE runs do not cover the mask");
  return m;
}

std::string TelemetryFrame::to_json_text(int downscale) const {
  json cc_list = json::array();
  for (const auto& e : cc) cc_list.push_back({e.channel, e.controller, e.value});
  const auto f = std::uint32_t(std::max(1, downscale));
  json j{
      {"type", "telemetry"},
      {"frame", frame},
      {"t_ms", t_ms},
      {"blob", blob},
      {"shape",
       {{"height", shape.height},
        {"width", shape.width},
        {"major", shape.major},
        {"minor", shape.minor},
        {"q", shape.q},
        {"m", shape.m},
        {"area", shape.area},
        {"cx", shape.cx},
        {"cy", shape.cy}}},
      {"cc", cc_list},
      {"mask",
       {{"width", (mask.width + f - 1) / f},
        {"height", (mask.height + f - 1) / f},
        {"downscale", f},
        {"runs", encode_mask_rle(mask, int(f))}}},
      {"stats", {{"fps", fps}, {"proc_ms", proc_ms}}},
      {"revision", revision},
  };
  return j.dump();
}

}  // namespace mouthpipe
