#include "mouthpipe/mapping.hpp"

#include <algorithm>
#include <cmath>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

namespace {
constexpr std::array<std::string_view, kSourceCount> kSourceNames{
    "height", "width", "major", "minor", "morph", "area", "cx", "cy"};
}

std::string_view to_string(Source s) { return kSourceNames[std::size_t(s)]; }

std::optional<Source> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return Source(i);
  }
  return std::nullopt;
}

double source_value(const ShapeParams& s, Source src) {
  switch (src) {
    case Source::Height: return s.height;
    case Source::Width: return s.width;
    case Source::Major: return s.major;
    case Source::Minor: return s.minor;
    case Source::Morph: return s.m;
    case Source::Area: return s.area;
    case Source::Cx: return s.cx;
    case Source::Cy: return s.cy;
  }
  return 0.0;
}

std::string_view to_string(Curve c) { return c == Curve::Linear ? "linear" : "inverted"; }

std::optional<Curve> parse_curve(std::string_view name) {
  if (name == "linear") return Curve::Linear;
  if (name == "inverted") return Curve::Inverted;
  return std::nullopt;
}

std::string_view to_string(CalibrationMode m) {
  switch (m) {
    case CalibrationMode::Manual: return "manual";
    case CalibrationMode::AutoExpand: return "auto_expand";
    case CalibrationMode::Guided: return "guided";
  }
  return "manual";
}

std::optional<CalibrationMode> parse_calibration_mode(std::string_view name) {
  if (name == "manual") return CalibrationMode::Manual;
  if (name == "auto_expand") return CalibrationMode::AutoExpand;
  if (name == "guided") return CalibrationMode::Guided;
  return std::nullopt;
}

void Calibration::validate() const {
  if (!std::isfinite(p_min) || !std::isfinite(p_max))
    throw Error(ErrorCode::DegenerateRange, "calibration bounds must be finite");
  if (mode == CalibrationMode::AutoExpand) {
    if (p_min > p_max) throw Error(ErrorCode::DegenerateRange, "auto_expand seed has p_min > p_max");
    return;
  }
  if (!(p_min < p_max)) throw Error(ErrorCode::DegenerateRange, "p_min must be < p_max");
}

CalibrationSet default_calibration() {
  // Sized for 320x240 input; guided or auto_expand calibration replaces these.
  CalibrationSet c;
  calibration_for(c, Source::Height) = {0.0, 120.0, CalibrationMode::Manual};
  calibration_for(c, Source::Width) = {0.0, 160.0, CalibrationMode::Manual};
  calibration_for(c, Source::Major) = {0.0, 160.0, CalibrationMode::Manual};
  calibration_for(c, Source::Minor) = {0.0, 120.0, CalibrationMode::Manual};
  calibration_for(c, Source::Morph) = {0.0, 1.0, CalibrationMode::Manual};
  calibration_for(c, Source::Area) = {0.0, 19200.0, CalibrationMode::Manual};
  calibration_for(c, Source::Cx) = {0.0, 320.0, CalibrationMode::Manual};
  calibration_for(c, Source::Cy) = {0.0, 240.0, CalibrationMode::Manual};
  return c;
}

void Binding::validate() const {
  if (channel < 0 || channel > 15) throw Error(ErrorCode::OutOfRange, "channel out of range");
  if (controller < 0 || controller > 127) throw Error(ErrorCode::OutOfRange, "controller out of range");
}

const std::vector<MappingPreset>& builtin_presets() {
  // Controller numbers are defaults: 74 brightness/cutoff, 71 resonance,
  // 1 modulation, 10 pan.
  static const std::vector<MappingPreset> presets{
      {"wah", {{Source::Height, Curve::Linear, 0, 74}}},
      {"distortion", {{Source::Width, Curve::Linear, 0, 71}}},
      {"resonance", {{Source::Width, Curve::Linear, 0, 71}}},
      {"vowel-morph", {{Source::Morph, Curve::Linear, 0, 1}}},
      {"duo", {{Source::Height, Curve::Linear, 0, 74}, {Source::Width, Curve::Linear, 0, 71}}},
      {"pan-split", {{Source::Height, Curve::Linear, 0, 10}, {Source::Height, Curve::Inverted, 1, 10}}},
  };
  return presets;
}

std::optional<MappingPreset> find_preset(std::string_view name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

double normalize(double p, Calibration& c) {
  if (c.mode == CalibrationMode::AutoExpand) {
    c.p_min = std::min(c.p_min, p);
    c.p_max = std::max(c.p_max, p);
    if (!(c.p_min < c.p_max)) return 0.0;
  } else if (!(c.p_min < c.p_max)) {
    throw Error(ErrorCode::DegenerateRange, "p_min must be < p_max");
  }
  return std::clamp((p - c.p_min) / (c.p_max - c.p_min), 0.0, 1.0);
}

int to_cc(double u) {
  return std::clamp(int(std::floor(std::clamp(u, 0.0, 1.0) * 127.0 + 0.5)), 0, 127);
}

std::vector<ControlEvent> evaluate(const std::vector<Binding>& bindings, const ShapeParams& shape,
                                   CalibrationSet& cal, double t_ms) {
  std::vector<ControlEvent> out;
  out.reserve(bindings.size());
  for (const auto& b : bindings) {
    const double u = normalize(source_value(shape, b.source), calibration_for(cal, b.source));
    const int cc = to_cc(u);
    out.push_back({t_ms, b.channel, b.controller, b.curve == Curve::Linear ? cc : 127 - cc});
  }
  return out;
}

// ---------------------------------------------------------------------------

bool guided_source(Source s) {
  switch (s) {
    case Source::Height:
    case Source::Width:
    case Source::Major:
    case Source::Minor:
    case Source::Area:
      return true;
    default:
      return false;
  }
}

std::vector<Source> guided_targets(const std::vector<Binding>& bindings) {
  std::vector<Source> out;
  for (Source s : kAllSources) {
    if (!guided_source(s)) continue;
    if (std::any_of(bindings.begin(), bindings.end(), [s](const Binding& b) { return b.source == s; }))
      out.push_back(s);
  }
  return out;
}

void GuidedCalibrator::begin(CalibrationPhase phase) {
  active_ = phase;
  count_ = 0;
  sum_.fill(0.0);
}

bool GuidedCalibrator::observe(const ShapeParams& s) {
  if (!active_) return false;
  for (Source src : kAllSources) sum_[std::size_t(src)] += source_value(s, src);
  if (++count_ < frames_) return false;
  std::array<double, kSourceCount> mean{};
  for (std::size_t i = 0; i < kSourceCount; ++i) mean[i] = sum_[i] / double(count_);
  means_[std::size_t(*active_)] = mean;
  active_.reset();
  return true;
}

bool GuidedCalibrator::has(CalibrationPhase p) const { return means_[std::size_t(p)].has_value(); }

void GuidedCalibrator::apply(CalibrationSet& cal, const std::vector<Source>& targets) const {
  const auto& closed = means_[std::size_t(CalibrationPhase::Closed)];
  const auto& open = means_[std::size_t(CalibrationPhase::Open)];
  if (!closed || !open) throw Error(ErrorCode::Calibration, "both closed and open phases are required");
  CalibrationSet next = cal;
  for (Source s : targets) {
    const double lo = (*closed)[std::size_t(s)];
    const double hi = (*open)[std::size_t(s)];
    if (hi - lo < kMinGuidedSpan)
      throw Error(ErrorCode::Calibration, std::string(to_string(s)) + " span under 2 pixels");
    calibration_for(next, s) = {lo, hi, CalibrationMode::Guided};
  }
  cal = next;
}

}  // namespace mouthpipe
