#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mouthpipe/midi.hpp"
#include "mouthpipe/shape.hpp"

namespace mouthpipe {

enum class Source { Height, Width, Major, Minor, Morph, Area, Cx, Cy };
inline constexpr std::size_t kSourceCount = 8;
inline constexpr std::array<Source, kSourceCount> kAllSources{
    Source::Height, Source::Width, Source::Major, Source::Minor,
    Source::Morph,  Source::Area,  Source::Cx,    Source::Cy};

std::string_view to_string(Source s);
std::optional<Source> parse_source(std::string_view name);
double source_value(const ShapeParams& s, Source src);

enum class Curve { Linear, Inverted };
std::string_view to_string(Curve c);
std::optional<Curve> parse_curve(std::string_view name);

enum class CalibrationMode { Manual, AutoExpand, Guided };
std::string_view to_string(CalibrationMode m);
std::optional<CalibrationMode> parse_calibration_mode(std::string_view name);

struct Calibration {
  double p_min = 0.0;
  double p_max = 1.0;
  CalibrationMode mode = CalibrationMode::Manual;

  /// Manual and guided ranges must satisfy p_min < p_max.
  void validate() const;
  friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// One calibration range per source.
using CalibrationSet = std::array<Calibration, kSourceCount>;
CalibrationSet default_calibration();
inline Calibration& calibration_for(CalibrationSet& c, Source s) { return c[std::size_t(s)]; }
inline const Calibration& calibration_for(const CalibrationSet& c, Source s) { return c[std::size_t(s)]; }

struct Binding {
  Source source = Source::Height;
  Curve curve = Curve::Linear;
  int channel = 0;
  int controller = 74;

  void validate() const;
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct MappingPreset {
  std::string name;
  std::vector<Binding> bindings;
};

const std::vector<MappingPreset>& builtin_presets();
std::optional<MappingPreset> find_preset(std::string_view name);

/// clamp((p - p_min)/(p_max - p_min), 0, 1). auto_expand widens the range to
/// include p first, and a still-degenerate range maps to 0.
double normalize(double p, Calibration& c);
/// floor(u*127 + 0.5)
int to_cc(double u);

/// One event per binding. The inverted curve is emitted as 127 - to_cc(u) so
/// that a linear/inverted pair on the same source always sums to 127.
std::vector<ControlEvent> evaluate(const std::vector<Binding>& bindings, const ShapeParams& shape,
                                   CalibrationSet& cal, double t_ms = 0.0);

// ---------------------------------------------------------------------------
// Guided calibration

enum class CalibrationPhase { Closed, Open };

inline constexpr int kGuidedFrames = 30;
inline constexpr double kMinGuidedSpan = 2.0;

/// Sources whose guided range is measured in pixels (lengths and area).
bool guided_source(Source s);

/// Captures kGuidedFrames per phase: the closed-mouth means become p_min and
/// the open-mouth means p_max for every guided source.
class GuidedCalibrator {
 public:
  explicit GuidedCalibrator(int frames = kGuidedFrames) : frames_(frames) {}

  void begin(CalibrationPhase phase);
  bool capturing() const { return active_.has_value(); }
  std::optional<CalibrationPhase> phase() const { return active_; }
  /// Feeds one frame; returns true when the active phase just completed.
  bool observe(const ShapeParams& s);
  bool has(CalibrationPhase p) const;
  /// Applies both captured phases to the guided sources listed in `targets`.
  /// Throws Error(Calibration) when a span is under kMinGuidedSpan.
  void apply(CalibrationSet& cal, const std::vector<Source>& targets) const;

 private:
  int frames_;
  std::optional<CalibrationPhase> active_;
  int count_ = 0;
  std::array<double, kSourceCount> sum_{};
  std::array<std::optional<std::array<double, kSourceCount>>, 2> means_;
};

/// Guided sources referenced by the bindings, in source order.
std::vector<Source> guided_targets(const std::vector<Binding>& bindings);

}  // namespace mouthpipe
