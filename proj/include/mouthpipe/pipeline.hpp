#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mouthpipe/config.hpp"
#include "mouthpipe/filters.hpp"
#include "mouthpipe/frame_io.hpp"
#include "mouthpipe/mapping.hpp"
#include "mouthpipe/midi.hpp"
#include "mouthpipe/segmentation.hpp"
#include "mouthpipe/shape.hpp"

namespace mouthpipe {

enum class Stage { Threshold, Components, Shape, Filters, Mapping, Output };
inline constexpr std::size_t kStageCount = 6;
std::string_view to_string(Stage s);

using StageTimes = std::array<double, kStageCount>;  // microseconds

struct FrameResult {
  std::uint64_t frame_id = 0;
  double t_ms = 0.0;
  bool blob = false;
  ShapeParams shape;     // measured; previous value held when there is no blob
  ShapeParams filtered;  // after the temporal filters, drives the mapping
  std::vector<ControlEvent> events;  // after dedup
  Mask mask;             // largest component (all zero without a blob)
  StageTimes timings{};
};

struct PipelineState {
  std::array<FilterState, kSourceCount> filters{};
  ShapeParams last_good{};
  ShapeParams last_filtered{};
  bool seen_blob = false;
  std::uint64_t frames_processed = 0;
  std::uint64_t frames_noblob = 0;
  StageTimes totals{};
  CalibrationSet calibration = default_calibration();  // live copy; auto_expand widens it
  Deduplicator dedup;
};

/// Per-frame chain: threshold -> largest component -> blob stats -> shape
/// parameters -> temporal filters -> mapping -> dedup.
///
/// Until the first blob is seen nothing is emitted. After that, a frame
/// without a blob holds the previous measurement and filter output, so the
/// mapping re-evaluates identical values and dedup suppresses them.
class Pipeline {
 public:
  explicit Pipeline(RuntimeConfig cfg = {});

  /// Swap in a new configuration between frames. Filter state is reset for a
  /// filter that was just switched on; the live calibration is replaced only
  /// if the configured calibration changed.
  void reconfigure(const RuntimeConfig& cfg);

  FrameResult process(const Frame& f);

  const PipelineState& state() const { return state_; }
  const RuntimeConfig& config() const { return cfg_; }

 private:
  RuntimeConfig cfg_;
  PipelineState state_;
};

}  // namespace mouthpipe
