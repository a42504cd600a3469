#include "mouthpipe/pipeline.hpp"

#include <chrono>

namespace mouthpipe {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Threshold: return "threshold";
    case Stage::Components: return "components";
    case Stage::Shape: return "shape";
    case Stage::Filters: return "filters";
    case Stage::Mapping: return "mapping";
    case Stage::Output: return "output";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

ShapeParams with_source(ShapeParams s, Source src, double v) {
  switch (src) {
    case Source::Height: s.height = v; break;
    case Source::Width: s.width = v; break;
    case Source::Major: s.major = v; break;
    case Source::Minor: s.minor = v; break;
    case Source::Morph: s.m = v; s.q = 1.0 - v; break;
    case Source::Area: s.area = v; break;
    case Source::Cx: s.cx = v; break;
    case Source::Cy: s.cy = v; break;
  }
  return s;
}

}  // namespace

Pipeline::Pipeline(RuntimeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  state_.calibration = cfg_.calibration;
  state_.dedup.enabled = cfg_.midi.dedup;
}

void Pipeline::reconfigure(const RuntimeConfig& cfg) {
  cfg.validate();
  if (cfg.filters.a_enabled && !cfg_.filters.a_enabled) {
    for (auto& f : state_.filters) f.reset_a();
  }
  if (cfg.filters.b_enabled && !cfg_.filters.b_enabled) {
    for (auto& f : state_.filters) f.reset_b();
  }
  if (cfg.calibration != cfg_.calibration) state_.calibration = cfg.calibration;
  state_.dedup.enabled = cfg.midi.dedup;
  cfg_ = cfg;
}

FrameResult Pipeline::process(const Frame& f) {
  FrameResult r;
  r.frame_id = state_.frames_processed;
  r.t_ms = f.t_ms;

  const auto t0 = Clock::now();
  const Mask thresholded = threshold(f, cfg_.segmentation);
  const auto t1 = Clock::now();
  auto component = largest_component(thresholded, cfg_.segmentation.min_blob_px);
  const auto t2 = Clock::now();
  std::optional<ShapeParams> measured;
  if (component) {
    if (const auto stats = blob_stats(*component)) measured = shape_params(*stats);
  }
  const auto t3 = Clock::now();

  if (measured) {
    r.blob = true;
    r.shape = *measured;
    ShapeParams filtered = *measured;
    for (Source s : kAllSources) {
      const double y = apply_filters(state_.filters[std::size_t(s)], source_value(*measured, s), cfg_.filters);
      filtered = with_source(filtered, s, y);
    }
    state_.last_good = *measured;
    state_.last_filtered = filtered;
    state_.seen_blob = true;
  } else {
    r.shape = state_.last_good;
    ++state_.frames_noblob;
  }
  r.filtered = state_.last_filtered;
  const auto t4 = Clock::now();

  if (state_.seen_blob) {
    const auto events = evaluate(cfg_.bindings, r.filtered, state_.calibration, f.t_ms);
    r.events = state_.dedup.filter(events);
  }
  const auto t5 = Clock::now();

  r.mask = component ? std::move(*component) : Mask(f.width, f.height);
  r.timings[std::size_t(Stage::Threshold)] = micros(t0, t1);
  r.timings[std::size_t(Stage::Components)] = micros(t1, t2);
  r.timings[std::size_t(Stage::Shape)] = micros(t2, t3);
  r.timings[std::size_t(Stage::Filters)] = micros(t3, t4);
  r.timings[std::size_t(Stage::Mapping)] = micros(t4, t5);
  for (std::size_t i = 0; i < kStageCount; ++i) state_.totals[i] += r.timings[i];
  ++state_.frames_processed;
  return r;
}

}  // namespace mouthpipe
