#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mouthpipe/frame_io.hpp"

namespace mouthpipe {

/// Thresholds of the shadow predicate  I < i_min  and  R > r_max.
///
/// The names follow the original formulation even though r_max acts as a
/// lower bound on the red channel. Dark facial hair near the mouth can pass
/// the predicate too; nothing here tries to reject it.
struct SegmentationParams {
  int i_min = 60;
  int r_max = 50;
  std::uint32_t min_blob_px = 10;

  void validate() const;
};

struct Mask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  Mask() = default;
  Mask(std::uint32_t w, std::uint32_t h) : width(w), height(h), bits(std::size_t(w) * h, 0) {}

  bool get(std::uint32_t x, std::uint32_t y) const { return bits[std::size_t(y) * width + x] != 0; }
  void set(std::uint32_t x, std::uint32_t y, bool v = true) { bits[std::size_t(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Connected components use 8-neighbour adjacency.
inline constexpr int kConnectivity = 8;

/// Bit set iff r+g+b < 3*i_min and r > r_max (intensity is the channel mean,
/// compared in integers).
Mask threshold(const Frame& f, const SegmentationParams& p);

/// Largest 8-connected component; ties go to the component whose first pixel
/// in row-major order comes first. nullopt when nothing reaches min_blob_px.
std::optional<Mask> largest_component(const Mask& m, std::uint32_t min_blob_px);

}  // namespace mouthpipe
