#include "mouthpipe/segmentation.hpp"

#include <algorithm>
#include <numeric>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

void SegmentationParams::validate() const {
  if (i_min < 0 || i_min > 255) throw Error(ErrorCode::OutOfRange, "i_min out of range");
  if (r_max < 0 || r_max > 255) throw Error(ErrorCode::OutOfRange, "r_max out of range");
}

std::size_t Mask::count() const {
  return std::size_t(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Mask threshold(const Frame& f, const SegmentationParams& p) {
  Mask m(f.width, f.height);
  const int sum_limit = 3 * p.i_min;
  const std::uint8_t* px = f.pixels.data();
  for (std::size_t i = 0, n = f.pixel_count(); i < n; ++i, px += 3) {
    const int r = px[0];
    m.bits[i] = (r + px[1] + px[2] < sum_limit && r > p.r_max) ? 1 : 0;
  }
  return m;
}

namespace {

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void unite(std::vector<std::uint32_t>& parent, std::uint32_t a, std::uint32_t b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  // Smaller index becomes the root, so each root is its component's first pixel.
  if (a < b) parent[b] = a;
  else if (b < a) parent[a] = b;
}

}  // namespace

std::optional<Mask> largest_component(const Mask& m, std::uint32_t min_blob_px) {
  const std::uint32_t w = m.width;
  const std::uint32_t h = m.height;
  const std::size_t n = std::size_t(w) * h;
  if (n == 0) return std::nullopt;

  // Two-pass union-find labelling over the raster; only the already-visited
  // half of the 8-neighbourhood needs checking.
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const std::uint32_t i = y * w + x;
      if (!m.bits[i]) continue;
      if (x > 0 && m.bits[i - 1]) unite(parent, i, i - 1);
      if (y > 0) {
        const std::uint32_t up = i - w;
        if (m.bits[up]) unite(parent, i, up);
        if (x > 0 && m.bits[up - 1]) unite(parent, i, up - 1);
        if (x + 1 < w && m.bits[up + 1]) unite(parent, i, up + 1);
      }
    }
  }

  std::vector<std::uint32_t> size(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (m.bits[i]) ++size[find_root(parent, i)];
  }

  // Roots are first pixels, so scanning in index order and keeping only a
  // strictly larger size implements the tie-break.
  std::uint32_t best_root = 0;
  std::uint32_t best_size = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (size[i] > best_size) {
      best_size = size[i];
      best_root = i;
    }
  }
  if (best_size == 0 || best_size < min_blob_px) return std::nullopt;

  Mask out(w, h);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (m.bits[i] && find_root(parent, i) == best_root) out.bits[i] = 1;
  }
  return out;
}

}  // namespace mouthpipe
