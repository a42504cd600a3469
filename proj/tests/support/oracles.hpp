#pragma once
// Independent reference implementations used to check the library. They are
// written the slow, obvious way on purpose and share no code with src/.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mouthpipe/frame_io.hpp"
#include "mouthpipe/segmentation.hpp"

namespace oracle {

inline mouthpipe::Mask threshold(const mouthpipe::Frame& f, int i_min, int r_max) {
  mouthpipe::Mask m(f.width, f.height);
  for (std::uint32_t y = 0; y < f.height; ++y) {
    for (std::uint32_t x = 0; x < f.width; ++x) {
      const auto px = f.at(x, y);
      const double intensity = (double(px[0]) + px[1] + px[2]) / 3.0;
      if (intensity < i_min && px[0] > r_max) m.set(x, y);
    }
  }
  return m;
}

/// Breadth-first flood fill from every unvisited set pixel in row-major
/// order; the first component found with the strictly largest size wins.
inline std::optional<mouthpipe::Mask> largest_component(const mouthpipe::Mask& m, std::uint32_t min_px) {
  const int w = int(m.width), h = int(m.height);
  std::vector<int> label(std::size_t(w) * h, -1);
  std::vector<std::vector<std::pair<int, int>>> comps;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.get(x, y) || label[y * w + x] >= 0) continue;
      const int id = int(comps.size());
      comps.emplace_back();
      std::vector<std::pair<int, int>> queue{{x, y}};
      label[y * w + x] = id;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto [cx, cy] = queue[head];
        comps[id].push_back({cx, cy});
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (!m.get(nx, ny) || label[ny * w + nx] >= 0) continue;
            label[ny * w + nx] = id;
            queue.push_back({nx, ny});
          }
        }
      }
    }
  }
  int best = -1;
  for (int i = 0; i < int(comps.size()); ++i) {
    if (best < 0 || comps[i].size() > comps[best].size()) best = i;
  }
  if (best < 0 || comps[best].size() < min_px || comps[best].empty()) return std::nullopt;
  mouthpipe::Mask out(m.width, m.height);
  for (auto [x, y] : comps[best]) out.set(x, y);
  return out;
}

struct Moments {
  std::size_t n = 0;
  long double cx = 0, cy = 0, sxx = 0, sxy = 0, syy = 0;
};

/// Two-pass population covariance in long double.
inline Moments moments(const mouthpipe::Mask& m) {
  Moments r;
  for (std::uint32_t y = 0; y < m.height; ++y)
    for (std::uint32_t x = 0; x < m.width; ++x)
      if (m.get(x, y)) {
        ++r.n;
        r.cx += x;
        r.cy += y;
      }
  if (r.n == 0) return r;
  r.cx /= r.n;
  r.cy /= r.n;
  for (std::uint32_t y = 0; y < m.height; ++y)
    for (std::uint32_t x = 0; x < m.width; ++x)
      if (m.get(x, y)) {
        const long double dx = x - r.cx, dy = y - r.cy;
        r.sxx += dx * dx;
        r.sxy += dx * dy;
        r.syy += dy * dy;
      }
  r.sxx /= r.n;
  r.sxy /= r.n;
  r.syy /= r.n;
  return r;
}

/// Pixel centers inside an axis-aligned-then-rotated ellipse.
inline std::size_t ellipse_pixels(int w, int h, double cx, double cy, double a, double b, double rot) {
  std::size_t n = 0;
  const double c = std::cos(rot), s = std::sin(rot);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = dx * c + dy * s, v = -dx * s + dy * c;
      if (a > 0 && b > 0 && (u * u) / (a * a) + (v * v) / (b * b) <= 1.0) ++n;
    }
  }
  return n;
}

struct SmfEvent {
  std::uint64_t tick = 0;
  int status = 0, data1 = 0, data2 = 0;
};

struct SmfFile {
  int format = -1, tracks = 0, division = 0;
  std::uint32_t tempo = 0;
  bool end_of_track = false;
  std::vector<SmfEvent> events;
};

/// Minimal reader for format-0 files with channel-voice and meta events.
inline SmfFile read_smf(const std::vector<std::uint8_t>& d) {
  auto be = [&](std::size_t at, int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | d.at(at + i);
    return v;
  };
  SmfFile f;
  if (d.size() < 22 || be(0, 4) != 0x4D546864u || be(4, 4) != 6) throw std::runtime_error("bad MThd");
  f.format = int(be(8, 2));
  f.tracks = int(be(10, 2));
  f.division = int(be(12, 2));
  if (be(14, 4) != 0x4D54726Bu) throw std::runtime_error("bad MTrk");
  const std::size_t end = 22 + be(18, 4);
  if (end != d.size()) throw std::runtime_error("track length mismatch");
  std::size_t i = 22;
  std::uint64_t tick = 0;
  while (i < end) {
    std::uint32_t delta = 0;
    for (;;) {
      const auto b = d.at(i++);
      delta = (delta << 7) | (b & 0x7F);
      if (!(b & 0x80)) break;
    }
    tick += delta;
    const int status = d.at(i++);
    if (status == 0xFF) {
      const int type = d.at(i++);
      const int len = d.at(i++);
      if (type == 0x51) f.tempo = be(i, 3);
      if (type == 0x2F) f.end_of_track = true;
      i += std::size_t(len);
    } else {
      if (status < 0x80) throw std::runtime_error("running status");
      f.events.push_back({tick, status, d.at(i), d.at(i + 1)});
      i += 2;
    }
  }
  return f;
}

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline mouthpipe::Mask random_mask(Rng& rng, std::uint32_t w, std::uint32_t h, double density) {
  mouthpipe::Mask m(w, h);
  std::bernoulli_distribution bit(density);
  for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
  return m;
}

inline mouthpipe::Frame random_frame(Rng& rng, std::uint32_t w, std::uint32_t h) {
  mouthpipe::Frame f(w, h);
  for (auto& p : f.pixels) p = std::uint8_t(uniform(rng, 0, 255));
  return f;
}

}  // namespace oracle
