#pragma once

// Frame sources: binary PPM images, the MVS1 raw stream container and a
// synthetic ellipse scenario renderer.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mouthpipe {

using Rgb = std::array<std::uint8_t, 3>;

/// Row-major RGB24 raster. pixels.size() == width * height * 3.
struct Frame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
  double t_ms = 0.0;

  Frame() = default;
  Frame(std::uint32_t w, std::uint32_t h, double t = 0.0);

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  Rgb at(std::uint32_t x, std::uint32_t y) const;
  void set(std::uint32_t x, std::uint32_t y, Rgb c);
};

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

Frame read_ppm(std::span<const std::uint8_t> bytes);
Frame read_ppm_file(const std::filesystem::path& path);
/// Canonical header "P6\n<w> <h>\n255\n" followed by the raster.
std::vector<std::uint8_t> write_ppm(const Frame& f);

// ---------------------------------------------------------------------------
// MVS1 raw stream: "MVS1" + LE u32 width, height, fps_num, fps_den, then frames.

inline constexpr std::size_t kMvsHeaderSize = 20;

struct MvsHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t fps_num = 30;
  std::uint32_t fps_den = 1;

  double frame_time_ms(std::uint64_t k) const {
    return 1000.0 * double(k) * double(fps_den) / double(fps_num);
  }
};

MvsHeader parse_mvs_header(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mvs_header(const MvsHeader& h);

struct RawStream {
  MvsHeader header;
  std::vector<Frame> frames;
  /// Trailing bytes did not form a whole frame; frames holds only whole ones.
  bool truncated = false;
};

RawStream read_raw_stream(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Synthetic scenarios

struct Keyframe {
  double time_s = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_axis_a = 0.0;
  double semi_axis_b = 0.0;
  double rotation_rad = 0.0;
};

struct Scenario {
  std::uint32_t width = 320;
  std::uint32_t height = 240;
  double fps = 30.0;
  double duration_s = 1.0;
  std::vector<Keyframe> keyframes;
  Rgb shadow_color{60, 10, 10};
  Rgb background_color{200, 160, 140};

  std::uint64_t frame_count() const;
  void validate() const;
};

/// Piecewise-linear interpolation of the keyframes, clamped at both ends.
Keyframe interpolate(const Scenario& s, double t_s);
/// Shadow wherever the pixel center (x+0.5, y+0.5) lies inside the ellipse.
Frame render_scenario(const Scenario& s, std::uint64_t k);

Scenario parse_scenario_json(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

// ---------------------------------------------------------------------------
// Sequential sources

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame, or nullopt at end of stream. Throws Error on I/O failure.
  virtual std::optional<Frame> next() = 0;
  virtual void rewind() = 0;
  virtual std::uint64_t delivered() const = 0;
  /// The stream ended inside a frame (MVS1 only).
  virtual bool truncated() const { return false; }
  virtual double fps() const = 0;
};

class PpmDirectorySource final : public FrameSource {
 public:
  PpmDirectorySource(const std::filesystem::path& dir, double fps);
  std::optional<Frame> next() override;
  void rewind() override { index_ = 0; }
  std::uint64_t delivered() const override { return index_; }
  double fps() const override { return fps_; }
  std::size_t size() const { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  double fps_;
  std::size_t index_ = 0;
};

class MvsFileSource final : public FrameSource {
 public:
  explicit MvsFileSource(const std::filesystem::path& path);
  std::optional<Frame> next() override;
  void rewind() override;
  std::uint64_t delivered() const override { return index_; }
  bool truncated() const override { return truncated_; }
  double fps() const override { return double(header_.fps_num) / double(header_.fps_den); }
  const MvsHeader& header() const { return header_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  MvsHeader header_;
  std::uint64_t index_ = 0;
  bool truncated_ = false;
};

class ScenarioSource final : public FrameSource {
 public:
  explicit ScenarioSource(Scenario s);
  std::optional<Frame> next() override;
  void rewind() override { index_ = 0; }
  std::uint64_t delivered() const override { return index_; }
  double fps() const override { return scenario_.fps; }

 private:
  Scenario scenario_;
  std::uint64_t index_ = 0;
};

/// Directory -> PPM sequence, *.json -> scenario, *.ppm -> single image,
/// anything else -> MVS1 stream. fps applies to PPM inputs only.
std::unique_ptr<FrameSource> open_source(const std::filesystem::path& path, double fps = 30.0);

/// Renders every scenario frame into an MVS1 stream; returns frames written.
std::uint64_t write_scenario_mvs(const Scenario& s, const std::filesystem::path& out);

}  // namespace mouthpipe
