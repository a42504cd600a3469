#include "mouthpipe/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

Frame::Frame(std::uint32_t w, std::uint32_t h, double t)
    : width(w), height(h), pixels(std::size_t(w) * h * 3, 0), t_ms(t) {}

Rgb Frame::at(std::uint32_t x, std::uint32_t y) const {
  const std::size_t i = (std::size_t(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Frame::set(std::uint32_t x, std::uint32_t y, Rgb c) {
  const std::size_t i = (std::size_t(y) * width + x) * 3;
  pixels[i] = c[0];
  pixels[i + 1] = c[1];
  pixels[i + 2] = c[2];
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    std::uint64_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 0xFFFFFFFFull) throw Error(ErrorCode::BadHeader, std::string(what) + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::BadHeader, std::string("non-numeric ") + what);
    return v;
  }

  /// Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorCode::BadHeader, "missing whitespace after maxval");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Source, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t get_le32(std::span<const std::uint8_t> b, std::size_t off) {
  return std::uint32_t(b[off]) | (std::uint32_t(b[off + 1]) << 8) |
         (std::uint32_t(b[off + 2]) << 16) | (std::uint32_t(b[off + 3]) << 24);
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

}  // namespace

Frame read_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw Error(ErrorCode::BadMagic, "expected P6");
  HeaderCursor cur(bytes.subspan(2));
  const auto w = cur.number("width");
  const auto h = cur.number("height");
  const auto maxval = cur.number("maxval");
  if (maxval != 255)
    throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval));
  cur.single_space();
  const std::size_t offset = 2 + cur.pos();
  const std::size_t need = std::size_t(w) * h * 3;
  if (bytes.size() - offset < need)
    throw Error(ErrorCode::Truncated, "PPM payload shorter than " + std::to_string(need) + " bytes");

  Frame f{std::uint32_t(w), std::uint32_t(h)};
  std::copy_n(bytes.begin() + offset, need, f.pixels.begin());
  return f;
}

Frame read_ppm_file(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return read_ppm(bytes);
}

std::vector<std::uint8_t> write_ppm(const Frame& f) {
  const std::string header =
      "P6\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), f.pixels.begin(), f.pixels.end());
  return out;
}

// ---------------------------------------------------------------------------
// MVS1

MvsHeader parse_mvs_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "MVS1"))
    throw Error(ErrorCode::BadMagic, "expected MVS1");
  if (bytes.size() < kMvsHeaderSize) throw Error(ErrorCode::Truncated, "MVS1 header");
  MvsHeader h;
  h.width = get_le32(bytes, 4);
  h.height = get_le32(bytes, 8);
  h.fps_num = get_le32(bytes, 12);
  h.fps_den = get_le32(bytes, 16);
  if (h.fps_num == 0 || h.fps_den == 0) throw Error(ErrorCode::ZeroFps, "fps numerator/denominator is zero");
  return h;
}

std::vector<std::uint8_t> encode_mvs_header(const MvsHeader& h) {
  std::vector<std::uint8_t> out{'M', 'V', 'S', '1'};
  put_le32(out, h.width);
  put_le32(out, h.height);
  put_le32(out, h.fps_num);
  put_le32(out, h.fps_den);
  return out;
}

RawStream read_raw_stream(std::span<const std::uint8_t> bytes) {
  RawStream rs;
  rs.header = parse_mvs_header(bytes);
  const std::size_t frame_bytes = std::size_t(rs.header.width) * rs.header.height * 3;
  std::size_t off = kMvsHeaderSize;
  if (frame_bytes == 0) return rs;
  while (bytes.size() - off >= frame_bytes) {
    Frame f(rs.header.width, rs.header.height, rs.header.frame_time_ms(rs.frames.size()));
    std::copy_n(bytes.begin() + off, frame_bytes, f.pixels.begin());
    rs.frames.push_back(std::move(f));
    off += frame_bytes;
  }
  rs.truncated = off != bytes.size();
  return rs;
}

// ---------------------------------------------------------------------------
// Scenario

std::uint64_t Scenario::frame_count() const {
  // Guard against fps*duration landing a hair above an integer.
  const double n = fps * duration_s;
  return std::uint64_t(std::ceil(n - 1e-9));
}

void Scenario::validate() const {
  if (width == 0 || height == 0) throw Error(ErrorCode::Config, "scenario dimensions must be positive");
  if (!(fps > 0.0)) throw Error(ErrorCode::Config, "scenario fps must be positive");
  if (!(duration_s >= 0.0)) throw Error(ErrorCode::Config, "scenario duration must be non-negative");
  double prev = 0.0;
  for (const auto& k : keyframes) {
    if (k.time_s < prev || k.time_s > duration_s)
      throw Error(ErrorCode::Config, "keyframe times must be nondecreasing within [0, duration_s]");
    if (k.semi_axis_a < 0.0 || k.semi_axis_b < 0.0)
      throw Error(ErrorCode::Config, "semi-axes must be non-negative");
    prev = k.time_s;
  }
}

Keyframe interpolate(const Scenario& s, double t_s) {
  const auto& ks = s.keyframes;
  if (ks.empty()) return Keyframe{t_s, s.width / 2.0, s.height / 2.0, 0.0, 0.0, 0.0};
  if (t_s <= ks.front().time_s) return ks.front();
  if (t_s >= ks.back().time_s) return ks.back();
  // First segment with t in [t_i, t_{i+1}); zero-length segments are skipped.
  std::size_t i = 0;
  while (i + 1 < ks.size() && !(t_s < ks[i + 1].time_s)) ++i;
  const Keyframe& a = ks[i];
  const Keyframe& b = ks[i + 1];
  const double u = (t_s - a.time_s) / (b.time_s - a.time_s);
  auto lerp = [u](double p, double q) { return p + (q - p) * u; };
  return Keyframe{t_s,
                  lerp(a.center_x, b.center_x),
                  lerp(a.center_y, b.center_y),
                  lerp(a.semi_axis_a, b.semi_axis_a),
                  lerp(a.semi_axis_b, b.semi_axis_b),
                  lerp(a.rotation_rad, b.rotation_rad)};
}

Frame render_scenario(const Scenario& s, std::uint64_t k) {
  if (k >= s.frame_count())
    throw Error(ErrorCode::OutOfRange, "frame " + std::to_string(k) + " beyond scenario duration");
  const double t_s = double(k) / s.fps;
  Frame f(s.width, s.height, 1000.0 * t_s);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    std::copy(s.background_color.begin(), s.background_color.end(), f.pixels.begin() + i * 3);
  }

  const Keyframe e = interpolate(s, t_s);
  const double a = e.semi_axis_a;
  const double b = e.semi_axis_b;
  if (!(a > 0.0 && b > 0.0)) return f;

  const double c = std::cos(e.rotation_rad);
  const double sn = std::sin(e.rotation_rad);
  const double a2 = a * a;
  const double b2 = b * b;
  // Bounding box of the rotated ellipse limits the scan.
  const double ex = std::sqrt(a2 * c * c + b2 * sn * sn);
  const double ey = std::sqrt(a2 * sn * sn + b2 * c * c);
  const auto clampi = [](double v, std::uint32_t hi) {
    return std::uint32_t(std::clamp(v, 0.0, double(hi)));
  };
  const std::uint32_t x0 = clampi(std::floor(e.center_x - ex - 1), s.width);
  const std::uint32_t x1 = clampi(std::ceil(e.center_x + ex + 1), s.width);
  const std::uint32_t y0 = clampi(std::floor(e.center_y - ey - 1), s.height);
  const std::uint32_t y1 = clampi(std::ceil(e.center_y + ey + 1), s.height);

  for (std::uint32_t y = y0; y < y1; ++y) {
    const double dy = y + 0.5 - e.center_y;
    for (std::uint32_t x = x0; x < x1; ++x) {
      const double dx = x + 0.5 - e.center_x;
      const double u = dx * c + dy * sn;
      const double v = -dx * sn + dy * c;
      if (u * u / a2 + v * v / b2 <= 1.0) f.set(x, y, s.shadow_color);
    }
  }
  return f;
}

namespace {

Rgb parse_rgb(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, std::string(name) + " must be [r,g,b]");
  Rgb c{};
  for (int i = 0; i < 3; ++i) {
    const int v = j.at(i).get<int>();
    if (v < 0 || v > 255) throw Error(ErrorCode::Config, std::string(name) + " channel out of range");
    c[i] = std::uint8_t(v);
  }
  return c;
}

}  // namespace

Scenario parse_scenario_json(const std::string& text) {
  Scenario s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.fps = j.value("fps", s.fps);
    s.duration_s = j.value("duration_s", s.duration_s);
    if (j.contains("shadow_color")) s.shadow_color = parse_rgb(j["shadow_color"], "shadow_color");
    if (j.contains("background_color")) s.background_color = parse_rgb(j["background_color"], "background_color");
    for (const auto& k : j.value("keyframes", nlohmann::json::array())) {
      Keyframe kf;
      if (k.is_array()) {
        if (k.size() != 6) throw Error(ErrorCode::Config, "keyframe arrays need 6 entries");
        kf = {k[0].get<double>(), k[1].get<double>(), k[2].get<double>(),
              k[3].get<double>(), k[4].get<double>(), k[5].get<double>()};
      } else {
        kf.time_s = k.at("time_s").get<double>();
        kf.center_x = k.at("center_x").get<double>();
        kf.center_y = k.at("center_y").get<double>();
        kf.semi_axis_a = k.at("semi_axis_a").get<double>();
        kf.semi_axis_b = k.at("semi_axis_b").get<double>();
        kf.rotation_rad = k.value("rotation_rad", 0.0);
      }
      s.keyframes.push_back(kf);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("scenario JSON: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Source, "cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_json(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["width"] = s.width;
  j["height"] = s.height;
  j["fps"] = s.fps;
  j["duration_s"] = s.duration_s;
  j["shadow_color"] = s.shadow_color;
  j["background_color"] = s.background_color;
  j["keyframes"] = nlohmann::json::array();
  for (const auto& k : s.keyframes) {
    j["keyframes"].push_back({{"time_s", k.time_s},
                              {"center_x", k.center_x},
                              {"center_y", k.center_y},
                              {"semi_axis_a", k.semi_axis_a},
                              {"semi_axis_b", k.semi_axis_b},
                              {"rotation_rad", k.rotation_rad}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Sources

PpmDirectorySource::PpmDirectorySource(const std::filesystem::path& dir, double fps) : fps_(fps) {
  if (!(fps > 0.0)) throw Error(ErrorCode::ZeroFps, "PPM sequence fps must be positive");
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files_.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::Source, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files_.begin(), files_.end());
}

std::optional<Frame> PpmDirectorySource::next() {
  if (index_ >= files_.size()) return std::nullopt;
  Frame f = read_ppm_file(files_[index_]);
  f.t_ms = 1000.0 * double(index_) / fps_;
  ++index_;
  return f;
}

MvsFileSource::MvsFileSource(const std::filesystem::path& path) : path_(path) { rewind(); }

void MvsFileSource::rewind() {
  in_ = std::ifstream(path_, std::ios::binary);
  if (!in_) throw Error(ErrorCode::Source, "cannot open " + path_.string());
  std::vector<std::uint8_t> hdr(kMvsHeaderSize);
  in_.read(reinterpret_cast<char*>(hdr.data()), std::streamsize(hdr.size()));
  hdr.resize(std::size_t(in_.gcount()));
  header_ = parse_mvs_header(hdr);
  index_ = 0;
  truncated_ = false;
}

std::optional<Frame> MvsFileSource::next() {
  const std::size_t n = std::size_t(header_.width) * header_.height * 3;
  if (n == 0 || truncated_) return std::nullopt;
  Frame f(header_.width, header_.height, header_.frame_time_ms(index_));
  in_.read(reinterpret_cast<char*>(f.pixels.data()), std::streamsize(n));
  const auto got = std::size_t(in_.gcount());
  if (got != n) {
    truncated_ = got != 0;
    return std::nullopt;
  }
  ++index_;
  return f;
}

ScenarioSource::ScenarioSource(Scenario s) : scenario_(std::move(s)) { scenario_.validate(); }

std::optional<Frame> ScenarioSource::next() {
  if (index_ >= scenario_.frame_count()) return std::nullopt;
  return render_scenario(scenario_, index_++);
}

std::unique_ptr<FrameSource> open_source(const std::filesystem::path& path, double fps) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) return std::make_unique<PpmDirectorySource>(path, fps);
  if (!std::filesystem::exists(path, ec)) throw Error(ErrorCode::Source, "no such source " + path.string());
  const auto ext = path.extension();
  if (ext == ".json") return std::make_unique<ScenarioSource>(load_scenario(path));
  if (ext == ".ppm") {
    // Single still image, presented as a one-frame stream.
    struct Still final : FrameSource {
      Frame frame;
      double rate;
      bool done = false;
      std::optional<Frame> next() override {
        if (done) return std::nullopt;
        done = true;
        return frame;
      }
      void rewind() override { done = false; }
      std::uint64_t delivered() const override { return done ? 1 : 0; }
      double fps() const override { return rate; }
    };
    auto s = std::make_unique<Still>();
    s->frame = read_ppm_file(path);
    s->rate = fps;
    return s;
  }
  return std::make_unique<MvsFileSource>(path);
}

std::uint64_t write_scenario_mvs(const Scenario& s, const std::filesystem::path& out) {
  s.validate();
  MvsHeader h;
  h.width = s.width;
  h.height = s.height;
  // Rational fps with millihertz resolution, reduced.
  std::uint64_t num = std::uint64_t(std::llround(s.fps * 1000.0));
  std::uint64_t den = 1000;
  const auto g = std::gcd(num, den);
  h.fps_num = std::uint32_t(num / g);
  h.fps_den = std::uint32_t(den / g);
  if (h.fps_num == 0) throw Error(ErrorCode::ZeroFps, "scenario fps rounds to zero");

  std::ofstream o(out, std::ios::binary);
  if (!o) throw Error(ErrorCode::Sink, "cannot write " + out.string());
  const auto hdr = encode_mvs_header(h);
  o.write(reinterpret_cast<const char*>(hdr.data()), std::streamsize(hdr.size()));
  const auto n = s.frame_count();
  for (std::uint64_t k = 0; k < n; ++k) {
    const Frame f = render_scenario(s, k);
    o.write(reinterpret_cast<const char*>(f.pixels.data()), std::streamsize(f.pixels.size()));
  }
  if (!o) throw Error(ErrorCode::Sink, "write failed for " + out.string());
  return n;
}

}  // namespace mouthpipe
