#include "mouthpipe/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mouthpipe {

std::optional<BlobStats> blob_stats(const Mask& m) {
  // Raw moments accumulate exactly in integers; the only rounding happens in
  // the final divisions.
  std::int64_t n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::uint32_t y = 0; y < m.height; ++y) {
    const std::uint8_t* row = m.bits.data() + std::size_t(y) * m.width;
    std::int64_t rn = 0, rsx = 0, rsxx = 0;
    for (std::uint32_t x = 0; x < m.width; ++x) {
      if (!row[x]) continue;
      ++rn;
      rsx += x;
      rsxx += std::int64_t(x) * x;
    }
    n += rn;
    sx += rsx;
    sxx += rsxx;
    sy += rn * y;
    syy += rn * std::int64_t(y) * y;
    sxy += rsx * y;
  }
  if (n == 0) return std::nullopt;

  BlobStats b;
  b.n = std::uint64_t(n);
  const double dn = double(n);
  b.cx = double(sx) / dn;
  b.cy = double(sy) / dn;
  // n^2 * cov entries are exact integers for any realistic image size.
  const double n2 = dn * dn;
  b.sxx = double(n * sxx - sx * sx) / n2;
  b.syy = double(n * syy - sy * sy) / n2;
  b.sxy = double(n * sxy - sx * sy) / n2;

  const double mean = 0.5 * (b.sxx + b.syy);
  const double half_diff = 0.5 * (b.sxx - b.syy);
  const double root = std::hypot(half_diff, b.sxy);
  b.lambda_major = mean + root;
  const double det = b.sxx * b.syy - b.sxy * b.sxy;
  // det/lambda_major avoids cancellation in mean - root for elongated blobs.
  b.lambda_minor = b.lambda_major > 0.0 ? std::max(0.0, det / b.lambda_major) : 0.0;
  b.lambda_minor = std::min(b.lambda_minor, b.lambda_major);

  double theta = 0.5 * std::atan2(2.0 * b.sxy, b.sxx - b.syy);
  if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
  b.theta = theta;
  return b;
}

ShapeParams shape_params(const BlobStats& b) {
  ShapeParams s;
  s.height = 4.0 * std::sqrt(std::max(0.0, b.syy));
  s.width = 4.0 * std::sqrt(std::max(0.0, b.sxx));
  s.major = 4.0 * std::sqrt(b.lambda_major);
  s.minor = 4.0 * std::sqrt(b.lambda_minor);
  s.q = b.lambda_major > 0.0 ? std::clamp(std::sqrt(b.lambda_minor / b.lambda_major), 0.0, 1.0) : 1.0;
  s.m = 1.0 - s.q;
  s.area = double(b.n);
  s.cx = b.cx;
  s.cy = b.cy;
  return s;
}

}  // namespace mouthpipe
