#pragma once

#include <cstdint>
#include <optional>

#include "mouthpipe/segmentation.hpp"

namespace mouthpipe {

/// Second-order statistics of a blob's pixel coordinates.
struct BlobStats {
  std::uint64_t n = 0;
  double cx = 0.0;
  double cy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  double lambda_major = 0.0;
  double lambda_minor = 0.0;
  double theta = 0.0;  // major-axis orientation in (-pi/2, pi/2]
};

/// Control parameters derived from BlobStats. Lengths are full axes in
/// pixels, using the solid-ellipse relation (semi-axis a has variance a^2/4).
struct ShapeParams {
  double height = 0.0;  // 4*sqrt(syy)
  double width = 0.0;   // 4*sqrt(sxx)
  double major = 0.0;   // 4*sqrt(lambda_major)
  double minor = 0.0;   // 4*sqrt(lambda_minor)
  double q = 1.0;       // roundness sqrt(lambda_minor/lambda_major); 1 for a point
  double m = 0.0;       // morph coordinate 1 - q: 0 round ([o]) .. 1 line ([i])
  double area = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const ShapeParams&, const ShapeParams&) = default;
};

/// Population (1/n) covariance and closed-form 2x2 eigen-decomposition.
/// nullopt for an empty mask.
std::optional<BlobStats> blob_stats(const Mask& m);

ShapeParams shape_params(const BlobStats& b);

}  // namespace mouthpipe
