#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stereomet/geometry.hpp"

namespace stereomet {

/// Row-major grid of intensity samples in [0, 1]; 1 (gray) or 3 (rgb)
/// channels.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> samples;

  static RasterImage zeros(int width, int height, int channels = 1);

  double& at(int x, int y, int c = 0) {
    return samples[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return samples[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  /// Throws Error when the sample count disagrees with the dimensions.
  void validate() const;
};

/// Output of rectification: per-image projective transforms plus the shared
/// camera model both rectified images obey. Corresponding points share a
/// scanline after applying the transforms.
struct RectifiedRig {
  Mat3 left_transform = Mat3::Identity();
  Mat3 right_transform = Mat3::Identity();
  /// Shared by both rectified cameras; skew is zero.
  CameraIntrinsics new_intrinsics;
  /// Optical-center distance, scene length units.
  double baseline = 0.0;
  /// Shared pixel focal length used by the depth relation; equals
  /// new_intrinsics.alpha_u for the transforms built here.
  double focal = 0.0;
};

/// Builds rectifying transforms: a common rotation with its x-axis along the
/// baseline, a shared intrinsic matrix (per-axis geometric-mean focal
/// lengths, zero skew, averaged principal points), and per-image homographies
/// new_K * new_R * (old_K * old_R)^-1. Throws ZeroBaselineError.
RectifiedRig compute_rectifying_transforms(const StereoRig& rig);

struct WarpResult {
  RasterImage image;
  /// Per-pixel flag: 1 where the inverse-mapped source coordinate fell inside
  /// [0, width-1] x [0, height-1], else 0 (and the sample is 0).
  std::vector<std::uint8_t> valid;
};

/// Projective warp by inverse mapping with bilinear interpolation. Pixel
/// centers sit at integer coordinates. Throws SingularMatrixError.
WarpResult warp_image(const RasterImage& src, const Mat3& transform,
                      int out_width, int out_height);

struct ResidualStats {
  double mean = 0.0;
  double max = 0.0;
  size_t count = 0;
};

/// Point-to-epipolar-line distances (pixels): for each pair, the distance of
/// the right point from the epipolar line of the left point. Throws
/// EmptyInputError.
ResidualStats epipolar_residual(
    const Mat3& fundamental,
    std::span<const std::pair<PixelPoint, PixelPoint>> pairs);

}  // namespace stereomet
