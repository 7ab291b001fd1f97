#include "stereomet/rectification.hpp"

#include <cmath>

namespace stereomet {

RasterImage RasterImage::zeros(int width, int height, int channels) {
  RasterImage img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.samples.assign(
      static_cast<size_t>(width) * height * channels, 0.0);
  return img;
}

void RasterImage::validate() const {
  if (width < 1 || height < 1) {
    throw Error("image: dimensions must be at least 1x1");
  }
  if (channels != 1 && channels != 3) {
    throw Error("image: channel count must be 1 or 3");
  }
  if (samples.size() != static_cast<size_t>(width) * height * channels) {
    throw Error("image: sample count does not match dimensions");
  }
}

RectifiedRig compute_rectifying_transforms(const StereoRig& rig) {
  rig.validate();

  // Work in the left camera frame. The right camera center there is
  // -R^T * t of the relative pose.
  const Vec3 right_center =
      -(rig.relative_rotation.transpose() * rig.relative_translation);
  const double baseline = right_center.norm();
  if (baseline == 0.0) {
    throw ZeroBaselineError("rectify: zero baseline");
  }

  // New x-axis along the baseline toward the right camera; y-axis orthogonal
  // to it and to the left camera's old optical axis; z completes the frame.
  const Vec3 axis_x = right_center / baseline;
  Vec3 axis_y = Vec3::UnitZ().cross(axis_x);
  const double ynorm = axis_y.norm();
  if (ynorm < 1e-12) {
    // Baseline parallel to the optical axis; fall back to the old y-axis.
    axis_y = Vec3::UnitY();
  } else {
    axis_y /= ynorm;
  }
  const Vec3 axis_z = axis_x.cross(axis_y).normalized();

  Mat3 new_rotation;
  new_rotation.row(0) = axis_x.transpose();
  new_rotation.row(1) = axis_y.transpose();
  new_rotation.row(2) = axis_z.transpose();

  const CameraIntrinsics& kl = rig.left_intrinsics;
  const CameraIntrinsics& kr = rig.right_intrinsics;
  CameraIntrinsics shared;
  shared.alpha_u = std::sqrt(kl.alpha_u * kr.alpha_u);
  shared.alpha_v = std::sqrt(kl.alpha_v * kr.alpha_v);
  shared.gamma = 0.0;
  shared.u0 = 0.5 * (kl.u0 + kr.u0);
  shared.v0 = 0.5 * (kl.v0 + kr.v0);

  RectifiedRig out;
  out.new_intrinsics = shared;
  out.baseline = baseline;
  out.focal = shared.alpha_u;
  // Old left rotation is the identity in this frame; old right rotation is
  // the relative rotation.
  out.left_transform = shared.matrix() * new_rotation * kl.inverse_matrix();
  out.right_transform = shared.matrix() * new_rotation *
                        rig.relative_rotation.transpose() *
                        kr.inverse_matrix();
  return out;
}

WarpResult warp_image(const RasterImage& src, const Mat3& transform,
                      int out_width, int out_height) {
  src.validate();
  if (std::abs(transform.determinant()) <
      1e-12 * std::pow(transform.norm(), 3)) {
    throw SingularMatrixError("warp_image: singular transform");
  }
  const Mat3 inverse = transform.inverse();

  WarpResult out;
  out.image = RasterImage::zeros(out_width, out_height, src.channels);
  out.valid.assign(static_cast<size_t>(out_width) * out_height, 0);

  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Vec3 mapped = inverse * Vec3(x, y, 1.0);
      if (mapped.z() == 0.0) continue;
      const double sx = mapped.x() / mapped.z();
      const double sy = mapped.y() / mapped.z();
      if (!(sx >= 0.0 && sx <= src.width - 1 && sy >= 0.0 &&
            sy <= src.height - 1)) {
        continue;
      }
      out.valid[static_cast<size_t>(y) * out_width + x] = 1;

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < src.channels; ++c) {
        const double top =
            (1.0 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
        const double bottom =
            (1.0 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
        out.image.at(x, y, c) = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

ResidualStats epipolar_residual(
    const Mat3& fundamental,
    std::span<const std::pair<PixelPoint, PixelPoint>> pairs) {
  if (pairs.empty()) {
    throw EmptyInputError("epipolar_residual: no pairs given");
  }
  ResidualStats stats;
  stats.count = pairs.size();
  for (const auto& [left, right] : pairs) {
    const Vec3 line = fundamental * homogenize(left);
    const double norm = std::hypot(line.x(), line.y());
    if (norm == 0.0) {
      throw DegenerateConfigurationError(
          "epipolar_residual: degenerate epipolar line");
    }
    const double distance = std::abs(homogenize(right).dot(line)) / norm;
    stats.mean += distance;
    stats.max = std::max(stats.max, distance);
  }
  stats.mean /= static_cast<double>(stats.count);
  return stats;
}

}  // namespace stereomet
