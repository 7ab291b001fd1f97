#pragma once

#include <Eigen/Dense>

#include "stereomet/errors.hpp"

namespace stereomet {

// Row-major storage throughout; serialized matrices are plain row-major
// number lists.
using Mat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

/// 2D image location in pixels.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// 3D location in scene length units. Units are caller-defined but must be
/// consistent throughout a project; nothing here ever converts them.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  static WorldPoint from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

/// Internal camera model: pixel focal lengths, skew, principal point.
struct CameraIntrinsics {
  double alpha_u = 1.0;
  double alpha_v = 1.0;
  double gamma = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;

  /// Upper-triangular projection matrix.
  Mat3 matrix() const;
  /// Closed-form inverse of matrix().
  Mat3 inverse_matrix() const;

  /// Throws Error unless alpha_u > 0, alpha_v > 0 and all entries finite.
  void validate() const;
};

/// Rigid placement of a camera: x_cam = rotation * x_world + translation.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws InvalidPoseError unless rotation is orthonormal with det +1
  /// (1e-9 per entry).
  void validate() const;
};

/// A calibrated camera pair. relative_rotation / relative_translation map
/// left-camera coordinates into the right camera frame.
struct StereoRig {
  CameraIntrinsics left_intrinsics;
  CameraIntrinsics right_intrinsics;
  Mat3 relative_rotation = Mat3::Identity();
  Vec3 relative_translation = Vec3::Zero();

  /// Throws on non-rotation relative_rotation or zero baseline.
  void validate() const;
};

/// Appends a unit coordinate: (u, v) -> [u, v, 1].
Vec3 homogenize(const PixelPoint& p);
/// Appends a unit coordinate: (x, y, z) -> [x, y, z, 1].
Vec4 homogenize(const WorldPoint& p);

/// Divides out the last coordinate. Throws Error when it is zero.
PixelPoint dehomogenize(const Vec3& h);
WorldPoint dehomogenize(const Vec4& h);

/// Cross-product matrix: skew_symmetric(e) * v == e x v for all v.
Mat3 skew_symmetric(const Vec3& e);

/// Pinhole projection. Applies the pose, scales by the intrinsic matrix and
/// divides out the projective depth. Throws BehindCameraError when the
/// camera-frame depth is <= 0 (strict, no epsilon).
PixelPoint project_point(const CameraIntrinsics& intrinsics,
                         const CameraPose& pose, const WorldPoint& point);

/// Chains two frame maps: result sends world through `a`, then through `b`.
/// Re-orthonormalizes the rotation when composition drift exceeds 1e-9.
CameraPose compose_pose(const CameraPose& a, const CameraPose& b);

/// Inverse map: compose_pose(a, invert_pose(a)) is the identity.
CameraPose invert_pose(const CameraPose& a);

/// Nearest orthonormal matrix with det +1 (polar projection via SVD).
Mat3 nearest_rotation(const Mat3& m);

/// Max absolute deviation of R^T R from the identity, entry-wise.
double rotation_drift(const Mat3& r);

bool is_rotation(const Mat3& r, double tolerance = 1e-9);

}  // namespace stereomet
