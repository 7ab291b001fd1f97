#include "stereomet/geometry.hpp"

#include <cmath>

namespace stereomet {

namespace {

bool all_finite(const Mat3& m) { return m.allFinite(); }

}  // namespace

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << alpha_u, gamma, u0,
       0.0, alpha_v, v0,
       0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 inv;
  inv << 1.0 / alpha_u, -gamma / (alpha_u * alpha_v),
      (gamma * v0 - alpha_v * u0) / (alpha_u * alpha_v),
      0.0, 1.0 / alpha_v, -v0 / alpha_v,
      0.0, 0.0, 1.0;
  return inv;
}

void CameraIntrinsics::validate() const {
  if (!(alpha_u > 0.0) || !(alpha_v > 0.0)) {
    throw Error("intrinsics: pixel focal lengths must be positive");
  }
  if (!std::isfinite(alpha_u) || !std::isfinite(alpha_v) ||
      !std::isfinite(gamma) || !std::isfinite(u0) || !std::isfinite(v0)) {
    throw Error("intrinsics: parameters must be finite");
  }
}

void CameraPose::validate() const {
  if (!all_finite(rotation) || !translation.allFinite()) {
    throw InvalidPoseError("pose: entries must be finite");
  }
  if (!is_rotation(rotation)) {
    throw InvalidPoseError("pose: rotation is not orthonormal with det +1");
  }
}

void StereoRig::validate() const {
  left_intrinsics.validate();
  right_intrinsics.validate();
  if (!is_rotation(relative_rotation)) {
    throw InvalidPoseError("rig: relative rotation is not a rotation matrix");
  }
  if (relative_translation.norm() == 0.0) {
    throw ZeroBaselineError("rig: relative translation has zero length");
  }
}

Vec3 homogenize(const PixelPoint& p) { return {p.u, p.v, 1.0}; }

Vec4 homogenize(const WorldPoint& p) { return {p.x, p.y, p.z, 1.0}; }

PixelPoint dehomogenize(const Vec3& h) {
  if (h.z() == 0.0) throw Error("dehomogenize: zero scale");
  return {h.x() / h.z(), h.y() / h.z()};
}

WorldPoint dehomogenize(const Vec4& h) {
  if (h.w() == 0.0) throw Error("dehomogenize: zero scale");
  return {h.x() / h.w(), h.y() / h.w(), h.z() / h.w()};
}

Mat3 skew_symmetric(const Vec3& e) {
  Mat3 m;
  m << 0.0, -e.z(), e.y(),
       e.z(), 0.0, -e.x(),
      -e.y(), e.x(), 0.0;
  return m;
}

PixelPoint project_point(const CameraIntrinsics& intrinsics,
                         const CameraPose& pose, const WorldPoint& point) {
  const Vec3 cam = pose.rotation * point.vec() + pose.translation;
  if (!(cam.z() > 0.0)) {
    throw BehindCameraError("project_point: point is behind the camera");
  }
  const Vec3 scaled = intrinsics.matrix() * cam;
  return {scaled.x() / scaled.z(), scaled.y() / scaled.z()};
}

CameraPose compose_pose(const CameraPose& a, const CameraPose& b) {
  CameraPose out;
  out.rotation = b.rotation * a.rotation;
  out.translation = b.rotation * a.translation + b.translation;
  if (rotation_drift(out.rotation) > 1e-9) {
    out.rotation = nearest_rotation(out.rotation);
  }
  return out;
}

CameraPose invert_pose(const CameraPose& a) {
  CameraPose out;
  out.rotation = a.rotation.transpose();
  out.translation = -(a.rotation.transpose() * a.translation);
  return out;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

double rotation_drift(const Mat3& r) {
  const Mat3 residual = r.transpose() * r - Mat3::Identity();
  return residual.cwiseAbs().maxCoeff();
}

bool is_rotation(const Mat3& r, double tolerance) {
  if (!all_finite(r)) return false;
  if (rotation_drift(r) > tolerance) return false;
  return std::abs(r.determinant() - 1.0) <= tolerance;
}

}  // namespace stereomet
