#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "stereomet/geometry.hpp"

namespace stereomet {

/// Corner correspondences for one view of a planar target. Board points are
/// 2D coordinates on the target plane (the plane's third world coordinate is
/// zero); image points are their observed pixel projections, same order.
struct PlanarObservation {
  std::string view_id;
  std::vector<Vec2> board_points;
  std::vector<PixelPoint> image_points;
};

struct CalibrationOptions {
  bool refine = true;
  /// Solve the 4-parameter model (skew pinned to zero). Two views suffice;
  /// the full 5-parameter model needs three.
  bool fix_gamma = false;
  int max_iterations = 100;
  double relative_cost_tolerance = 1e-12;
};

struct CalibrationResult {
  CameraIntrinsics intrinsics;
  std::map<std::string, CameraPose> view_poses;
  double rms_reprojection_error = 0.0;
  /// False when refinement hit the iteration cap before the cost settled;
  /// the best iterate is still reported.
  bool converged = true;
  int refinement_iterations = 0;
};

/// Relative placement of the right camera in the left camera's frame.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Plane-to-image homography by normalized direct linear transform
/// (centroid shift, sqrt(2) mean-distance scaling on both point sets).
/// The result has unit Frobenius norm and a non-negative last entry.
/// Throws DegenerateConfigurationError for < 4 pairs or collinear points,
/// DimensionMismatchError when list lengths differ.
Mat3 estimate_homography(std::span<const Vec2> board_points,
                         std::span<const PixelPoint> image_points);

/// Planar-target calibration: per-view homographies, closed-form intrinsics
/// from the absolute-conic constraints, per-view pose recovery, then optional
/// Levenberg-Marquardt reprojection refinement over all parameters.
/// Throws InsufficientViewsError when fewer views than the model needs.
CalibrationResult calibrate_intrinsics(
    std::span<const PlanarObservation> observations,
    const CalibrationOptions& options = {});

/// Pose of the target plane for one view, decomposed from its homography.
/// The rotation is the orthonormalized [r1 r2 r1xr2] frame; the sign is
/// fixed so the target lies in front of the camera.
CameraPose estimate_view_pose(const Mat3& homography,
                              const CameraIntrinsics& intrinsics);

/// Relative pose between two cameras expressed in a common world frame:
/// rotation = Nr * Nl^-1, translation = er - Nr * Nl^-1 * el.
RelativePose stereo_relative_pose(const CameraPose& left,
                                  const CameraPose& right);

/// Fundamental matrix of a rig, unit Frobenius norm, rank 2 by construction.
/// Throws ZeroBaselineError for a zero relative translation.
Mat3 fundamental_matrix(const StereoRig& rig);

/// Root-mean-square reprojection error of a parameter set over observations.
double reprojection_rms(const CameraIntrinsics& intrinsics,
                        const std::map<std::string, CameraPose>& view_poses,
                        std::span<const PlanarObservation> observations);

}  // namespace stereomet
