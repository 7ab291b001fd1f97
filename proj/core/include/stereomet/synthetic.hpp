#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stereomet/calibration.hpp"
#include "stereomet/correspondence.hpp"
#include "stereomet/evaluation.hpp"
#include "stereomet/geometry.hpp"
#include "stereomet/reconstruction.hpp"
#include "stereomet/rectification.hpp"

namespace stereomet {

/// Object placement: p_world = rotation * p_object + translation.
struct Placement {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Axis-aligned box solid, world coordinates.
struct BoxObject {
  std::string name = "box";
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
};

/// Planar calibration target: a rows x cols corner grid with the given
/// spacing, centered on the origin of its own plane (grid plane is the
/// object's z = 0). Rendered as the covered rectangle.
struct BoardObject {
  std::string name = "board";
  int rows = 7;
  int cols = 10;
  double square_size = 1.0;
  Placement placement;
};

struct GroundTruthEntry {
  std::string object_name;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Everything a deterministic test scene needs: solids, a rectified camera
/// pair (shared intrinsics, baseline along the camera x-axis) and texture
/// controls. All randomness flows from `seed`.
struct SceneSpec {
  int image_width = 640;
  int image_height = 480;
  std::uint64_t seed = 1;

  double texture_frequency = 1.25;
  int texture_octaves = 3;

  /// Shared rectified intrinsics (zero skew).
  CameraIntrinsics camera;
  double baseline = 1.0;
  /// Shared focal of the depth relation; 0 means camera.alpha_u.
  double focal = 0.0;
  /// World -> left rectified camera.
  CameraPose left_pose;

  std::vector<BoxObject> boxes;
  std::vector<BoardObject> boards;

  int landmark_grid_step = 40;
  std::string selection_name = "scene";
  /// Objects contributing to the exported selection region; empty = all.
  std::vector<std::string> selection_objects;
  std::vector<GroundTruthEntry> ground_truth;

  double shared_focal() const { return focal > 0.0 ? focal : camera.alpha_u; }
};

struct RenderResult {
  RasterImage left;
  RasterImage right;
  /// Analytic disparity of the left view (focal * baseline / depth).
  DisparityMap gt_disparity;
  /// Analytic surface points in the left camera frame, source pixels set.
  PointCloud gt_cloud;
  /// Pixel -> world correspondences sampled on a grid, for alignment.
  std::vector<std::pair<PixelPoint, WorldPoint>> landmarks;
  /// Bounding rectangle (pixels) of the selected objects' footprint.
  std::optional<PixelRegion> selection_region;
  /// The rig the rendered pair already satisfies (identity transforms).
  RectifiedRig rig;
};

/// Deterministic multi-octave value noise in [0, 1].
double value_noise(const Vec3& position, std::uint64_t seed, double frequency,
                   int octaves);

/// Exact projections of the board's corner grid under the given plane-to-
/// camera pose, with optional seeded Gaussian pixel noise. Throws
/// BehindCameraError when any corner has non-positive depth.
PlanarObservation project_board(const BoardObject& board,
                                const CameraIntrinsics& intrinsics,
                                const CameraPose& view_pose,
                                const std::string& view_id,
                                double pixel_noise_sigma = 0.0,
                                std::uint64_t seed = 0);

/// Convenience overload drawing board and camera from the scene.
PlanarObservation project_board(const SceneSpec& scene,
                                const CameraPose& view_pose,
                                const std::string& view_id,
                                double pixel_noise_sigma = 0.0,
                                std::uint64_t seed = 0);

/// Ray-cast rendering of the scene into both rectified cameras at pixel
/// centers (nearest hit wins, no anti-aliasing), plus analytic ground truth.
RenderResult render_stereo_pair(const SceneSpec& scene);

}  // namespace stereomet
