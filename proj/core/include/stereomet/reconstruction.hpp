#pragma once

#include <array>
#include <optional>
#include <vector>

#include "stereomet/correspondence.hpp"
#include "stereomet/geometry.hpp"
#include "stereomet/rectification.hpp"

namespace stereomet {

/// Unordered set of reconstructed space points. Colors and source pixels are
/// optional; when present they parallel `points`.
struct PointCloud {
  std::vector<WorldPoint> points;
  std::vector<std::array<double, 3>> colors;
  std::vector<PixelPoint> source_pixels;

  bool has_colors() const { return colors.size() == points.size(); }
  bool has_source_pixels() const {
    return source_pixels.size() == points.size();
  }
};

struct SurfaceMesh {
  std::vector<WorldPoint> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Depth from a rectified correspondence:
///   X = B*F*(x_l - u0) / (alpha_u * (x_l - x_r))
///   Y = B*F*(y_l - v0) / (alpha_v * (x_l - x_r))
///   Z = B*F / (x_l - x_r)
/// with B the baseline and F the shared focal length of the rig.
/// Throws NonPositiveDisparityError when x_l - x_r <= 0.
WorldPoint triangulate_rectified(double x_left, double y_left, double x_right,
                                 const RectifiedRig& rig);

/// One space point per valid pixel with positive disparity; everything else
/// is skipped. Source pixels are recorded per point. An empty cloud is fine.
PointCloud cloud_from_disparity(const DisparityMap& disparity,
                                const RectifiedRig& rig);

struct MeshOptions {
  /// Triangles with an edge longer than edge_factor times the median edge
  /// length are discarded to avoid bridging depth discontinuities.
  double edge_factor = 5.0;
};

/// Delaunay triangulation over the cloud's source-pixel coordinates (or over
/// a dominant-plane projection when no source pixels exist), lifted to 3D.
/// Cocircular ambiguities resolve to the lexicographically smallest diagonal
/// index pair. Throws InsufficientPointsError and CollinearPointsError.
SurfaceMesh mesh_from_cloud(const PointCloud& cloud,
                            const MeshOptions& options = {});

}  // namespace stereomet
