#pragma once

#include <filesystem>

#include "stereomet/correspondence.hpp"
#include "stereomet/reconstruction.hpp"

namespace stereomet {

/// ASCII PLY point cloud: double x/y/z, optional uchar red/green/blue,
/// optional double u/v source-pixel properties.
void write_cloud_ply(const std::filesystem::path& path,
                     const PointCloud& cloud);

PointCloud read_cloud_ply(const std::filesystem::path& path);

/// Mesh writers: ASCII PLY, or OBJ v/f records when the extension is .obj.
void write_mesh_ply(const std::filesystem::path& path, const SurfaceMesh& mesh);
void write_mesh_obj(const std::filesystem::path& path, const SurfaceMesh& mesh);
void write_mesh(const std::filesystem::path& path, const SurfaceMesh& mesh);

/// Disparity as a plain-text value grid (invalid pixels write 0) plus a
/// separate validity mask image.
void write_disparity(const std::filesystem::path& grid_path,
                     const std::filesystem::path& mask_path,
                     const DisparityMap& map);

DisparityMap read_disparity(const std::filesystem::path& grid_path,
                            const std::filesystem::path& mask_path);

}  // namespace stereomet
