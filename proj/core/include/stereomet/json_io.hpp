#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stereomet/calibration.hpp"
#include "stereomet/evaluation.hpp"
#include "stereomet/geometry.hpp"
#include "stereomet/rectification.hpp"
#include "stereomet/synthetic.hpp"

namespace stereomet {

/// Calibration parameter file: intrinsics (alpha_u, alpha_v, gamma, u0, v0)
/// plus rotation (9 numbers, row-major) and translation (3 numbers).
void write_camera_json(const std::filesystem::path& path,
                       const CameraIntrinsics& intrinsics,
                       const CameraPose& pose);
std::pair<CameraIntrinsics, CameraPose> read_camera_json(
    const std::filesystem::path& path);

/// Calibration result: the parameter file keys plus per-view poses and the
/// rms reprojection error.
void write_calibration_json(const std::filesystem::path& path,
                            const CalibrationResult& result);
CalibrationResult read_calibration_json(const std::filesystem::path& path);

/// Observation file: JSON list of views with view_id, board_points,
/// image_points.
void write_observations_json(const std::filesystem::path& path,
                             const std::vector<PlanarObservation>& views);
std::vector<PlanarObservation> read_observations_json(
    const std::filesystem::path& path);

void write_stereo_rig_json(const std::filesystem::path& path,
                           const StereoRig& rig);
StereoRig read_stereo_rig_json(const std::filesystem::path& path);

void write_rectified_rig_json(const std::filesystem::path& path,
                              const RectifiedRig& rig);
RectifiedRig read_rectified_rig_json(const std::filesystem::path& path);

void write_transform_json(const std::filesystem::path& path,
                          const SimilarityTransform& transform);
SimilarityTransform read_transform_json(const std::filesystem::path& path);

/// Component selections: object name -> point indices or pixel region.
void write_selection_json(const std::filesystem::path& path,
                          const std::map<std::string, Selection>& selections);
std::map<std::string, Selection> read_selection_json(
    const std::filesystem::path& path);

void write_scene_json(const std::filesystem::path& path,
                      const SceneSpec& scene);
SceneSpec read_scene_json(const std::filesystem::path& path);

/// Ground truth: CSV with object,axis,actual rows.
struct GroundTruthRow {
  std::string object_name;
  char axis = 'L';
  double actual = 0.0;
};
void write_ground_truth_csv(const std::filesystem::path& path,
                            const std::vector<GroundTruthRow>& rows);
std::vector<GroundTruthRow> read_ground_truth_csv(
    const std::filesystem::path& path);

/// Alignment landmarks: CSV with name,u,v,x,y,z rows pairing a left-image
/// pixel with its reference-frame position.
struct AlignmentLandmark {
  std::string name;
  PixelPoint pixel;
  WorldPoint reference;
};
void write_alignment_landmarks_csv(const std::filesystem::path& path,
                                   const std::vector<AlignmentLandmark>& rows);
std::vector<AlignmentLandmark> read_alignment_landmarks_csv(
    const std::filesystem::path& path);

}  // namespace stereomet
