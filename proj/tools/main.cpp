// stereomet command-line tool: one subcommand per pipeline stage plus a
// config-driven end-to-end run. Exit code 2 flags usage/config problems
// (including missing inputs), exit code 1 flags processing failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stereomet/calibration.hpp"
#include "stereomet/cloud_io.hpp"
#include "stereomet/correspondence.hpp"
#include "stereomet/evaluation.hpp"
#include "stereomet/geometry.hpp"
#include "stereomet/image_io.hpp"
#include "stereomet/json_io.hpp"
#include "stereomet/reconstruction.hpp"
#include "stereomet/rectification.hpp"
#include "stereomet/synthetic.hpp"
#include "stereomet/version.hpp"

namespace fs = std::filesystem;
using namespace stereomet;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  fs::path out_dir = ".";
  bool quiet = false;
  std::optional<std::uint64_t> seed;
};

void require_exists(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw ConfigError(stage + ": input file not found: " + path.string());
  }
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::exists(dir)) {
    throw ConfigError("cannot create output directory: " + dir.string());
  }
}

void note(const Global& g, const std::string& message) {
  if (!g.quiet) std::cout << message << "\n";
}

// ---------------------------------------------------------------------------
// Stage runners, shared between the standalone subcommands and `pipeline`.
// ---------------------------------------------------------------------------

CalibrationResult run_calibrate(const Global& g, const fs::path& observations,
                                const CalibrationOptions& options,
                                const fs::path& out_json) {
  require_exists(observations, "calibrate");
  const auto views = read_observations_json(observations);
  const CalibrationResult result = calibrate_intrinsics(views, options);
  write_calibration_json(out_json, result);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "[calibrate] %zu views, rms %.6f px%s -> %s", views.size(),
                result.rms_reprojection_error,
                result.converged ? "" : " (iteration cap hit)",
                out_json.string().c_str());
  note(g, buf);
  if (!result.converged) {
    std::cerr << "warning: calibrate: refinement stopped at the iteration "
                 "cap; reporting the best iterate\n";
  }
  return result;
}

StereoRig run_stereo_pose(const Global& g, const fs::path& left_calibration,
                          const fs::path& right_calibration,
                          const std::string& view_id,
                          const fs::path& out_json) {
  require_exists(left_calibration, "stereo-pose");
  require_exists(right_calibration, "stereo-pose");
  const CalibrationResult left = read_calibration_json(left_calibration);
  const CalibrationResult right = read_calibration_json(right_calibration);
  const auto lit = left.view_poses.find(view_id);
  const auto rit = right.view_poses.find(view_id);
  if (lit == left.view_poses.end() || rit == right.view_poses.end()) {
    throw ConfigError("stereo-pose: view '" + view_id +
                      "' missing from a calibration file");
  }
  const RelativePose rel = stereo_relative_pose(lit->second, rit->second);
  StereoRig rig;
  rig.left_intrinsics = left.intrinsics;
  rig.right_intrinsics = right.intrinsics;
  rig.relative_rotation = rel.rotation;
  rig.relative_translation = rel.translation;
  rig.validate();
  write_stereo_rig_json(out_json, rig);
  note(g, "[stereo-pose] view '" + view_id + "' -> " + out_json.string());
  return rig;
}

RectifiedRig run_rectify(const Global& g, const fs::path& rig_path,
                         const fs::path& left_image,
                         const fs::path& right_image, const fs::path& out_dir) {
  require_exists(rig_path, "rectify");
  require_exists(left_image, "rectify");
  require_exists(right_image, "rectify");
  const StereoRig rig = read_stereo_rig_json(rig_path);
  const RectifiedRig rectified = compute_rectifying_transforms(rig);

  const RasterImage left = read_image(left_image);
  const RasterImage right = read_image(right_image);
  const WarpResult warped_left =
      warp_image(left, rectified.left_transform, left.width, left.height);
  const WarpResult warped_right =
      warp_image(right, rectified.right_transform, right.width, right.height);

  write_image(out_dir / "rectified_left.pgm", warped_left.image);
  write_image(out_dir / "rectified_right.pgm", warped_right.image);
  write_mask(out_dir / "rectified_left_mask.pgm", warped_left.valid,
             left.width, left.height);
  write_mask(out_dir / "rectified_right_mask.pgm", warped_right.valid,
             right.width, right.height);
  write_rectified_rig_json(out_dir / "rectified_rig.json", rectified);
  note(g, "[rectify] baseline " + std::to_string(rectified.baseline) +
              " -> " + (out_dir / "rectified_*.pgm").string());
  return rectified;
}

DisparityMap run_disparity(const Global& g, const fs::path& left_image,
                           const fs::path& right_image,
                           const DisparityParams& params,
                           const fs::path& out_dir) {
  require_exists(left_image, "disparity");
  require_exists(right_image, "disparity");
  const RasterImage left = read_image(left_image);
  const RasterImage right = read_image(right_image);
  const DisparityMap map = compute_disparity(left, right, params);
  write_disparity(out_dir / "disparity.txt", out_dir / "disparity_mask.pgm",
                  map);
  const auto valid = static_cast<size_t>(
      std::count(map.validity.begin(), map.validity.end(), std::uint8_t{1}));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "[disparity] %dx%d, range [%d, %d], %zu valid px", map.width,
                map.height, params.d_min, params.d_max, valid);
  note(g, buf);
  return map;
}

PointCloud run_reconstruct(const Global& g, const fs::path& grid,
                           const fs::path& mask, const fs::path& rig_path,
                           const fs::path& out_cloud) {
  require_exists(grid, "reconstruct");
  require_exists(mask, "reconstruct");
  require_exists(rig_path, "reconstruct");
  const DisparityMap map = read_disparity(grid, mask);
  const RectifiedRig rig = read_rectified_rig_json(rig_path);
  const PointCloud cloud = cloud_from_disparity(map, rig);
  write_cloud_ply(out_cloud, cloud);
  note(g, "[reconstruct] " + std::to_string(cloud.points.size()) +
              " points -> " + out_cloud.string());
  return cloud;
}

void run_mesh(const Global& g, const fs::path& cloud_path,
              const fs::path& out_path, int stride, double edge_factor) {
  require_exists(cloud_path, "mesh");
  PointCloud cloud = read_cloud_ply(cloud_path);
  if (stride > 1) {
    PointCloud thinned;
    for (size_t i = 0; i < cloud.points.size();
         i += static_cast<size_t>(stride)) {
      thinned.points.push_back(cloud.points[i]);
      if (cloud.has_colors()) thinned.colors.push_back(cloud.colors[i]);
      if (cloud.has_source_pixels()) {
        thinned.source_pixels.push_back(cloud.source_pixels[i]);
      }
    }
    cloud = std::move(thinned);
  }
  MeshOptions options;
  options.edge_factor = edge_factor;
  const SurfaceMesh mesh = mesh_from_cloud(cloud, options);
  write_mesh(out_path, mesh);
  note(g, "[mesh] " + std::to_string(mesh.triangles.size()) +
              " triangles -> " + out_path.string());
}

SimilarityTransform run_align(const Global& g, const fs::path& grid,
                              const fs::path& mask, const fs::path& rig_path,
                              const fs::path& landmarks_path,
                              const fs::path& out_json) {
  require_exists(grid, "align");
  require_exists(mask, "align");
  require_exists(rig_path, "align");
  require_exists(landmarks_path, "align");
  const DisparityMap map = read_disparity(grid, mask);
  const RectifiedRig rig = read_rectified_rig_json(rig_path);
  const auto landmarks = read_alignment_landmarks_csv(landmarks_path);

  std::vector<WorldPoint> source;
  std::vector<WorldPoint> target;
  for (const auto& landmark : landmarks) {
    // Use the nearest valid disparity pixel within a small window.
    const int cu = static_cast<int>(std::lround(landmark.pixel.u));
    const int cv = static_cast<int>(std::lround(landmark.pixel.v));
    int best_x = -1, best_y = -1;
    double best_dist = 1e30;
    for (int dy = -3; dy <= 3; ++dy) {
      for (int dx = -3; dx <= 3; ++dx) {
        const int x = cu + dx;
        const int y = cv + dy;
        if (x < 0 || x >= map.width || y < 0 || y >= map.height) continue;
        if (!map.valid_at(x, y)) continue;
        const double dist = dx * dx + dy * dy;
        if (dist < best_dist) {
          best_dist = dist;
          best_x = x;
          best_y = y;
        }
      }
    }
    if (best_x < 0) continue;
    const double d = map.value_at(best_x, best_y);
    if (!(d > 0.0)) continue;
    source.push_back(
        triangulate_rectified(best_x, best_y, best_x - d, rig));
    target.push_back(landmark.reference);
  }
  if (source.size() < 3) {
    throw Error("align: fewer than 3 landmarks hit valid disparities");
  }
  const SimilarityTransform transform = align_similarity(source, target);
  write_transform_json(out_json, transform);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "[align] %zu landmarks, scale %.6f -> %s", source.size(),
                transform.scale, out_json.string().c_str());
  note(g, buf);
  return transform;
}

std::vector<MeasurementRecord> run_measure(
    const Global& g, const fs::path& grid, const fs::path& mask,
    const fs::path& rig_path, const std::optional<fs::path>& transform_path,
    const fs::path& selection_path, const fs::path& ground_truth_path,
    const fs::path& out_csv) {
  require_exists(grid, "measure");
  require_exists(mask, "measure");
  require_exists(rig_path, "measure");
  require_exists(selection_path, "measure");
  require_exists(ground_truth_path, "measure");
  if (transform_path) require_exists(*transform_path, "measure");

  const DisparityMap map = read_disparity(grid, mask);
  const RectifiedRig rig = read_rectified_rig_json(rig_path);
  PointCloud cloud = cloud_from_disparity(map, rig);
  if (transform_path) {
    const SimilarityTransform transform = read_transform_json(*transform_path);
    for (auto& p : cloud.points) p = transform.apply(p);
  }
  const auto selections = read_selection_json(selection_path);
  const auto truth = read_ground_truth_csv(ground_truth_path);

  std::vector<MeasurementRecord> records;
  std::map<std::string, Extents> measured;
  for (const auto& row : truth) {
    auto it = measured.find(row.object_name);
    if (it == measured.end()) {
      const auto sel = selections.find(row.object_name);
      if (sel == selections.end()) {
        throw ConfigError("measure: no selection for object '" +
                          row.object_name + "'");
      }
      it = measured
               .emplace(row.object_name,
                        measure_dimension(cloud, sel->second))
               .first;
    }
    MeasurementRecord record;
    record.object_name = row.object_name;
    record.axis = row.axis;
    record.actual = row.actual;
    switch (row.axis) {
      case 'L': record.measured = it->second.length; break;
      case 'W': record.measured = it->second.width; break;
      case 'H': record.measured = it->second.height; break;
      default:
        throw ConfigError("measure: unknown axis '" +
                          std::string(1, row.axis) + "' for object '" +
                          row.object_name + "'");
    }
    record.percent_error = percent_error(record.actual, record.measured);
    records.push_back(std::move(record));
  }
  write_records_csv(out_csv, records);
  note(g, "[measure] " + std::to_string(records.size()) + " records -> " +
              out_csv.string());
  return records;
}

void run_report(const Global& g, const fs::path& records_path,
                const fs::path& out_dir) {
  require_exists(records_path, "report");
  std::vector<MeasurementRecord> records = import_records_csv(records_path);
  if (records.empty()) {
    throw EmptyInputError("report: no records in " + records_path.string());
  }
  for (auto& r : records) {
    r.percent_error = percent_error(r.actual, r.measured);
  }
  const ErrorSummary summary = aggregate_errors(records);
  export_report(records, summary, out_dir / "report.csv",
                out_dir / "summary.json");
  if (!g.quiet) {
    std::printf("%-28s %-4s %12s %12s %9s\n", "object", "axis", "actual",
                "measured", "error");
    for (const auto& r : records) {
      std::printf("%-28s %-4c %12.5f %12.5f %8.2f%%\n", r.object_name.c_str(),
                  r.axis, r.actual, r.measured, r.percent_error);
    }
    std::printf("mean error %.2f%%, population std %.2f%% over %zu cells\n",
                summary.mean_percent, summary.std_percent, records.size());
  }
}

void run_synth(const Global& g, const fs::path& scene_path,
               const fs::path& out_dir) {
  require_exists(scene_path, "synth");
  SceneSpec scene = read_scene_json(scene_path);
  if (g.seed) scene.seed = *g.seed;

  const RenderResult render = render_stereo_pair(scene);
  write_image(out_dir / "left.pgm", render.left);
  write_image(out_dir / "right.pgm", render.right);
  write_disparity(out_dir / "gt_disparity.txt",
                  out_dir / "gt_disparity_mask.pgm", render.gt_disparity);
  write_cloud_ply(out_dir / "gt_cloud.ply", render.gt_cloud);
  write_rectified_rig_json(out_dir / "rig.json", render.rig);

  std::vector<AlignmentLandmark> landmarks;
  for (size_t i = 0; i < render.landmarks.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "l%04zu", i);
    landmarks.push_back(
        {name, render.landmarks[i].first, render.landmarks[i].second});
  }
  write_alignment_landmarks_csv(out_dir / "landmarks_align.csv", landmarks);

  if (render.selection_region) {
    std::map<std::string, Selection> selections;
    Selection sel;
    sel.region = render.selection_region;
    selections.emplace(scene.selection_name, sel);
    write_selection_json(out_dir / "selection.json", selections);
  }

  std::vector<GroundTruthRow> truth;
  for (const auto& entry : scene.ground_truth) {
    truth.push_back({entry.object_name, 'L', entry.length});
    truth.push_back({entry.object_name, 'W', entry.width});
    truth.push_back({entry.object_name, 'H', entry.height});
  }
  if (!truth.empty()) {
    write_ground_truth_csv(out_dir / "ground_truth.csv", truth);
  }

  // A board in the scene also yields a ready-made calibration input: five
  // deterministic poses orbiting the target.
  if (!scene.boards.empty()) {
    const BoardObject& board = scene.boards.front();
    const double extent =
        std::max((board.cols - 1), (board.rows - 1)) * board.square_size;
    const double depth = 2.4 * extent;
    const double tilt[5][2] = {
        {0.0, 0.0}, {0.35, 0.1}, {-0.3, 0.15}, {0.12, -0.35}, {-0.18, 0.3}};
    std::vector<PlanarObservation> views;
    for (int i = 0; i < 5; ++i) {
      const double ax = tilt[i][0];
      const double ay = tilt[i][1];
      Mat3 rx, ry;
      rx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax),
          std::cos(ax);
      ry << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0,
          std::cos(ay);
      CameraPose pose;
      pose.rotation = rx * ry;
      pose.translation = Vec3(0.12 * extent * (i % 3 - 1),
                              0.08 * extent * (i % 2), depth);
      views.push_back(project_board(board, scene.camera, pose,
                                    "view" + std::to_string(i)));
    }
    write_observations_json(out_dir / "observations.json", views);
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "[synth] %dx%d, %zu ground-truth points, %zu landmarks -> %s",
                scene.image_width, scene.image_height,
                render.gt_cloud.points.size(), landmarks.size(),
                out_dir.string().c_str());
  note(g, buf);
}

// ---------------------------------------------------------------------------
// pipeline: chain the stages over one config file.
// ---------------------------------------------------------------------------

void run_pipeline(Global g, const fs::path& config_path) {
  require_exists(config_path, "pipeline");
  nlohmann::json config;
  {
    std::ifstream in(config_path);
    try {
      config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("pipeline: invalid config JSON: " +
                        std::string(e.what()));
    }
  }
  const fs::path base = config_path.parent_path();
  auto resolve = [&](const std::string& value) { return base / value; };

  if (config.contains("out_dir") && g.out_dir == ".") {
    g.out_dir = resolve(config.at("out_dir").get<std::string>());
  }
  ensure_out_dir(g.out_dir);

  // Validate parameter ranges and input paths up front; nothing runs on a
  // bad configuration.
  DisparityParams params;
  if (!config.contains("disparity")) {
    throw ConfigError("pipeline: config needs a 'disparity' block");
  }
  {
    const auto& block = config.at("disparity");
    params.window_radius = block.value("window_radius", 4);
    params.d_min = block.value("d_min", 0);
    params.d_max = block.value("d_max", 64);
    params.min_texture = block.value("min_texture", 1e-4);
    params.uniqueness_ratio = block.value("uniqueness_ratio", 0.95);
    if (params.d_min > params.d_max) {
      throw ConfigError("pipeline: disparity d_min exceeds d_max");
    }
    if (params.window_radius < 1) {
      throw ConfigError("pipeline: disparity window_radius must be >= 1");
    }
  }

  fs::path left_image, right_image, rig_path;
  const bool rectify_stage = config.contains("rectification");
  if (rectify_stage) {
    const auto& block = config.at("rectification");
    rig_path = resolve(block.at("rig").get<std::string>());
    left_image = resolve(block.at("left_image").get<std::string>());
    right_image = resolve(block.at("right_image").get<std::string>());
    require_exists(rig_path, "pipeline/rectification");
    require_exists(left_image, "pipeline/rectification");
    require_exists(right_image, "pipeline/rectification");
  } else {
    const auto& block = config.at("disparity");
    left_image = resolve(block.at("left_image").get<std::string>());
    right_image = resolve(block.at("right_image").get<std::string>());
    require_exists(left_image, "pipeline/disparity");
    require_exists(right_image, "pipeline/disparity");
  }

  if (!config.contains("reconstruction")) {
    throw ConfigError("pipeline: config needs a 'reconstruction' block");
  }
  fs::path rect_rig_path;
  if (!rectify_stage) {
    rect_rig_path =
        resolve(config.at("reconstruction").at("rig").get<std::string>());
    require_exists(rect_rig_path, "pipeline/reconstruction");
  }

  std::optional<fs::path> landmarks_path;
  if (config.contains("alignment")) {
    landmarks_path =
        resolve(config.at("alignment").at("landmarks").get<std::string>());
    require_exists(*landmarks_path, "pipeline/alignment");
  }

  std::optional<fs::path> selection_path, truth_path;
  if (config.contains("measurement")) {
    const auto& block = config.at("measurement");
    selection_path = resolve(block.at("selection").get<std::string>());
    truth_path = resolve(block.at("ground_truth").get<std::string>());
    require_exists(*selection_path, "pipeline/measurement");
    require_exists(*truth_path, "pipeline/measurement");
  }

  std::optional<fs::path> calib_left, calib_right;
  std::string stereo_view;
  CalibrationOptions calib_options;
  if (config.contains("calibration")) {
    const auto& block = config.at("calibration");
    calib_left = resolve(block.at("left_observations").get<std::string>());
    calib_right = resolve(block.at("right_observations").get<std::string>());
    stereo_view = block.value("stereo_view", std::string("view0"));
    calib_options.refine = block.value("refine", true);
    calib_options.fix_gamma = block.value("fix_gamma", false);
    require_exists(*calib_left, "pipeline/calibration");
    require_exists(*calib_right, "pipeline/calibration");
  }

  // Stage chain.
  if (calib_left) {
    run_calibrate(g, *calib_left, calib_options,
                  g.out_dir / "calibration_left.json");
    run_calibrate(g, *calib_right, calib_options,
                  g.out_dir / "calibration_right.json");
    run_stereo_pose(g, g.out_dir / "calibration_left.json",
                    g.out_dir / "calibration_right.json", stereo_view,
                    g.out_dir / "rig.json");
    if (rectify_stage) rig_path = g.out_dir / "rig.json";
  }
  if (rectify_stage) {
    run_rectify(g, rig_path, left_image, right_image, g.out_dir);
    left_image = g.out_dir / "rectified_left.pgm";
    right_image = g.out_dir / "rectified_right.pgm";
    rect_rig_path = g.out_dir / "rectified_rig.json";
  }

  run_disparity(g, left_image, right_image, params, g.out_dir);
  run_reconstruct(g, g.out_dir / "disparity.txt",
                  g.out_dir / "disparity_mask.pgm", rect_rig_path,
                  g.out_dir / "cloud.ply");
  if (config.contains("mesh")) {
    const auto& block = config.at("mesh");
    run_mesh(g, g.out_dir / "cloud.ply", g.out_dir / "mesh.ply",
             block.value("stride", 1), block.value("edge_factor", 5.0));
  }
  std::optional<fs::path> transform_path;
  if (landmarks_path) {
    run_align(g, g.out_dir / "disparity.txt", g.out_dir / "disparity_mask.pgm",
              rect_rig_path, *landmarks_path, g.out_dir / "transform.json");
    transform_path = g.out_dir / "transform.json";
  }
  if (selection_path) {
    run_measure(g, g.out_dir / "disparity.txt",
                g.out_dir / "disparity_mask.pgm", rect_rig_path,
                transform_path, *selection_path, *truth_path,
                g.out_dir / "records.csv");
    run_report(g, g.out_dir / "records.csv", g.out_dir);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stereomet: stereo photogrammetry and dimensional metrology"};
  app.set_version_flag("--version", std::string(kGenerator));
  app.require_subcommand(1);

  Global g;
  std::string out_dir_flag = ".";
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  app.add_option("--out-dir", out_dir_flag, "Output directory")
      ->each([&](const std::string&) {});
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_option("--seed", seed_flag, "Override scene seed")
      ->each([&](const std::string&) { seed_given = true; });

  // calibrate
  auto* calibrate = app.add_subcommand(
      "calibrate", "Planar-target intrinsics and per-view poses");
  std::string calib_obs, calib_out = "calibration.json";
  bool no_refine = false, fix_gamma = false;
  calibrate->add_option("--observations", calib_obs, "Observation JSON")
      ->required();
  calibrate->add_option("--output", calib_out, "Output JSON name");
  calibrate->add_flag("--no-refine", no_refine, "Skip nonlinear refinement");
  calibrate->add_flag("--fix-gamma", fix_gamma, "Pin skew to zero");

  // stereo-pose
  auto* stereo_pose = app.add_subcommand(
      "stereo-pose", "Relative pose of a calibrated pair from a shared view");
  std::string sp_left, sp_right, sp_view = "view0", sp_out = "rig.json";
  stereo_pose->add_option("--left", sp_left, "Left calibration JSON")
      ->required();
  stereo_pose->add_option("--right", sp_right, "Right calibration JSON")
      ->required();
  stereo_pose->add_option("--view", sp_view, "Shared view id");
  stereo_pose->add_option("--output", sp_out, "Output rig JSON name");

  // rectify
  auto* rectify = app.add_subcommand(
      "rectify", "Rectifying transforms and warped image pair");
  std::string rect_rig, rect_left, rect_right;
  rectify->add_option("--rig", rect_rig, "Stereo rig JSON")->required();
  rectify->add_option("--left", rect_left, "Left image (PGM/PPM)")->required();
  rectify->add_option("--right", rect_right, "Right image (PGM/PPM)")
      ->required();

  // disparity
  auto* disparity = app.add_subcommand(
      "disparity", "Dense block-matching disparity of a rectified pair");
  std::string disp_left, disp_right;
  DisparityParams disp_params;
  disparity->add_option("--left", disp_left, "Left rectified image")
      ->required();
  disparity->add_option("--right", disp_right, "Right rectified image")
      ->required();
  disparity->add_option("--d-min", disp_params.d_min, "Minimum disparity");
  disparity->add_option("--d-max", disp_params.d_max, "Maximum disparity");
  disparity->add_option("--window-radius", disp_params.window_radius,
                        "Correlation window radius");
  disparity->add_option("--min-texture", disp_params.min_texture,
                        "Window variance threshold");
  disparity->add_option("--uniqueness", disp_params.uniqueness_ratio,
                        "Runner-up score ratio bound");

  // reconstruct
  auto* reconstruct = app.add_subcommand(
      "reconstruct", "Space points from a disparity map");
  std::string rc_grid, rc_mask, rc_rig, rc_out = "cloud.ply";
  reconstruct->add_option("--disparity", rc_grid, "Disparity grid")
      ->required();
  reconstruct->add_option("--mask", rc_mask, "Validity mask image")
      ->required();
  reconstruct->add_option("--rig", rc_rig, "Rectified rig JSON")->required();
  reconstruct->add_option("--output", rc_out, "Output cloud name");

  // mesh
  auto* mesh = app.add_subcommand("mesh", "Surface triangulation of a cloud");
  std::string mesh_cloud, mesh_out = "mesh.ply";
  int mesh_stride = 1;
  double mesh_edge_factor = 5.0;
  mesh->add_option("--cloud", mesh_cloud, "Point cloud PLY")->required();
  mesh->add_option("--output", mesh_out, "Output mesh (.ply or .obj)");
  mesh->add_option("--stride", mesh_stride, "Keep every n-th point")
      ->check(CLI::PositiveNumber);
  mesh->add_option("--edge-factor", mesh_edge_factor,
                   "Discontinuity threshold, multiples of the median edge");

  // align
  auto* align = app.add_subcommand(
      "align", "Similarity transform from landmark correspondences");
  std::string al_grid, al_mask, al_rig, al_landmarks,
      al_out = "transform.json";
  align->add_option("--disparity", al_grid, "Disparity grid")->required();
  align->add_option("--mask", al_mask, "Validity mask image")->required();
  align->add_option("--rig", al_rig, "Rectified rig JSON")->required();
  align->add_option("--landmarks", al_landmarks,
                    "Landmark CSV (name,u,v,x,y,z)")
      ->required();
  align->add_option("--output", al_out, "Output transform name");

  // measure
  auto* measure = app.add_subcommand(
      "measure", "Component dimensions against ground truth");
  std::string me_grid, me_mask, me_rig, me_selection, me_truth,
      me_out = "records.csv";
  std::string me_transform;
  measure->add_option("--disparity", me_grid, "Disparity grid")->required();
  measure->add_option("--mask", me_mask, "Validity mask image")->required();
  measure->add_option("--rig", me_rig, "Rectified rig JSON")->required();
  measure->add_option("--transform", me_transform,
                      "Similarity transform JSON (optional)");
  measure->add_option("--selection", me_selection, "Selection JSON")
      ->required();
  measure->add_option("--ground-truth", me_truth, "Ground-truth CSV")
      ->required();
  measure->add_option("--output", me_out, "Output records name");

  // report
  auto* report = app.add_subcommand(
      "report", "Error table and aggregate statistics from records");
  std::string rp_records;
  report->add_option("--records", rp_records,
                     "Records CSV (object,axis,actual,measured[,error])")
      ->required();

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Deterministic synthetic scene with ground truth");
  std::string sy_scene;
  synth->add_option("--scene", sy_scene, "Scene spec JSON")->required();

  // pipeline
  auto* pipeline = app.add_subcommand(
      "pipeline", "Chain the stages over a config file");
  std::string pl_config;
  pipeline->add_option("--config", pl_config, "Pipeline config JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  g.out_dir = out_dir_flag;
  if (seed_given) g.seed = seed_flag;

  std::string stage = "cli";
  try {
    if (app.got_subcommand(calibrate)) {
      stage = "calibrate";
      ensure_out_dir(g.out_dir);
      CalibrationOptions options;
      options.refine = !no_refine;
      options.fix_gamma = fix_gamma;
      run_calibrate(g, calib_obs, options, g.out_dir / calib_out);
    } else if (app.got_subcommand(stereo_pose)) {
      stage = "stereo-pose";
      ensure_out_dir(g.out_dir);
      run_stereo_pose(g, sp_left, sp_right, sp_view, g.out_dir / sp_out);
    } else if (app.got_subcommand(rectify)) {
      stage = "rectify";
      ensure_out_dir(g.out_dir);
      run_rectify(g, rect_rig, rect_left, rect_right, g.out_dir);
    } else if (app.got_subcommand(disparity)) {
      stage = "disparity";
      ensure_out_dir(g.out_dir);
      if (disp_params.d_min > disp_params.d_max) {
        throw ConfigError("disparity: d_min exceeds d_max");
      }
      run_disparity(g, disp_left, disp_right, disp_params, g.out_dir);
    } else if (app.got_subcommand(reconstruct)) {
      stage = "reconstruct";
      ensure_out_dir(g.out_dir);
      run_reconstruct(g, rc_grid, rc_mask, rc_rig, g.out_dir / rc_out);
    } else if (app.got_subcommand(mesh)) {
      stage = "mesh";
      ensure_out_dir(g.out_dir);
      run_mesh(g, mesh_cloud, g.out_dir / mesh_out, mesh_stride,
               mesh_edge_factor);
    } else if (app.got_subcommand(align)) {
      stage = "align";
      ensure_out_dir(g.out_dir);
      run_align(g, al_grid, al_mask, al_rig, al_landmarks, g.out_dir / al_out);
    } else if (app.got_subcommand(measure)) {
      stage = "measure";
      ensure_out_dir(g.out_dir);
      std::optional<fs::path> transform;
      if (!me_transform.empty()) transform = me_transform;
      run_measure(g, me_grid, me_mask, me_rig, transform, me_selection,
                  me_truth, g.out_dir / me_out);
    } else if (app.got_subcommand(report)) {
      stage = "report";
      ensure_out_dir(g.out_dir);
      run_report(g, rp_records, g.out_dir);
    } else if (app.got_subcommand(synth)) {
      stage = "synth";
      ensure_out_dir(g.out_dir);
      run_synth(g, sy_scene, g.out_dir);
    } else if (app.got_subcommand(pipeline)) {
      stage = "pipeline";
      run_pipeline(g, pl_config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << stage << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
