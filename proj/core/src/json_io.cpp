#include "stereomet/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stereomet/version.hpp"

namespace stereomet {

namespace {

using Json = nlohmann::ordered_json;

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError(path.string(), "write failed");
}

Json matrix_to_json(const Mat3& m) {
  Json arr = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
  }
  return arr;
}

Mat3 matrix_from_json(const Json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != 9) {
    throw IoError(path, "expected 9 row-major matrix entries");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m(r, c) = arr[static_cast<size_t>(3 * r + c)].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vector_from_json(const Json& arr, const std::string& path) {
  if (!arr.is_array() || arr.size() != 3) {
    throw IoError(path, "expected 3 vector entries");
  }
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

void intrinsics_to_json(Json& doc, const CameraIntrinsics& k) {
  doc["alpha_u"] = k.alpha_u;
  doc["alpha_v"] = k.alpha_v;
  doc["gamma"] = k.gamma;
  doc["u0"] = k.u0;
  doc["v0"] = k.v0;
}

CameraIntrinsics intrinsics_from_json(const Json& doc,
                                      const std::string& path) {
  CameraIntrinsics k;
  try {
    k.alpha_u = doc.at("alpha_u").get<double>();
    k.alpha_v = doc.at("alpha_v").get<double>();
    k.gamma = doc.value("gamma", 0.0);
    k.u0 = doc.at("u0").get<double>();
    k.v0 = doc.at("v0").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("bad intrinsics: ") + e.what());
  }
  return k;
}

Json pose_to_json(const CameraPose& pose) {
  Json doc;
  doc["rotation"] = matrix_to_json(pose.rotation);
  doc["translation"] = vector_to_json(pose.translation);
  return doc;
}

CameraPose pose_from_json(const Json& doc, const std::string& path) {
  CameraPose pose;
  pose.rotation = matrix_from_json(doc.at("rotation"), path);
  pose.translation = vector_from_json(doc.at("translation"), path);
  return pose;
}

}  // namespace

void write_camera_json(const std::filesystem::path& path,
                       const CameraIntrinsics& intrinsics,
                       const CameraPose& pose) {
  Json doc;
  doc["generator"] = kGenerator;
  intrinsics_to_json(doc, intrinsics);
  doc["rotation"] = matrix_to_json(pose.rotation);
  doc["translation"] = vector_to_json(pose.translation);
  save_json(path, doc);
}

std::pair<CameraIntrinsics, CameraPose> read_camera_json(
    const std::filesystem::path& path) {
  const Json doc = load_json(path);
  return {intrinsics_from_json(doc, path.string()),
          pose_from_json(doc, path.string())};
}

void write_calibration_json(const std::filesystem::path& path,
                            const CalibrationResult& result) {
  Json doc;
  doc["generator"] = kGenerator;
  intrinsics_to_json(doc, result.intrinsics);
  doc["rms_reprojection_error"] = result.rms_reprojection_error;
  doc["converged"] = result.converged;
  doc["refinement_iterations"] = result.refinement_iterations;
  Json views = Json::object();
  for (const auto& [id, pose] : result.view_poses) {
    views[id] = pose_to_json(pose);
  }
  doc["views"] = views;
  save_json(path, doc);
}

CalibrationResult read_calibration_json(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  CalibrationResult result;
  result.intrinsics = intrinsics_from_json(doc, path.string());
  result.rms_reprojection_error = doc.value("rms_reprojection_error", 0.0);
  result.converged = doc.value("converged", true);
  result.refinement_iterations = doc.value("refinement_iterations", 0);
  if (doc.contains("views")) {
    for (const auto& [id, pose] : doc.at("views").items()) {
      result.view_poses[id] = pose_from_json(pose, path.string());
    }
  }
  return result;
}

void write_observations_json(const std::filesystem::path& path,
                             const std::vector<PlanarObservation>& views) {
  Json doc = Json::array();
  for (const auto& view : views) {
    Json entry;
    entry["view_id"] = view.view_id;
    Json board = Json::array();
    for (const auto& p : view.board_points) {
      board.push_back(Json::array({p.x(), p.y()}));
    }
    Json image = Json::array();
    for (const auto& p : view.image_points) {
      image.push_back(Json::array({p.u, p.v}));
    }
    entry["board_points"] = board;
    entry["image_points"] = image;
    doc.push_back(entry);
  }
  save_json(path, doc);
}

std::vector<PlanarObservation> read_observations_json(
    const std::filesystem::path& path) {
  const Json doc = load_json(path);
  if (!doc.is_array()) {
    throw IoError(path.string(), "expected a JSON list of views");
  }
  std::vector<PlanarObservation> views;
  for (const auto& entry : doc) {
    PlanarObservation view;
    view.view_id = entry.at("view_id").get<std::string>();
    for (const auto& p : entry.at("board_points")) {
      view.board_points.push_back({p.at(0).get<double>(),
                                   p.at(1).get<double>()});
    }
    for (const auto& p : entry.at("image_points")) {
      view.image_points.push_back({p.at(0).get<double>(),
                                   p.at(1).get<double>()});
    }
    views.push_back(std::move(view));
  }
  return views;
}

void write_stereo_rig_json(const std::filesystem::path& path,
                           const StereoRig& rig) {
  Json doc;
  doc["generator"] = kGenerator;
  Json left, right;
  intrinsics_to_json(left, rig.left_intrinsics);
  intrinsics_to_json(right, rig.right_intrinsics);
  doc["left"] = left;
  doc["right"] = right;
  doc["relative_rotation"] = matrix_to_json(rig.relative_rotation);
  doc["relative_translation"] = vector_to_json(rig.relative_translation);
  save_json(path, doc);
}

StereoRig read_stereo_rig_json(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  StereoRig rig;
  rig.left_intrinsics = intrinsics_from_json(doc.at("left"), path.string());
  rig.right_intrinsics = intrinsics_from_json(doc.at("right"), path.string());
  rig.relative_rotation =
      matrix_from_json(doc.at("relative_rotation"), path.string());
  rig.relative_translation =
      vector_from_json(doc.at("relative_translation"), path.string());
  return rig;
}

void write_rectified_rig_json(const std::filesystem::path& path,
                              const RectifiedRig& rig) {
  Json doc;
  doc["generator"] = kGenerator;
  doc["left_transform"] = matrix_to_json(rig.left_transform);
  doc["right_transform"] = matrix_to_json(rig.right_transform);
  intrinsics_to_json(doc, rig.new_intrinsics);
  doc["baseline"] = rig.baseline;
  doc["focal"] = rig.focal;
  save_json(path, doc);
}

RectifiedRig read_rectified_rig_json(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  RectifiedRig rig;
  rig.left_transform = matrix_from_json(doc.at("left_transform"),
                                        path.string());
  rig.right_transform =
      matrix_from_json(doc.at("right_transform"), path.string());
  rig.new_intrinsics = intrinsics_from_json(doc, path.string());
  rig.baseline = doc.at("baseline").get<double>();
  rig.focal = doc.at("focal").get<double>();
  return rig;
}

void write_transform_json(const std::filesystem::path& path,
                          const SimilarityTransform& transform) {
  Json doc;
  doc["generator"] = kGenerator;
  doc["scale"] = transform.scale;
  doc["rotation"] = matrix_to_json(transform.rotation);
  doc["translation"] = vector_to_json(transform.translation);
  save_json(path, doc);
}

SimilarityTransform read_transform_json(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  SimilarityTransform t;
  t.scale = doc.at("scale").get<double>();
  t.rotation = matrix_from_json(doc.at("rotation"), path.string());
  t.translation = vector_from_json(doc.at("translation"), path.string());
  return t;
}

void write_selection_json(const std::filesystem::path& path,
                          const std::map<std::string, Selection>& selections) {
  Json doc = Json::object();
  for (const auto& [name, sel] : selections) {
    Json entry = Json::object();
    if (!sel.indices.empty()) {
      entry["indices"] = sel.indices;
    }
    if (sel.region.has_value()) {
      Json region;
      region["u_min"] = sel.region->u_min;
      region["u_max"] = sel.region->u_max;
      region["v_min"] = sel.region->v_min;
      region["v_max"] = sel.region->v_max;
      entry["region"] = region;
    }
    doc[name] = entry;
  }
  save_json(path, doc);
}

std::map<std::string, Selection> read_selection_json(
    const std::filesystem::path& path) {
  const Json doc = load_json(path);
  if (!doc.is_object()) {
    throw IoError(path.string(), "expected an object-name map");
  }
  std::map<std::string, Selection> selections;
  for (const auto& [name, entry] : doc.items()) {
    Selection sel;
    if (entry.contains("indices")) {
      sel.indices = entry.at("indices").get<std::vector<int>>();
    }
    if (entry.contains("region")) {
      const Json& r = entry.at("region");
      sel.region = PixelRegion{
          r.at("u_min").get<double>(), r.at("u_max").get<double>(),
          r.at("v_min").get<double>(), r.at("v_max").get<double>()};
    }
    selections.emplace(name, std::move(sel));
  }
  return selections;
}

void write_scene_json(const std::filesystem::path& path,
                      const SceneSpec& scene) {
  Json doc;
  doc["generator"] = kGenerator;
  doc["image"] = Json{{"width", scene.image_width},
                      {"height", scene.image_height}};
  doc["seed"] = scene.seed;
  doc["texture"] = Json{{"frequency", scene.texture_frequency},
                        {"octaves", scene.texture_octaves}};
  Json camera;
  intrinsics_to_json(camera, scene.camera);
  doc["camera"] = camera;
  doc["baseline"] = scene.baseline;
  doc["focal"] = scene.focal;
  doc["left_pose"] = pose_to_json(scene.left_pose);

  Json objects = Json::array();
  for (const auto& box : scene.boxes) {
    Json b;
    b["type"] = "box";
    b["name"] = box.name;
    b["min"] = vector_to_json(box.lo);
    b["max"] = vector_to_json(box.hi);
    objects.push_back(b);
  }
  for (const auto& board : scene.boards) {
    Json b;
    b["type"] = "board";
    b["name"] = board.name;
    b["rows"] = board.rows;
    b["cols"] = board.cols;
    b["square_size"] = board.square_size;
    b["rotation"] = matrix_to_json(board.placement.rotation);
    b["translation"] = vector_to_json(board.placement.translation);
    objects.push_back(b);
  }
  doc["objects"] = objects;
  doc["landmark_grid_step"] = scene.landmark_grid_step;
  doc["selection_name"] = scene.selection_name;
  doc["selection_objects"] = scene.selection_objects;

  Json gt = Json::array();
  for (const auto& entry : scene.ground_truth) {
    gt.push_back(Json{{"object", entry.object_name},
                      {"L", entry.length},
                      {"W", entry.width},
                      {"H", entry.height}});
  }
  doc["ground_truth"] = gt;
  save_json(path, doc);
}

SceneSpec read_scene_json(const std::filesystem::path& path) {
  const Json doc = load_json(path);
  const std::string spath = path.string();
  SceneSpec scene;
  try {
    scene.image_width = doc.at("image").at("width").get<int>();
    scene.image_height = doc.at("image").at("height").get<int>();
    scene.seed = doc.value("seed", std::uint64_t{1});
    if (doc.contains("texture")) {
      scene.texture_frequency = doc.at("texture").value("frequency", 1.25);
      scene.texture_octaves = doc.at("texture").value("octaves", 3);
    }
    scene.camera = intrinsics_from_json(doc.at("camera"), spath);
    scene.baseline = doc.at("baseline").get<double>();
    scene.focal = doc.value("focal", 0.0);
    if (doc.contains("left_pose")) {
      scene.left_pose = pose_from_json(doc.at("left_pose"), spath);
    }
    for (const auto& entry : doc.value("objects", Json::array())) {
      const std::string type = entry.at("type").get<std::string>();
      if (type == "box") {
        BoxObject box;
        box.name = entry.value("name", std::string("box"));
        box.lo = vector_from_json(entry.at("min"), spath);
        box.hi = vector_from_json(entry.at("max"), spath);
        if ((box.hi - box.lo).minCoeff() < 0.0) {
          throw IoError(spath, "box '" + box.name + "' has negative extents");
        }
        scene.boxes.push_back(std::move(box));
      } else if (type == "board") {
        BoardObject board;
        board.name = entry.value("name", std::string("board"));
        board.rows = entry.at("rows").get<int>();
        board.cols = entry.at("cols").get<int>();
        board.square_size = entry.at("square_size").get<double>();
        if (board.rows < 2 || board.cols < 2 || board.square_size <= 0.0) {
          throw IoError(spath, "board '" + board.name +
                                   "' needs rows, cols >= 2 and a positive "
                                   "square size");
        }
        if (entry.contains("rotation")) {
          board.placement.rotation =
              matrix_from_json(entry.at("rotation"), spath);
        }
        if (entry.contains("translation")) {
          board.placement.translation =
              vector_from_json(entry.at("translation"), spath);
        }
        scene.boards.push_back(std::move(board));
      } else {
        throw IoError(spath, "unknown object type '" + type + "'");
      }
    }
    scene.landmark_grid_step = doc.value("landmark_grid_step", 40);
    scene.selection_name = doc.value("selection_name", std::string("scene"));
    scene.selection_objects =
        doc.value("selection_objects", std::vector<std::string>{});
    for (const auto& entry : doc.value("ground_truth", Json::array())) {
      GroundTruthEntry gt;
      gt.object_name = entry.at("object").get<std::string>();
      gt.length = entry.at("L").get<double>();
      gt.width = entry.at("W").get<double>();
      gt.height = entry.at("H").get<double>();
      scene.ground_truth.push_back(std::move(gt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(spath, std::string("bad scene: ") + e.what());
  }
  return scene;
}

namespace {

std::string fmt_csv(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_ground_truth_csv(const std::filesystem::path& path,
                            const std::vector<GroundTruthRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  out << "object,axis,actual\n";
  for (const auto& row : rows) {
    out << row.object_name << ',' << row.axis << ',' << fmt_csv(row.actual)
        << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<GroundTruthRow> read_ground_truth_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open ground-truth file");
  std::vector<GroundTruthRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("object,", 0) == 0) continue;
    std::stringstream ss(line);
    GroundTruthRow row;
    std::string field;
    if (!std::getline(ss, row.object_name, ',')) continue;
    try {
      if (!std::getline(ss, field, ',') || field.empty()) {
        throw std::invalid_argument(field);
      }
      row.axis = field[0];
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      row.actual = std::stod(field);
    } catch (const std::invalid_argument&) {
      throw IoError(path.string(), "malformed ground-truth line: " + line);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_alignment_landmarks_csv(
    const std::filesystem::path& path,
    const std::vector<AlignmentLandmark>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  out << "name,u,v,x,y,z\n";
  for (const auto& row : rows) {
    out << row.name << ',' << fmt_csv(row.pixel.u) << ',' << fmt_csv(row.pixel.v)
        << ',' << fmt_csv(row.reference.x) << ',' << fmt_csv(row.reference.y)
        << ',' << fmt_csv(row.reference.z) << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<AlignmentLandmark> read_alignment_landmarks_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open landmark file");
  std::vector<AlignmentLandmark> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("name,", 0) == 0) continue;
    std::stringstream ss(line);
    AlignmentLandmark row;
    std::string field;
    if (!std::getline(ss, row.name, ',')) continue;
    try {
      double values[5];
      for (double& value : values) {
        if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
        value = std::stod(field);
      }
      row.pixel = {values[0], values[1]};
      row.reference = {values[2], values[3], values[4]};
    } catch (const std::invalid_argument&) {
      throw IoError(path.string(), "malformed landmark line: " + line);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stereomet
