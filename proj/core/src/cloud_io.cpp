#include "stereomet/cloud_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stereomet/image_io.hpp"
#include "stereomet/version.hpp"

namespace stereomet {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int to_byte(double v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_cloud_ply(const std::filesystem::path& path,
                     const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  const bool rgb = cloud.has_colors();
  const bool pix = cloud.has_source_pixels();
  out << "ply\nformat ascii 1.0\n";
  out << "comment generator: " << kGenerator << "\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (rgb) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (pix) {
    out << "property double u\nproperty double v\n";
  }
  out << "end_header\n";
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const WorldPoint& p = cloud.points[i];
    out << fmt(p.x) << ' ' << fmt(p.y) << ' ' << fmt(p.z);
    if (rgb) {
      out << ' ' << to_byte(cloud.colors[i][0]) << ' '
          << to_byte(cloud.colors[i][1]) << ' ' << to_byte(cloud.colors[i][2]);
    }
    if (pix) {
      out << ' ' << fmt(cloud.source_pixels[i].u) << ' '
          << fmt(cloud.source_pixels[i].v);
    }
    out << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

PointCloud read_cloud_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open cloud file");
  const std::string spath = path.string();

  std::string line;
  if (!std::getline(in, line) || line != "ply") {
    throw IoError(spath, "not a PLY file");
  }
  size_t vertex_count = 0;
  std::vector<std::string> properties;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "comment") continue;
    if (word == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw IoError(spath, "only ascii PLY is supported");
    } else if (word == "element") {
      std::string name;
      ss >> name >> vertex_count;
      in_vertex_element = name == "vertex";
      if (!in_vertex_element && name != "face") {
        throw IoError(spath, "unsupported element '" + name + "'");
      }
      if (name == "face") in_vertex_element = false;
    } else if (word == "property" && in_vertex_element) {
      std::string type, name;
      ss >> type >> name;
      properties.push_back(name);
    }
  }

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  const bool rgb = std::find(properties.begin(), properties.end(), "red") !=
                   properties.end();
  const bool pix = std::find(properties.begin(), properties.end(), "u") !=
                   properties.end();
  for (size_t i = 0; i < vertex_count; ++i) {
    if (!std::getline(in, line)) throw IoError(spath, "truncated vertex list");
    std::stringstream ss(line);
    std::vector<double> values;
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (values.size() != properties.size()) {
      throw IoError(spath, "vertex row does not match header");
    }
    WorldPoint p;
    std::array<double, 3> color{0, 0, 0};
    PixelPoint pixel;
    for (size_t j = 0; j < properties.size(); ++j) {
      const std::string& name = properties[j];
      if (name == "x") p.x = values[j];
      else if (name == "y") p.y = values[j];
      else if (name == "z") p.z = values[j];
      else if (name == "red") color[0] = values[j] / 255.0;
      else if (name == "green") color[1] = values[j] / 255.0;
      else if (name == "blue") color[2] = values[j] / 255.0;
      else if (name == "u") pixel.u = values[j];
      else if (name == "v") pixel.v = values[j];
    }
    cloud.points.push_back(p);
    if (rgb) cloud.colors.push_back(color);
    if (pix) cloud.source_pixels.push_back(pixel);
  }
  return cloud;
}

void write_mesh_ply(const std::filesystem::path& path,
                    const SurfaceMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "ply\nformat ascii 1.0\n";
  out << "comment generator: " << kGenerator << "\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (const auto& v : mesh.vertices) {
    out << fmt(v.x) << ' ' << fmt(v.y) << ' ' << fmt(v.z) << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

void write_mesh_obj(const std::filesystem::path& path,
                    const SurfaceMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  for (const auto& v : mesh.vertices) {
    out << "v " << fmt(v.x) << ' ' << fmt(v.y) << ' ' << fmt(v.z) << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

void write_mesh(const std::filesystem::path& path, const SurfaceMesh& mesh) {
  if (path.extension() == ".obj") {
    write_mesh_obj(path, mesh);
  } else {
    write_mesh_ply(path, mesh);
  }
}

void write_disparity(const std::filesystem::path& grid_path,
                     const std::filesystem::path& mask_path,
                     const DisparityMap& map) {
  std::ofstream out(grid_path);
  if (!out) throw IoError(grid_path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  out << "# width: " << map.width << "\n";
  out << "# height: " << map.height << "\n";
  out << "# d_min: " << map.d_min << "\n";
  out << "# d_max: " << map.d_max << "\n";
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (x) out << ' ';
      out << fmt(map.valid_at(x, y) ? map.value_at(x, y) : 0.0);
    }
    out << '\n';
  }
  if (!out) throw IoError(grid_path.string(), "write failed");
  write_mask(mask_path, map.validity, map.width, map.height);
}

DisparityMap read_disparity(const std::filesystem::path& grid_path,
                            const std::filesystem::path& mask_path) {
  std::ifstream in(grid_path);
  if (!in) throw IoError(grid_path.string(), "cannot open disparity grid");
  const std::string spath = grid_path.string();

  DisparityMap map;
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string key;
      ss >> key;
      if (key == "width:") ss >> map.width;
      else if (key == "height:") ss >> map.height;
      else if (key == "d_min:") ss >> map.d_min;
      else if (key == "d_max:") ss >> map.d_max;
      continue;
    }
    std::stringstream ss(line);
    double v = 0.0;
    while (ss >> v) values.push_back(v);
  }
  if (map.width < 1 || map.height < 1) {
    throw IoError(spath, "missing dimensions in header");
  }
  if (values.size() != static_cast<size_t>(map.width) * map.height) {
    throw IoError(spath, "value count does not match dimensions");
  }
  map.values = std::move(values);
  map.validity = read_mask(mask_path, map.width, map.height);
  return map;
}

}  // namespace stereomet
