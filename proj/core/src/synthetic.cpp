#include "stereomet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stereomet {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::int64_t iz,
                     std::uint64_t seed) {
  std::uint64_t h = splitmix(seed ^ static_cast<std::uint64_t>(ix));
  h = splitmix(h ^ static_cast<std::uint64_t>(iy));
  h = splitmix(h ^ static_cast<std::uint64_t>(iz));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double single_octave(const Vec3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x());
  const double fy = std::floor(p.y());
  const double fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = fade(p.x() - fx);
  const double ty = fade(p.y() - fy);
  const double tz = fade(p.z() - fz);

  double accum = 0.0;
  for (int dz = 0; dz <= 1; ++dz) {
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) *
                         (dz ? tz : 1.0 - tz);
        accum += w * lattice_value(ix + dx, iy + dy, iz + dz, seed);
      }
    }
  }
  return accum;
}

// Deterministic standard normal (Box-Muller over the raw engine output, so
// the stream is identical across standard libraries).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : state_(splitmix(seed)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() {
    state_ = splitmix(state_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  Vec3 world = Vec3::Zero();
  int object = -1;  // index into the flattened object list
};

struct RenderObject {
  enum class Kind { Box, Board } kind = Kind::Box;
  std::string name;
  // Box bounds.
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  // Board rectangle.
  Placement placement;
  double half_width = 0.0;
  double half_height = 0.0;
};

constexpr double kRayEps = 1e-9;

// Ray parameterized so the parameter equals camera depth.
bool intersect_box(const Vec3& origin, const Vec3& dir, const RenderObject& b,
                   double& depth) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir(a)) < 1e-15) {
      if (origin(a) < b.lo(a) || origin(a) > b.hi(a)) return false;
      continue;
    }
    double t0 = (b.lo(a) - origin(a)) / dir(a);
    double t1 = (b.hi(a) - origin(a)) / dir(a);
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far <= kRayEps) return false;
  depth = t_near > kRayEps ? t_near : t_far;
  return true;
}

bool intersect_board(const Vec3& origin, const Vec3& dir,
                     const RenderObject& b, double& depth) {
  const Vec3 local_origin =
      b.placement.rotation.transpose() * (origin - b.placement.translation);
  const Vec3 local_dir = b.placement.rotation.transpose() * dir;
  if (std::abs(local_dir.z()) < 1e-15) return false;
  const double t = -local_origin.z() / local_dir.z();
  if (t <= kRayEps) return false;
  const Vec3 p = local_origin + t * local_dir;
  if (std::abs(p.x()) > b.half_width || std::abs(p.y()) > b.half_height) {
    return false;
  }
  depth = t;
  return true;
}

std::vector<RenderObject> flatten_objects(const SceneSpec& scene) {
  std::vector<RenderObject> objects;
  for (const auto& box : scene.boxes) {
    RenderObject o;
    o.kind = RenderObject::Kind::Box;
    o.name = box.name;
    o.lo = box.lo;
    o.hi = box.hi;
    objects.push_back(std::move(o));
  }
  for (const auto& board : scene.boards) {
    RenderObject o;
    o.kind = RenderObject::Kind::Board;
    o.name = board.name;
    o.placement = board.placement;
    o.half_width = 0.5 * (board.cols - 1) * board.square_size;
    o.half_height = 0.5 * (board.rows - 1) * board.square_size;
    objects.push_back(std::move(o));
  }
  return objects;
}

}  // namespace

double value_noise(const Vec3& position, std::uint64_t seed, double frequency,
                   int octaves) {
  double accum = 0.0;
  double amplitude = 1.0;
  double total = 0.0;
  double freq = frequency;
  for (int o = 0; o < std::max(1, octaves); ++o) {
    accum += amplitude * single_octave(position * freq,
                                       seed + static_cast<std::uint64_t>(o));
    total += amplitude;
    amplitude *= 0.5;
    freq *= 2.0;
  }
  return accum / total;
}

PlanarObservation project_board(const BoardObject& board,
                                const CameraIntrinsics& intrinsics,
                                const CameraPose& view_pose,
                                const std::string& view_id,
                                double pixel_noise_sigma, std::uint64_t seed) {
  PlanarObservation obs;
  obs.view_id = view_id;
  NormalSampler noise(seed);
  const double x_offset = 0.5 * (board.cols - 1) * board.square_size;
  const double y_offset = 0.5 * (board.rows - 1) * board.square_size;
  for (int row = 0; row < board.rows; ++row) {
    for (int col = 0; col < board.cols; ++col) {
      const double bx = col * board.square_size - x_offset;
      const double by = row * board.square_size - y_offset;
      obs.board_points.push_back({bx, by});
      PixelPoint pixel = project_point(intrinsics, view_pose, {bx, by, 0.0});
      if (pixel_noise_sigma > 0.0) {
        pixel.u += pixel_noise_sigma * noise.next();
        pixel.v += pixel_noise_sigma * noise.next();
      }
      obs.image_points.push_back(pixel);
    }
  }
  return obs;
}

PlanarObservation project_board(const SceneSpec& scene,
                                const CameraPose& view_pose,
                                const std::string& view_id,
                                double pixel_noise_sigma, std::uint64_t seed) {
  if (scene.boards.empty()) {
    throw Error("project_board: scene has no board object");
  }
  return project_board(scene.boards.front(), scene.camera, view_pose, view_id,
                       pixel_noise_sigma, seed);
}

RenderResult render_stereo_pair(const SceneSpec& scene) {
  scene.camera.validate();
  const int w = scene.image_width;
  const int h = scene.image_height;
  const double shared_focal = scene.shared_focal();
  const std::vector<RenderObject> objects = flatten_objects(scene);

  RenderResult out;
  out.left = RasterImage::zeros(w, h, 1);
  out.right = RasterImage::zeros(w, h, 1);
  out.gt_disparity.width = w;
  out.gt_disparity.height = h;
  out.gt_disparity.values.assign(static_cast<size_t>(w) * h, 0.0);
  out.gt_disparity.validity.assign(static_cast<size_t>(w) * h, 0);

  out.rig.left_transform = Mat3::Identity();
  out.rig.right_transform = Mat3::Identity();
  out.rig.new_intrinsics = scene.camera;
  out.rig.baseline = scene.baseline;
  out.rig.focal = shared_focal;

  const Mat3 cam_to_world = scene.left_pose.rotation.transpose();
  const Vec3 left_center = -(cam_to_world * scene.left_pose.translation);
  const Vec3 right_center =
      left_center + cam_to_world * Vec3(scene.baseline, 0.0, 0.0);

  std::vector<int> hit_object(static_cast<size_t>(w) * h, -1);

  auto trace = [&](const Vec3& center, int x, int y) -> Hit {
    const Vec3 cam_dir((x - scene.camera.u0) / scene.camera.alpha_u,
                       (y - scene.camera.v0) / scene.camera.alpha_v, 1.0);
    const Vec3 dir = cam_to_world * cam_dir;
    Hit hit;
    for (size_t i = 0; i < objects.size(); ++i) {
      double depth = 0.0;
      const bool ok = objects[i].kind == RenderObject::Kind::Box
                          ? intersect_box(center, dir, objects[i], depth)
                          : intersect_board(center, dir, objects[i], depth);
      if (ok && depth < hit.depth) {
        hit.depth = depth;
        hit.world = center + depth * dir;
        hit.object = static_cast<int>(i);
      }
    }
    return hit;
  };

  auto shade = [&](const Vec3& world) {
    return 0.15 + 0.7 * value_noise(world, scene.seed,
                                    scene.texture_frequency,
                                    scene.texture_octaves);
  };

  double d_lo = std::numeric_limits<double>::infinity();
  double d_hi = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const Hit left_hit = trace(left_center, x, y);
      if (left_hit.object >= 0) {
        out.left.at(x, y) = shade(left_hit.world);
        const double disparity = scene.baseline * shared_focal /
                                 left_hit.depth;
        out.gt_disparity.values[i] = disparity;
        out.gt_disparity.validity[i] = 1;
        d_lo = std::min(d_lo, disparity);
        d_hi = std::max(d_hi, disparity);
        hit_object[i] = left_hit.object;

        out.gt_cloud.points.push_back(
            {(x - scene.camera.u0) / scene.camera.alpha_u * left_hit.depth,
             (y - scene.camera.v0) / scene.camera.alpha_v * left_hit.depth,
             left_hit.depth});
        out.gt_cloud.source_pixels.push_back(
            {static_cast<double>(x), static_cast<double>(y)});
      }
      const Hit right_hit = trace(right_center, x, y);
      if (right_hit.object >= 0) {
        out.right.at(x, y) = shade(right_hit.world);
      }
    }
  }
  if (d_hi >= d_lo) {
    out.gt_disparity.d_min = static_cast<int>(std::floor(d_lo));
    out.gt_disparity.d_max = static_cast<int>(std::ceil(d_hi));
  }

  // Landmarks: a sparse pixel grid with known world positions.
  const int step = std::max(1, scene.landmark_grid_step);
  for (int y = step / 2; y < h; y += step) {
    for (int x = step / 2; x < w; x += step) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (!out.gt_disparity.validity[i]) continue;
      const double depth =
          scene.baseline * shared_focal / out.gt_disparity.values[i];
      const Vec3 cam_dir((x - scene.camera.u0) / scene.camera.alpha_u,
                         (y - scene.camera.v0) / scene.camera.alpha_v, 1.0);
      const Vec3 world = left_center + depth * (cam_to_world * cam_dir);
      out.landmarks.push_back({{static_cast<double>(x),
                                static_cast<double>(y)},
                               WorldPoint::from(world)});
    }
  }

  // Selection rectangle: footprint of the chosen objects in the left view.
  std::vector<bool> selected(objects.size(), scene.selection_objects.empty());
  for (const auto& name : scene.selection_objects) {
    for (size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].name == name) selected[i] = true;
    }
  }
  double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min;
  double v_min = u_min, v_max = -u_min;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int obj = hit_object[static_cast<size_t>(y) * w + x];
      if (obj < 0 || !selected[static_cast<size_t>(obj)]) continue;
      u_min = std::min(u_min, static_cast<double>(x));
      u_max = std::max(u_max, static_cast<double>(x));
      v_min = std::min(v_min, static_cast<double>(y));
      v_max = std::max(v_max, static_cast<double>(y));
    }
  }
  if (u_max >= u_min) {
    out.selection_region = PixelRegion{u_min, u_max, v_min, v_max};
  }
  return out;
}

}  // namespace stereomet
