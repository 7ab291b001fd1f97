#include "stereomet/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace stereomet {

WorldPoint triangulate_rectified(double x_left, double y_left, double x_right,
                                 const RectifiedRig& rig) {
  const double disparity = x_left - x_right;
  if (!(disparity > 0.0)) {
    throw NonPositiveDisparityError(
        "triangulate_rectified: disparity must be positive");
  }
  const CameraIntrinsics& k = rig.new_intrinsics;
  const double bf = rig.baseline * rig.focal;
  WorldPoint p;
  p.x = bf * (x_left - k.u0) / (k.alpha_u * disparity);
  p.y = bf * (y_left - k.v0) / (k.alpha_v * disparity);
  p.z = bf / disparity;
  return p;
}

PointCloud cloud_from_disparity(const DisparityMap& disparity,
                                const RectifiedRig& rig) {
  PointCloud cloud;
  for (int y = 0; y < disparity.height; ++y) {
    for (int x = 0; x < disparity.width; ++x) {
      if (!disparity.valid_at(x, y)) continue;
      const double d = disparity.value_at(x, y);
      if (!(d > 0.0)) continue;
      cloud.points.push_back(triangulate_rectified(x, y, x - d, rig));
      cloud.source_pixels.push_back(
          {static_cast<double>(x), static_cast<double>(y)});
    }
  }
  return cloud;
}

namespace {

// ---------------------------------------------------------------------------
// Incremental Delaunay triangulation (Bowyer-Watson) with walking point
// location. Coordinates are pre-scaled to [0,1] so the predicates use a
// fixed tolerance; exact cocircular quads are resolved afterwards by a
// canonical flip toward the lexicographically smallest diagonal.
// ---------------------------------------------------------------------------

struct Tri {
  std::array<int, 3> v;    // vertex ids, counter-clockwise
  std::array<int, 3> nbr;  // nbr[i] shares edge (v[(i+1)%3], v[(i+2)%3])
  bool alive = true;
};

constexpr double kPredicateEps = 1e-11;

class Delaunay {
 public:
  explicit Delaunay(const std::vector<Vec2>& points) : pts_(points) {
    const int n = static_cast<int>(pts_.size());
    // Super-triangle well outside [0,1]^2.
    pts_.push_back({-10.0, -10.0});
    pts_.push_back({21.0, -10.0});
    pts_.push_back({0.5, 21.0});
    tris_.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});
    last_alive_ = 0;
    for (int i = 0; i < n; ++i) insert(i);
  }

  // Triangles not touching the super-triangle, each rotated so the smallest
  // vertex id leads.
  std::vector<std::array<int, 3>> triangles() const {
    const int n = static_cast<int>(pts_.size()) - 3;
    std::vector<std::array<int, 3>> out;
    for (const Tri& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
      std::array<int, 3> tri = t.v;
      int lead = 0;
      if (tri[1] < tri[lead]) lead = 1;
      if (tri[2] < tri[lead]) lead = 2;
      out.push_back({tri[lead], tri[(lead + 1) % 3], tri[(lead + 2) % 3]});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Lawson pass: flips any strictly non-Delaunay edge, and flips cocircular
  // quads whose opposite diagonal has a smaller sorted index pair. Repeats
  // until stable so the result is canonical regardless of insertion effects.
  void canonicalize() {
    const int n = static_cast<int>(pts_.size()) - 3;
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 64) {
      changed = false;
      for (size_t ti = 0; ti < tris_.size(); ++ti) {
        if (!tris_[ti].alive) continue;
        for (int e = 0; e < 3; ++e) {
          const int tj = tris_[ti].nbr[e];
          if (tj < 0 || !tris_[static_cast<size_t>(tj)].alive) continue;
          const int a = tris_[ti].v[(e + 1) % 3];
          const int b = tris_[ti].v[(e + 2) % 3];
          const int c = tris_[ti].v[e];
          const int d = opposite(tj, a, b);
          if (d < 0) continue;
          if (a >= n || b >= n || c >= n || d >= n) continue;
          const double side = incircle(c, a, d, b);
          bool flip = side > kPredicateEps;
          if (!flip && std::abs(side) <= kPredicateEps) {
            flip = std::minmax(c, d) < std::minmax(a, b) && convex_quad(a, c, b, d);
          }
          if (flip && flip_edge(static_cast<int>(ti), e)) {
            changed = true;
            break;
          }
        }
      }
    }
  }

  bool empty_result() const {
    const int n = static_cast<int>(pts_.size()) - 3;
    for (const Tri& t : tris_) {
      if (t.alive && t.v[0] < n && t.v[1] < n && t.v[2] < n) return false;
    }
    return true;
  }

 private:
  static double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) -
           (b.y() - a.y()) * (c.x() - a.x());
  }

  // > 0 when p_d lies strictly inside the circumcircle of ccw (p_a,p_b,p_c).
  double incircle(int ia, int ib, int ic, int id) const {
    const Vec2& a = pts_[static_cast<size_t>(ia)];
    const Vec2& b = pts_[static_cast<size_t>(ib)];
    const Vec2& c = pts_[static_cast<size_t>(ic)];
    const Vec2& d = pts_[static_cast<size_t>(id)];
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    double det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
                 ad * (bdx * cdy - bdy * cdx);
    if (orient(a, b, c) < 0.0) det = -det;
    return det;
  }

  bool convex_quad(int a, int c, int b, int d) const {
    // Quad a-c-b-d in order; convex when consecutive turns agree.
    const int q[4] = {a, c, b, d};
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
      const double o =
          orient(pts_[static_cast<size_t>(q[i])],
                 pts_[static_cast<size_t>(q[(i + 1) % 4])],
                 pts_[static_cast<size_t>(q[(i + 2) % 4])]);
      if (std::abs(o) <= kPredicateEps * 1e-2) return false;
      const int s = o > 0.0 ? 1 : -1;
      if (sign == 0) sign = s;
      if (s != sign) return false;
    }
    return true;
  }

  int opposite(int tj, int a, int b) const {
    const Tri& t = tris_[static_cast<size_t>(tj)];
    for (int i = 0; i < 3; ++i) {
      if (t.v[i] != a && t.v[i] != b) return t.v[i];
    }
    return -1;
  }

  int edge_index(int ti, int a, int b) const {
    const Tri& t = tris_[static_cast<size_t>(ti)];
    for (int i = 0; i < 3; ++i) {
      if (t.v[(i + 1) % 3] != a && t.v[(i + 1) % 3] != b) continue;
      if (t.v[(i + 2) % 3] != a && t.v[(i + 2) % 3] != b) continue;
      if (t.v[i] == a || t.v[i] == b) continue;
      return i;
    }
    return -1;
  }

  void set_neighbor(int ti, int a, int b, int target) {
    if (ti < 0) return;
    const int e = edge_index(ti, a, b);
    if (e >= 0) tris_[static_cast<size_t>(ti)].nbr[e] = target;
  }

  // Flip the edge opposite corner e of triangle ti with its neighbor.
  bool flip_edge(int ti, int e) {
    Tri& t1 = tris_[static_cast<size_t>(ti)];
    const int tj = t1.nbr[e];
    if (tj < 0) return false;
    Tri& t2 = tris_[static_cast<size_t>(tj)];
    const int c = t1.v[e];
    const int a = t1.v[(e + 1) % 3];
    const int b = t1.v[(e + 2) % 3];
    const int d = opposite(tj, a, b);
    if (d < 0) return false;
    // New triangles (c, a, d) and (c, d, b) require the quad to be convex.
    if (orient(pts_[static_cast<size_t>(c)], pts_[static_cast<size_t>(a)],
               pts_[static_cast<size_t>(d)]) <= 0.0 ||
        orient(pts_[static_cast<size_t>(c)], pts_[static_cast<size_t>(d)],
               pts_[static_cast<size_t>(b)]) <= 0.0) {
      return false;
    }
    const int n_ca = t1.nbr[(e + 2) % 3];  // across (c, a)
    const int n_bc = t1.nbr[(e + 1) % 3];  // across (b, c)
    const int ej = edge_index(tj, a, b);
    if (ej < 0) return false;
    const int n_ad = tris_[static_cast<size_t>(tj)].nbr[(ej + 2) % 3];
    const int n_db = tris_[static_cast<size_t>(tj)].nbr[(ej + 1) % 3];

    t1.v = {c, a, d};
    t1.nbr = {n_ad, tj, n_ca};
    t2.v = {c, d, b};
    t2.nbr = {n_db, n_bc, ti};

    set_neighbor(n_ad, a, d, ti);
    set_neighbor(n_ca, c, a, ti);
    set_neighbor(n_db, d, b, tj);
    set_neighbor(n_bc, b, c, tj);
    return true;
  }

  int locate(const Vec2& p) const {
    int current = last_alive_;
    if (current < 0 || !tris_[static_cast<size_t>(current)].alive) {
      current = -1;
      for (size_t i = 0; i < tris_.size(); ++i) {
        if (tris_[i].alive) {
          current = static_cast<int>(i);
          break;
        }
      }
    }
    const int max_steps = static_cast<int>(tris_.size()) * 4 + 16;
    for (int step = 0; step < max_steps && current >= 0; ++step) {
      const Tri& t = tris_[static_cast<size_t>(current)];
      int next = -1;
      for (int e = 0; e < 3; ++e) {
        const Vec2& a = pts_[static_cast<size_t>(t.v[(e + 1) % 3])];
        const Vec2& b = pts_[static_cast<size_t>(t.v[(e + 2) % 3])];
        if (orient(a, b, p) < -kPredicateEps * 1e-2) {
          next = t.nbr[e];
          break;
        }
      }
      if (next < 0) return current;
      current = next;
    }
    // Fallback: linear scan by containment.
    for (size_t i = 0; i < tris_.size(); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive) continue;
      bool inside = true;
      for (int e = 0; e < 3 && inside; ++e) {
        const Vec2& a = pts_[static_cast<size_t>(t.v[(e + 1) % 3])];
        const Vec2& b = pts_[static_cast<size_t>(t.v[(e + 2) % 3])];
        inside = orient(a, b, p) >= -kPredicateEps;
      }
      if (inside) return static_cast<int>(i);
    }
    return last_alive_;
  }

  void insert(int index) {
    const Vec2& p = pts_[static_cast<size_t>(index)];
    const int seed = locate(p);
    if (seed < 0) return;

    // Grow the cavity of triangles whose circumcircle strictly contains p.
    std::vector<int> cavity;
    std::deque<int> queue{seed};
    std::set<int> seen{seed};
    while (!queue.empty()) {
      const int ti = queue.front();
      queue.pop_front();
      const Tri& t = tris_[static_cast<size_t>(ti)];
      if (!t.alive) continue;
      if (incircle(t.v[0], t.v[1], t.v[2], index) <= kPredicateEps &&
          ti != seed) {
        continue;
      }
      cavity.push_back(ti);
      for (int e = 0; e < 3; ++e) {
        const int nb = t.nbr[e];
        if (nb >= 0 && seen.insert(nb).second) queue.push_back(nb);
      }
    }

    // Boundary edges of the cavity, with the surviving outer neighbor.
    struct BoundaryEdge {
      int a, b, outer;
    };
    std::vector<BoundaryEdge> boundary;
    std::set<int> cavity_set(cavity.begin(), cavity.end());
    for (const int ti : cavity) {
      const Tri& t = tris_[static_cast<size_t>(ti)];
      for (int e = 0; e < 3; ++e) {
        const int nb = t.nbr[e];
        if (nb >= 0 && cavity_set.count(nb)) continue;
        boundary.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nb});
      }
    }
    for (const int ti : cavity) tris_[static_cast<size_t>(ti)].alive = false;

    // Fan of new triangles around p; link them through an edge lookup.
    std::map<std::pair<int, int>, int> open_edges;
    for (const BoundaryEdge& edge : boundary) {
      Tri fresh;
      fresh.v = {index, edge.a, edge.b};
      if (orient(p, pts_[static_cast<size_t>(edge.a)],
                 pts_[static_cast<size_t>(edge.b)]) < 0.0) {
        fresh.v = {index, edge.b, edge.a};
      }
      fresh.nbr = {edge.outer, -1, -1};
      const int id = static_cast<int>(tris_.size());
      tris_.push_back(fresh);
      set_neighbor(edge.outer, fresh.v[1], fresh.v[2], id);

      for (int e = 1; e <= 2; ++e) {
        const int a = tris_[static_cast<size_t>(id)].v[(e + 1) % 3];
        const int b = tris_[static_cast<size_t>(id)].v[(e + 2) % 3];
        const auto key = std::minmax(a, b);
        const auto it = open_edges.find(key);
        if (it == open_edges.end()) {
          open_edges.emplace(key, id);
        } else {
          const int other = it->second;
          tris_[static_cast<size_t>(id)].nbr[e] = other;
          set_neighbor(other, a, b, id);
        }
      }
      last_alive_ = id;
    }
  }

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  int last_alive_ = -1;
};

std::vector<Vec2> plane_coordinates(const PointCloud& cloud) {
  std::vector<Vec2> coords;
  coords.reserve(cloud.points.size());
  if (cloud.has_source_pixels()) {
    for (const auto& p : cloud.source_pixels) coords.push_back({p.u, p.v});
    return coords;
  }
  // Project onto the dominant plane through the centroid.
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : cloud.points) centroid += p.vec();
  centroid /= static_cast<double>(cloud.points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Vec3 d = p.vec() - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Vec3 axis_u = eig.eigenvectors().col(2);
  const Vec3 axis_v = eig.eigenvectors().col(1);
  for (const auto& p : cloud.points) {
    const Vec3 d = p.vec() - centroid;
    coords.push_back({axis_u.dot(d), axis_v.dot(d)});
  }
  return coords;
}

double triangle_area_3d(const WorldPoint& a, const WorldPoint& b,
                        const WorldPoint& c) {
  const Vec3 ab = b.vec() - a.vec();
  const Vec3 ac = c.vec() - a.vec();
  return 0.5 * ab.cross(ac).norm();
}

}  // namespace

SurfaceMesh mesh_from_cloud(const PointCloud& cloud,
                            const MeshOptions& options) {
  const size_t n = cloud.points.size();
  if (n < 3) {
    throw InsufficientPointsError(
        "mesh_from_cloud: need at least 3 points");
  }

  std::vector<Vec2> raw = plane_coordinates(cloud);

  // Normalize into [0,1]^2 with a single isotropic scale so the predicate
  // tolerance is meaningful.
  Vec2 lo = raw[0], hi = raw[0];
  for (const auto& p : raw) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max((hi - lo).maxCoeff(), 0.0);
  if (extent <= 0.0) {
    throw CollinearPointsError("mesh_from_cloud: all points coincide");
  }
  std::vector<Vec2> coords(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) coords[i] = (raw[i] - lo) / extent;

  // Exact duplicates would break the incremental triangulation; only the
  // first instance of a plane coordinate takes part.
  std::vector<Vec2> unique_coords;
  std::vector<int> original_index;
  {
    std::map<std::pair<double, double>, int> first_seen;
    unique_coords.reserve(coords.size());
    original_index.reserve(coords.size());
    for (size_t i = 0; i < coords.size(); ++i) {
      const auto key = std::make_pair(coords[i].x(), coords[i].y());
      if (first_seen.emplace(key, static_cast<int>(i)).second) {
        unique_coords.push_back(coords[i]);
        original_index.push_back(static_cast<int>(i));
      }
    }
  }
  if (unique_coords.size() < 3) {
    throw InsufficientPointsError(
        "mesh_from_cloud: fewer than 3 distinct plane coordinates");
  }

  // Collinearity: maximum distance from the best-fit line.
  {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : unique_coords) mean += p;
    mean /= static_cast<double>(unique_coords.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : unique_coords) {
      const Vec2 d = p - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Vec2 normal = eig.eigenvectors().col(0);
    double max_dist = 0.0;
    for (const auto& p : unique_coords) {
      max_dist = std::max(max_dist, std::abs(normal.dot(p - mean)));
    }
    if (max_dist < 1e-9) {
      throw CollinearPointsError("mesh_from_cloud: points are collinear");
    }
  }

  Delaunay delaunay(unique_coords);
  delaunay.canonicalize();
  if (delaunay.empty_result()) {
    throw CollinearPointsError(
        "mesh_from_cloud: no triangulation (degenerate points)");
  }

  SurfaceMesh mesh;
  mesh.vertices = cloud.points;
  std::vector<std::array<int, 3>> tris = delaunay.triangles();
  for (auto& t : tris) {
    t = {original_index[static_cast<size_t>(t[0])],
         original_index[static_cast<size_t>(t[1])],
         original_index[static_cast<size_t>(t[2])]};
  }

  // Median 3D edge length over the triangulation.
  std::vector<double> edge_lengths;
  edge_lengths.reserve(tris.size() * 3);
  for (const auto& t : tris) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<size_t>(e)];
      const int b = t[static_cast<size_t>((e + 1) % 3)];
      if (a < b) {
        edge_lengths.push_back(
            (cloud.points[static_cast<size_t>(a)].vec() -
             cloud.points[static_cast<size_t>(b)].vec())
                .norm());
      }
    }
  }
  double threshold = std::numeric_limits<double>::infinity();
  if (!edge_lengths.empty()) {
    const size_t mid = edge_lengths.size() / 2;
    std::nth_element(edge_lengths.begin(), edge_lengths.begin() + mid,
                     edge_lengths.end());
    threshold = options.edge_factor * edge_lengths[mid];
  }

  for (const auto& t : tris) {
    const WorldPoint& a = cloud.points[static_cast<size_t>(t[0])];
    const WorldPoint& b = cloud.points[static_cast<size_t>(t[1])];
    const WorldPoint& c = cloud.points[static_cast<size_t>(t[2])];
    const double ab = (a.vec() - b.vec()).norm();
    const double bc = (b.vec() - c.vec()).norm();
    const double ca = (c.vec() - a.vec()).norm();
    if (ab > threshold || bc > threshold || ca > threshold) continue;
    if (triangle_area_3d(a, b, c) < 1e-12) continue;
    mesh.triangles.push_back(t);
  }
  return mesh;
}

}  // namespace stereomet
