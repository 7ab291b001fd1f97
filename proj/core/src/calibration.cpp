#include "stereomet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stereomet {

namespace {

struct Normalization {
  std::vector<Vec2> points;
  Mat3 transform;
};

// Centroid shift and sqrt(2) mean-distance scaling.
Normalization normalize_points(std::span<const Vec2> pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());

  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());

  const double scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;

  Normalization out;
  out.transform << scale, 0.0, -scale * centroid.x(),
      0.0, scale, -scale * centroid.y(),
      0.0, 0.0, 1.0;
  out.points.reserve(pts.size());
  for (const auto& p : pts) out.points.push_back((p - centroid) * scale);
  return out;
}

bool points_collinear(std::span<const Vec2> pts) {
  if (pts.size() < 3) return true;
  // Largest triangle area over pairs against the first point.
  double max_area = 0.0;
  for (size_t i = 1; i + 1 < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const Vec2 a = pts[i] - pts[0];
      const Vec2 b = pts[j] - pts[0];
      max_area = std::max(max_area, std::abs(a.x() * b.y() - a.y() * b.x()));
    }
  }
  double span = 0.0;
  for (const auto& p : pts) span = std::max(span, (p - pts[0]).norm());
  return max_area <= 1e-12 * std::max(1.0, span * span);
}

Eigen::Matrix<double, 6, 1> conic_constraint(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 6, 1> v;
  v << h(0, i) * h(0, j),
      h(0, i) * h(1, j) + h(1, i) * h(0, j),
      h(1, i) * h(1, j),
      h(2, i) * h(0, j) + h(0, i) * h(2, j),
      h(2, i) * h(1, j) + h(1, i) * h(2, j),
      h(2, i) * h(2, j);
  return v;
}

CameraIntrinsics intrinsics_from_homographies(std::span<const Mat3> hs,
                                              bool fix_gamma) {
  const int rows = 2 * static_cast<int>(hs.size()) + (fix_gamma ? 1 : 0);
  Eigen::MatrixXd v(rows, 6);
  for (size_t k = 0; k < hs.size(); ++k) {
    v.row(2 * k) = conic_constraint(hs[k], 0, 1).transpose();
    v.row(2 * k + 1) =
        (conic_constraint(hs[k], 0, 0) - conic_constraint(hs[k], 1, 1))
            .transpose();
  }
  if (fix_gamma) {
    v.row(rows - 1) << 0.0, 1.0, 0.0, 0.0, 0.0, 0.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeFullV);
  Eigen::VectorXd b = svd.matrixV().col(5);
  if (b(0) < 0.0) b = -b;

  const double b11 = b(0), b12 = b(1), b22 = b(2);
  const double b13 = b(3), b23 = b(4), b33 = b(5);

  const double denom = b11 * b22 - b12 * b12;
  if (!(b11 > 0.0) || !(denom > 0.0)) {
    throw DegenerateConfigurationError(
        "calibrate: homographies do not constrain the intrinsics");
  }
  const double v0 = (b12 * b13 - b11 * b23) / denom;
  const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
  if (!(lambda / b11 > 0.0)) {
    throw DegenerateConfigurationError(
        "calibrate: conic solution is not positive definite");
  }

  CameraIntrinsics k;
  k.alpha_u = std::sqrt(lambda / b11);
  k.alpha_v = std::sqrt(lambda * b11 / denom);
  k.gamma = fix_gamma ? 0.0 : -b12 * k.alpha_u * k.alpha_u * k.alpha_v / lambda;
  k.v0 = v0;
  k.u0 = k.gamma * v0 / k.alpha_v - b13 * k.alpha_u * k.alpha_u / lambda;
  return k;
}

Mat3 rodrigues_to_matrix(const Vec3& r) {
  const double theta = r.norm();
  if (theta < 1e-14) return Mat3::Identity();
  const Vec3 axis = r / theta;
  const Mat3 k = skew_symmetric(axis);
  return Mat3::Identity() + std::sin(theta) * k +
         (1.0 - std::cos(theta)) * (k * k);
}

Vec3 matrix_to_rodrigues(const Mat3& m) {
  const double cos_theta = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < 1e-12) return Vec3::Zero();
  Vec3 axis(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double s = 2.0 * std::sin(theta);
  if (std::abs(s) < 1e-12) {
    // theta near pi: recover the axis from the symmetric part.
    Mat3 a = (m + Mat3::Identity()) * 0.5;
    Vec3 d(std::sqrt(std::max(0.0, a(0, 0))), std::sqrt(std::max(0.0, a(1, 1))),
           std::sqrt(std::max(0.0, a(2, 2))));
    int lead = 0;
    if (d.y() > d.x()) lead = 1;
    if (d.z() > d(lead)) lead = 2;
    if (d(lead) < 1e-12) return Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      if (i != lead && a(lead, i) < 0.0) d(i) = -d(i);
    }
    return d.normalized() * theta;
  }
  return axis * (theta / s);
}

struct RefinementProblem {
  std::span<const PlanarObservation> observations;
  std::vector<std::string> view_order;
  bool fix_gamma = false;
  size_t total_points = 0;

  int intrinsic_count() const { return fix_gamma ? 4 : 5; }
  int parameter_count() const {
    return intrinsic_count() + 6 * static_cast<int>(view_order.size());
  }

  Eigen::VectorXd pack(const CameraIntrinsics& k,
                       const std::map<std::string, CameraPose>& poses) const {
    Eigen::VectorXd p(parameter_count());
    int i = 0;
    p(i++) = k.alpha_u;
    p(i++) = k.alpha_v;
    if (!fix_gamma) p(i++) = k.gamma;
    p(i++) = k.u0;
    p(i++) = k.v0;
    for (const auto& id : view_order) {
      const CameraPose& pose = poses.at(id);
      const Vec3 r = matrix_to_rodrigues(pose.rotation);
      p.segment<3>(i) = r;
      p.segment<3>(i + 3) = pose.translation;
      i += 6;
    }
    return p;
  }

  void unpack(const Eigen::VectorXd& p, CameraIntrinsics& k,
              std::map<std::string, CameraPose>& poses) const {
    int i = 0;
    k.alpha_u = p(i++);
    k.alpha_v = p(i++);
    k.gamma = fix_gamma ? 0.0 : p(i++);
    k.u0 = p(i++);
    k.v0 = p(i++);
    for (const auto& id : view_order) {
      CameraPose pose;
      pose.rotation = rodrigues_to_matrix(p.segment<3>(i));
      pose.translation = p.segment<3>(i + 3);
      poses[id] = pose;
      i += 6;
    }
  }

  // Residual vector (2 entries per point) or empty on a non-physical
  // candidate (point behind camera).
  bool residuals(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    CameraIntrinsics k;
    std::map<std::string, CameraPose> poses;
    unpack(p, k, poses);
    r.resize(2 * static_cast<Eigen::Index>(total_points));
    Eigen::Index row = 0;
    for (const auto& obs : observations) {
      const CameraPose& pose = poses.at(obs.view_id);
      for (size_t j = 0; j < obs.board_points.size(); ++j) {
        const WorldPoint w{obs.board_points[j].x(), obs.board_points[j].y(),
                           0.0};
        const Vec3 cam = pose.rotation * w.vec() + pose.translation;
        if (!(cam.z() > 0.0)) return false;
        const Vec3 s = k.matrix() * cam;
        r(row++) = s.x() / s.z() - obs.image_points[j].u;
        r(row++) = s.y() / s.z() - obs.image_points[j].v;
      }
    }
    return true;
  }
};

// Levenberg-Marquardt with a numeric central-difference Jacobian. Small
// parameter counts make the numeric Jacobian cheap and keep this free of
// hand-derived derivative bugs.
void refine_parameters(const RefinementProblem& problem, CameraIntrinsics& k,
                       std::map<std::string, CameraPose>& poses,
                       const CalibrationOptions& options, bool& converged,
                       int& iterations) {
  Eigen::VectorXd p = problem.pack(k, poses);
  Eigen::VectorXd r;
  if (!problem.residuals(p, r)) {
    converged = false;
    iterations = 0;
    return;
  }
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  converged = false;
  iterations = 0;

  const int n = problem.parameter_count();
  Eigen::MatrixXd jac(r.size(), n);
  Eigen::VectorXd r_plus, r_minus;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (int c = 0; c < n; ++c) {
      const double step = std::max(1e-8, 1e-7 * std::abs(p(c)));
      Eigen::VectorXd probe = p;
      probe(c) = p(c) + step;
      const bool ok_plus = problem.residuals(probe, r_plus);
      probe(c) = p(c) - step;
      const bool ok_minus = problem.residuals(probe, r_minus);
      if (!ok_plus || !ok_minus) {
        jac.col(c).setZero();
        continue;
      }
      jac.col(c) = (r_plus - r_minus) / (2.0 * step);
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd candidate = p + delta;
      Eigen::VectorXd r_candidate;
      if (problem.residuals(candidate, r_candidate)) {
        const double candidate_cost = r_candidate.squaredNorm();
        if (candidate_cost < cost) {
          const double relative_drop = (cost - candidate_cost) /
                                       std::max(cost, 1e-300);
          p = candidate;
          r = r_candidate;
          cost = candidate_cost;
          lambda = std::max(lambda * 0.3, 1e-12);
          stepped = true;
          ++iterations;
          if (relative_drop < options.relative_cost_tolerance) {
            converged = true;
          }
          break;
        }
      }
      lambda *= 10.0;
    }
    if (converged) break;
    if (!stepped) {
      // No improving step at any damping: stationary point.
      converged = true;
      break;
    }
  }
  problem.unpack(p, k, poses);
}

}  // namespace

Mat3 estimate_homography(std::span<const Vec2> board_points,
                         std::span<const PixelPoint> image_points) {
  if (board_points.size() != image_points.size()) {
    throw DimensionMismatchError(
        "estimate_homography: point lists differ in length");
  }
  if (board_points.size() < 4) {
    throw DegenerateConfigurationError(
        "estimate_homography: needs at least 4 correspondences");
  }
  if (points_collinear(board_points)) {
    throw DegenerateConfigurationError(
        "estimate_homography: board points are collinear");
  }
  std::vector<Vec2> image_xy;
  image_xy.reserve(image_points.size());
  for (const auto& p : image_points) image_xy.push_back({p.u, p.v});
  if (points_collinear(image_xy)) {
    throw DegenerateConfigurationError(
        "estimate_homography: image points are collinear");
  }

  const Normalization bn = normalize_points(board_points);
  const Normalization in = normalize_points(image_xy);

  const auto n = static_cast<Eigen::Index>(board_points.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = bn.points[i].x(), y = bn.points[i].y();
    const double u = in.points[i].x(), v = in.points[i].y();
    a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-10 * sv(0)) {
    throw DegenerateConfigurationError(
        "estimate_homography: configuration is rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Mat3 out = in.transform.inverse() * hn * bn.transform;
  out /= out.norm();
  if (out(2, 2) < 0.0) out = -out;
  return out;
}

CameraPose estimate_view_pose(const Mat3& homography,
                              const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  if (std::abs(homography.determinant()) < 1e-12 * std::pow(homography.norm(), 3)) {
    throw SingularMatrixError("estimate_view_pose: singular homography");
  }
  const Mat3 a = intrinsics.inverse_matrix() * homography;
  Vec3 r1 = a.col(0);
  Vec3 r2 = a.col(1);
  Vec3 t = a.col(2);
  const double scale = 2.0 / (r1.norm() + r2.norm());
  r1 *= scale;
  r2 *= scale;
  t *= scale;
  if (t.z() < 0.0) {
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r1.cross(r2);

  CameraPose pose;
  pose.rotation = nearest_rotation(r);
  pose.translation = t;
  return pose;
}

CalibrationResult calibrate_intrinsics(
    std::span<const PlanarObservation> observations,
    const CalibrationOptions& options) {
  const size_t needed = options.fix_gamma ? 2 : 3;
  if (observations.size() < needed) {
    throw InsufficientViewsError(
        "calibrate: " + std::to_string(observations.size()) +
        " views given, " + std::to_string(needed) + " required");
  }

  std::vector<Mat3> homographies;
  homographies.reserve(observations.size());
  for (const auto& obs : observations) {
    homographies.push_back(
        estimate_homography(obs.board_points, obs.image_points));
  }

  CalibrationResult result;
  result.intrinsics = intrinsics_from_homographies(homographies,
                                                   options.fix_gamma);
  for (size_t i = 0; i < observations.size(); ++i) {
    result.view_poses[observations[i].view_id] =
        estimate_view_pose(homographies[i], result.intrinsics);
  }

  if (options.refine) {
    RefinementProblem problem;
    problem.observations = observations;
    problem.fix_gamma = options.fix_gamma;
    for (const auto& obs : observations) {
      problem.view_order.push_back(obs.view_id);
      problem.total_points += obs.board_points.size();
    }
    refine_parameters(problem, result.intrinsics, result.view_poses, options,
                      result.converged, result.refinement_iterations);
  }

  result.rms_reprojection_error =
      reprojection_rms(result.intrinsics, result.view_poses, observations);
  return result;
}

RelativePose stereo_relative_pose(const CameraPose& left,
                                  const CameraPose& right) {
  RelativePose rel;
  rel.rotation = right.rotation * left.rotation.transpose();
  rel.translation = right.translation - rel.rotation * left.translation;
  return rel;
}

Mat3 fundamental_matrix(const StereoRig& rig) {
  if (rig.relative_translation.norm() == 0.0) {
    throw ZeroBaselineError("fundamental_matrix: zero baseline");
  }
  Mat3 f = rig.right_intrinsics.inverse_matrix().transpose() *
           skew_symmetric(rig.relative_translation) * rig.relative_rotation *
           rig.left_intrinsics.inverse_matrix();
  f /= f.norm();
  return f;
}

double reprojection_rms(const CameraIntrinsics& intrinsics,
                        const std::map<std::string, CameraPose>& view_poses,
                        std::span<const PlanarObservation> observations) {
  double sum = 0.0;
  size_t count = 0;
  for (const auto& obs : observations) {
    const auto it = view_poses.find(obs.view_id);
    if (it == view_poses.end()) {
      throw Error("reprojection_rms: no pose for view " + obs.view_id);
    }
    for (size_t j = 0; j < obs.board_points.size(); ++j) {
      const WorldPoint w{obs.board_points[j].x(), obs.board_points[j].y(), 0.0};
      const PixelPoint proj = project_point(intrinsics, it->second, w);
      const double du = proj.u - obs.image_points[j].u;
      const double dv = proj.v - obs.image_points[j].v;
      sum += du * du + dv * dv;
      ++count;
    }
  }
  if (count == 0) return 0.0;
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace stereomet
