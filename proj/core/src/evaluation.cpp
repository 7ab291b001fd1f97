#include "stereomet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stereomet/version.hpp"

namespace stereomet {

SimilarityTransform align_similarity(std::span<const WorldPoint> source,
                                     std::span<const WorldPoint> target) {
  if (source.size() != target.size()) {
    throw DimensionMismatchError(
        "align_similarity: point lists differ in length");
  }
  if (source.size() < 3) {
    throw InsufficientPointsError(
        "align_similarity: need at least 3 correspondences");
  }
  const double n = static_cast<double>(source.size());

  Vec3 source_mean = Vec3::Zero();
  Vec3 target_mean = Vec3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    source_mean += source[i].vec();
    target_mean += target[i].vec();
  }
  source_mean /= n;
  target_mean /= n;

  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double source_variance = 0.0;
  for (size_t i = 0; i < source.size(); ++i) {
    const Vec3 s = source[i].vec() - source_mean;
    const Vec3 t = target[i].vec() - target_mean;
    covariance += t * s.transpose();
    source_variance += s.squaredNorm();
  }
  covariance /= n;
  source_variance /= n;
  if (source_variance <= 0.0) {
    throw DegenerateConfigurationError(
        "align_similarity: source points coincide");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      covariance, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  // Rank < 2 leaves the rotation ambiguous about the point axis.
  if (sigma(1) <= 1e-12 * std::max(sigma(0), 1e-300)) {
    throw DegenerateConfigurationError(
        "align_similarity: points are collinear");
  }

  Eigen::Matrix3d sign_fix = Eigen::Matrix3d::Identity();
  const double det_uv =
      (svd.matrixU() * svd.matrixV().transpose()).determinant();
  if (det_uv < 0.0) sign_fix(2, 2) = -1.0;

  SimilarityTransform out;
  out.rotation = svd.matrixU() * sign_fix * svd.matrixV().transpose();
  out.scale = (sigma.asDiagonal() * sign_fix).trace() / source_variance;
  if (!(out.scale > 0.0)) {
    throw DegenerateConfigurationError(
        "align_similarity: non-positive scale solution");
  }
  out.translation = target_mean - out.scale * (out.rotation * source_mean);
  return out;
}

Extents measure_dimension(const PointCloud& cloud,
                          const Selection& selection) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  size_t picked = 0;

  auto take = [&](size_t i) {
    const Vec3 p = cloud.points[i].vec();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    ++picked;
  };

  if (!selection.indices.empty()) {
    for (const int idx : selection.indices) {
      if (idx < 0 || static_cast<size_t>(idx) >= cloud.points.size()) {
        throw Error("measure_dimension: point index out of range");
      }
      take(static_cast<size_t>(idx));
    }
  } else if (selection.region.has_value()) {
    if (!cloud.has_source_pixels()) {
      throw Error(
          "measure_dimension: region selection needs source pixels on the "
          "cloud");
    }
    for (size_t i = 0; i < cloud.points.size(); ++i) {
      if (selection.region->contains(cloud.source_pixels[i])) take(i);
    }
  }

  if (picked == 0) {
    throw EmptySelectionError("measure_dimension: selection is empty");
  }
  return {hi.x() - lo.x(), hi.y() - lo.y(), hi.z() - lo.z()};
}

double percent_error(double actual, double measured) {
  if (actual < 0.0 || measured < 0.0) {
    throw Error("percent_error: lengths must be non-negative");
  }
  if (actual == 0.0) {
    if (measured == 0.0) return 0.0;
    throw UndefinedPercentError(
        "percent_error: zero actual with nonzero measurement");
  }
  return std::abs(measured - actual) / actual * 100.0;
}

ErrorSummary aggregate_errors(std::span<const MeasurementRecord> records) {
  if (records.empty()) {
    throw EmptyInputError("aggregate_errors: no records");
  }
  ErrorSummary summary;
  const double n = static_cast<double>(records.size());
  for (const auto& r : records) summary.mean_percent += r.percent_error;
  summary.mean_percent /= n;

  double accum = 0.0;
  for (const auto& r : records) {
    const double d = r.percent_error - summary.mean_percent;
    accum += d * d;
  }
  summary.std_percent = std::sqrt(accum / n);

  // Per-object means, first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, int>> buckets;
  for (const auto& r : records) {
    auto [it, fresh] = buckets.try_emplace(r.object_name, 0.0, 0);
    if (fresh) order.push_back(r.object_name);
    it->second.first += r.percent_error;
    it->second.second += 1;
  }
  for (const auto& name : order) {
    const auto& [sum, count] = buckets.at(name);
    summary.per_object.emplace_back(name, sum / count);
  }
  return summary;
}

namespace {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

void write_records_csv(const std::filesystem::path& path,
                       std::span<const MeasurementRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  out << "object,axis,actual,measured,error_percent\n";
  for (const auto& r : records) {
    out << r.object_name << ',' << r.axis << ',' << format_double(r.actual)
        << ',' << format_double(r.measured) << ','
        << format_double(r.percent_error) << "\n";
  }
  if (!out) throw IoError(path.string(), "write failed");
}

void export_report(std::span<const MeasurementRecord> records,
                   const ErrorSummary& summary,
                   const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path) {
  if (records.empty()) {
    throw EmptyInputError("export_report: no records");
  }
  write_records_csv(csv_path, records);

  nlohmann::ordered_json doc;
  doc["generator"] = kGenerator;
  doc["statistic"] = "population";
  doc["count"] = records.size();
  doc["mean_percent"] = summary.mean_percent;
  doc["std_percent"] = summary.std_percent;
  nlohmann::ordered_json heatmap = nlohmann::ordered_json::object();
  for (const auto& [name, value] : summary.per_object) heatmap[name] = value;
  doc["per_object_mean_percent"] = heatmap;

  std::ofstream out(json_path);
  if (!out) throw IoError(json_path.string(), "cannot open for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError(json_path.string(), "write failed");
}

std::vector<MeasurementRecord> import_records_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open records file");
  std::vector<MeasurementRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("object,", 0) == 0) continue;  // header
    std::stringstream ss(line);
    MeasurementRecord r;
    std::string field;
    if (!std::getline(ss, r.object_name, ',')) continue;
    try {
      if (!std::getline(ss, field, ',') || field.empty()) {
        throw std::invalid_argument(field);
      }
      r.axis = field[0];
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      r.actual = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      r.measured = std::stod(field);
      if (std::getline(ss, field, ',') && !field.empty()) {
        r.percent_error = std::stod(field);
      } else {
        r.percent_error = percent_error(r.actual, r.measured);
      }
    } catch (const std::invalid_argument&) {
      throw IoError(path.string(), "malformed record line: " + line);
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace stereomet
