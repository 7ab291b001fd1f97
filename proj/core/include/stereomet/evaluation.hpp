#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stereomet/geometry.hpp"
#include "stereomet/reconstruction.hpp"

namespace stereomet {

/// One object dimension compared against its ground truth. Axis is the
/// reference-frame direction: L along x, W along y, H along z.
struct MeasurementRecord {
  std::string object_name;
  char axis = 'L';
  double actual = 0.0;
  double measured = 0.0;
  double percent_error = 0.0;
};

/// scale * rotation * p + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  WorldPoint apply(const WorldPoint& p) const {
    return WorldPoint::from(scale * (rotation * p.vec()) + translation);
  }
};

struct ErrorSummary {
  double mean_percent = 0.0;
  /// Population (not sample) standard deviation.
  double std_percent = 0.0;
  /// Per-object mean percent error, input order, for heatmap export.
  std::vector<std::pair<std::string, double>> per_object;
};

/// Least-squares similarity fit: minimizes
/// sum || target_i - (s * R * source_i + t) ||^2 over s > 0, rotation R,
/// translation t (closed form via the cross-covariance SVD).
/// Throws InsufficientPointsError (< 3 pairs), DimensionMismatchError and
/// DegenerateConfigurationError (collinear source).
SimilarityTransform align_similarity(std::span<const WorldPoint> source,
                                     std::span<const WorldPoint> target);

/// Axis-aligned extents (x, y, z) of a point selection.
struct Extents {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Either explicit point indices or a rectangle in source-pixel coordinates.
struct PixelRegion {
  double u_min = 0.0;
  double u_max = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;

  bool contains(const PixelPoint& p) const {
    return p.u >= u_min && p.u <= u_max && p.v >= v_min && p.v <= v_max;
  }
};

struct Selection {
  std::vector<int> indices;
  std::optional<PixelRegion> region;
};

/// Bounding-box extents of the selected points, in the cloud's frame.
/// Region selections need source pixels on the cloud.
/// Throws EmptySelectionError when nothing is selected.
Extents measure_dimension(const PointCloud& cloud, const Selection& selection);

/// |measured - actual| / actual * 100. Zero over zero is 0 by convention;
/// a nonzero measurement against a zero actual throws UndefinedPercentError.
double percent_error(double actual, double measured);

/// Arithmetic mean and population standard deviation over all records, plus
/// per-object means. Throws EmptyInputError.
ErrorSummary aggregate_errors(std::span<const MeasurementRecord> records);

/// CSV (object,axis,actual,measured,error_percent) plus a JSON summary with
/// mean, std and the per-object heatmap values. Deterministic input order.
void export_report(std::span<const MeasurementRecord> records,
                   const ErrorSummary& summary,
                   const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path);

/// Re-reads a report CSV (or a plain object,axis,actual,measured file, in
/// which case the error column is recomputed).
std::vector<MeasurementRecord> import_records_csv(
    const std::filesystem::path& path);

void write_records_csv(const std::filesystem::path& path,
                       std::span<const MeasurementRecord> records);

}  // namespace stereomet
