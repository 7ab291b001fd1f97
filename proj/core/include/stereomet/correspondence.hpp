#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stereomet/rectification.hpp"

namespace stereomet {

struct DisparityParams {
  /// Correlation window half-size; the window spans 2r+1 pixels per side.
  int window_radius = 4;
  int d_min = 0;
  int d_max = 64;
  /// Minimum window intensity variance for a pixel to be matchable.
  double min_texture = 1e-4;
  /// A match is kept only when the runner-up score (two or more disparity
  /// levels away from the winner) stays below ratio * best.
  double uniqueness_ratio = 0.95;
};

/// Dense horizontal offsets x_left - x_right between a rectified pair,
/// subpixel resolution, with a per-pixel validity flag.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> validity;
  int d_min = 0;
  int d_max = 0;

  double value_at(int x, int y) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  bool valid_at(int x, int y) const {
    return validity[static_cast<size_t>(y) * width + x] != 0;
  }
};

/// Scanline block matching with zero-normalized cross-correlation, smallest
/// disparity winning ties, 3-point parabolic subpixel refinement (skipped at
/// the range endpoints and at perfect-correlation peaks, where the integer
/// position is already exact), texture and uniqueness gating, and a
/// left-right consistency check within 1 px.
/// Throws DimensionMismatchError and InvalidRangeError.
DisparityMap compute_disparity(const RasterImage& left,
                               const RasterImage& right,
                               const DisparityParams& params = {});

/// One hand-picked correspondence, forwarded untouched to triangulation.
struct LandmarkPair {
  std::string name;
  double u_left = 0.0;
  double v_left = 0.0;
  double u_right = 0.0;
  double v_right = 0.0;
};

/// Reads hand-picked pixel pairs from a CSV with columns
/// name,u_l,v_l,u_r,v_r (header and '#' comment lines skipped).
std::vector<LandmarkPair> match_landmarks(const std::filesystem::path& path);

void write_landmarks(const std::filesystem::path& path,
                     const std::vector<LandmarkPair>& pairs);

}  // namespace stereomet
