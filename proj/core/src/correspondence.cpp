#include "stereomet/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stereomet/version.hpp"

namespace stereomet {

namespace {

constexpr double kNoScore = -2.0;  // below any reachable correlation

std::vector<double> to_gray(const RasterImage& img) {
  std::vector<double> gray(static_cast<size_t>(img.width) * img.height);
  if (img.channels == 1) {
    gray = img.samples;
  } else {
    for (size_t i = 0; i < gray.size(); ++i) {
      gray[i] = (img.samples[3 * i] + img.samples[3 * i + 1] +
                 img.samples[3 * i + 2]) /
                3.0;
    }
  }
  return gray;
}

// Exclusive prefix-sum table: S(x, y) = sum over [0, x) x [0, y).
class IntegralImage {
 public:
  IntegralImage(int width, int height)
      : width_(width + 1), table_(static_cast<size_t>(width + 1) * (height + 1),
                                  0.0) {}

  void build(const std::vector<double>& values, int width, int height) {
    for (int y = 0; y < height; ++y) {
      double row = 0.0;
      const double* src = values.data() + static_cast<size_t>(y) * width;
      const double* above = table_.data() + static_cast<size_t>(y) * width_;
      double* out = table_.data() + static_cast<size_t>(y + 1) * width_;
      out[0] = 0.0;
      for (int x = 0; x < width; ++x) {
        row += src[x];
        out[x + 1] = above[x + 1] + row;
      }
    }
  }

  // Inclusive box [x0, x1] x [y0, y1].
  double box(int x0, int y0, int x1, int y1) const {
    const auto* t = table_.data();
    return t[static_cast<size_t>(y1 + 1) * width_ + (x1 + 1)] -
           t[static_cast<size_t>(y0) * width_ + (x1 + 1)] -
           t[static_cast<size_t>(y1 + 1) * width_ + x0] +
           t[static_cast<size_t>(y0) * width_ + x0];
  }

 private:
  int width_;
  std::vector<double> table_;
};

}  // namespace

DisparityMap compute_disparity(const RasterImage& left,
                               const RasterImage& right,
                               const DisparityParams& params) {
  left.validate();
  right.validate();
  if (left.width != right.width || left.height != right.height) {
    throw DimensionMismatchError("compute_disparity: image sizes differ");
  }
  if (params.d_min > params.d_max) {
    throw InvalidRangeError("compute_disparity: d_min exceeds d_max");
  }
  if (params.window_radius < 1) {
    throw InvalidRangeError("compute_disparity: window radius must be >= 1");
  }

  const int w = left.width;
  const int h = left.height;
  const int r = params.window_radius;
  const int n_levels = params.d_max - params.d_min + 1;
  const double window_count = static_cast<double>((2 * r + 1) * (2 * r + 1));

  DisparityMap map;
  map.width = w;
  map.height = h;
  map.d_min = params.d_min;
  map.d_max = params.d_max;
  map.values.assign(static_cast<size_t>(w) * h, 0.0);
  map.validity.assign(static_cast<size_t>(w) * h, 0);
  if (w < 2 * r + 1 || h < 2 * r + 1) return map;

  const std::vector<double> lgray = to_gray(left);
  const std::vector<double> rgray = to_gray(right);

  std::vector<double> squared(lgray.size());
  IntegralImage left_sum(w, h), left_sq(w, h);
  left_sum.build(lgray, w, h);
  for (size_t i = 0; i < lgray.size(); ++i) squared[i] = lgray[i] * lgray[i];
  left_sq.build(squared, w, h);

  IntegralImage right_sum(w, h), right_sq(w, h);
  right_sum.build(rgray, w, h);
  for (size_t i = 0; i < rgray.size(); ++i) squared[i] = rgray[i] * rgray[i];
  right_sq.build(squared, w, h);

  const size_t grid = static_cast<size_t>(w) * h;
  std::vector<double> best_left(grid, kNoScore);
  std::vector<int> best_d(grid, std::numeric_limits<int>::min());
  std::vector<double> best_right(grid, kNoScore);
  std::vector<int> best_d_right(grid, std::numeric_limits<int>::min());

  std::vector<double> product(grid);
  IntegralImage cross(w, h);

  // ZNCC of the two windows at (x, y) and (x - d, y), from the box sums.
  auto score_at = [&](const IntegralImage& cross_sum, int x, int y,
                      int d) -> double {
    const int xr = x - d;
    const double sl = left_sum.box(x - r, y - r, x + r, y + r);
    const double sll = left_sq.box(x - r, y - r, x + r, y + r);
    const double sr = right_sum.box(xr - r, y - r, xr + r, y + r);
    const double srr = right_sq.box(xr - r, y - r, xr + r, y + r);
    const double slr = cross_sum.box(x - r, y - r, x + r, y + r);
    const double var_l = sll - sl * sl / window_count;
    const double var_r = srr - sr * sr / window_count;
    if (var_l <= 0.0 || var_r <= 1e-15) return kNoScore;
    const double cov = slr - sl * sr / window_count;
    return cov / std::sqrt(var_l * var_r);
  };

  auto for_each_candidate = [&](auto&& fn) {
    for (int d = params.d_min; d <= params.d_max; ++d) {
      std::fill(product.begin(), product.end(), 0.0);
      const int x_begin = std::max(0, d);
      const int x_end = std::min(w, w + d);
      for (int y = 0; y < h; ++y) {
        const double* lrow = lgray.data() + static_cast<size_t>(y) * w;
        const double* rrow = rgray.data() + static_cast<size_t>(y) * w;
        double* prow = product.data() + static_cast<size_t>(y) * w;
        for (int x = x_begin; x < x_end; ++x) prow[x] = lrow[x] * rrow[x - d];
      }
      cross.build(product, w, h);

      const int lo = std::max(r, r + d);
      const int hi = std::min(w - 1 - r, w - 1 - r + d);
      for (int y = r; y < h - r; ++y) {
        for (int x = lo; x <= hi; ++x) {
          const double score = score_at(cross, x, y, d);
          if (score == kNoScore) continue;
          fn(x, y, d, score);
        }
      }
    }
  };

  // Pass 1: integer winners for both reference frames (ascending d with a
  // strict improvement test makes ties resolve to the smallest disparity).
  for_each_candidate([&](int x, int y, int d, double score) {
    const size_t i = static_cast<size_t>(y) * w + x;
    if (score > best_left[i]) {
      best_left[i] = score;
      best_d[i] = d;
    }
    const size_t j = static_cast<size_t>(y) * w + (x - d);
    if (score > best_right[j]) {
      best_right[j] = score;
      best_d_right[j] = d;
    }
  });

  // Pass 2: neighbours of each winner for subpixel interpolation, and the
  // runner-up outside the winner's immediate neighbourhood for uniqueness.
  std::vector<double> prev_score(grid, kNoScore);
  std::vector<double> next_score(grid, kNoScore);
  std::vector<double> runner_up(grid, kNoScore);
  for_each_candidate([&](int x, int y, int d, double score) {
    const size_t i = static_cast<size_t>(y) * w + x;
    if (best_d[i] == std::numeric_limits<int>::min()) return;
    const int offset = d - best_d[i];
    if (offset == -1) {
      prev_score[i] = score;
    } else if (offset == 1) {
      next_score[i] = score;
    } else if (offset != 0 && score > runner_up[i]) {
      runner_up[i] = score;
    }
  });

  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (best_d[i] == std::numeric_limits<int>::min()) continue;

      const double var_window =
          (left_sq.box(x - r, y - r, x + r, y + r) -
           std::pow(left_sum.box(x - r, y - r, x + r, y + r), 2) /
               window_count) /
          window_count;
      if (var_window < params.min_texture) continue;

      const double best = best_left[i];
      if (best <= 0.0) continue;
      if (runner_up[i] != kNoScore &&
          runner_up[i] > params.uniqueness_ratio * best) {
        continue;
      }

      const int d = best_d[i];
      const int xr = x - d;
      if (xr < 0 || xr >= w) continue;
      const size_t j = static_cast<size_t>(y) * w + xr;
      if (best_d_right[j] == std::numeric_limits<int>::min() ||
          std::abs(best_d_right[j] - d) > 1) {
        continue;
      }

      double disparity = d;
      if (d > params.d_min && d < params.d_max && best < 1.0 - 1e-9 &&
          prev_score[i] != kNoScore && next_score[i] != kNoScore) {
        const double denom = prev_score[i] - 2.0 * best + next_score[i];
        if (denom < -1e-12) {
          double delta = 0.5 * (prev_score[i] - next_score[i]) / denom;
          delta = std::clamp(delta, -0.5, 0.5);
          disparity += delta;
        }
      }
      map.values[i] = disparity;
      map.validity[i] = 1;
    }
  }
  // Only cover [d_min, d_max] even after subpixel adjustment.
  for (size_t i = 0; i < grid; ++i) {
    if (map.validity[i]) {
      map.values[i] = std::clamp(map.values[i],
                                 static_cast<double>(params.d_min),
                                 static_cast<double>(params.d_max));
    }
  }
  return map;
}

std::vector<LandmarkPair> match_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open landmark file");
  std::vector<LandmarkPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("name,", 0) == 0) continue;  // header
    std::stringstream ss(line);
    LandmarkPair p;
    std::string field;
    if (!std::getline(ss, p.name, ',')) continue;
    try {
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      p.u_left = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      p.v_left = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      p.u_right = std::stod(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument(field);
      p.v_right = std::stod(field);
    } catch (const std::exception&) {
      throw IoError(path.string(), "malformed landmark line: " + line);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_landmarks(const std::filesystem::path& path,
                     const std::vector<LandmarkPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "# generator: " << kGenerator << "\n";
  out << "name,u_l,v_l,u_r,v_r\n";
  char buf[256];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n",
                  p.name.c_str(), p.u_left, p.v_left, p.u_right, p.v_right);
    out << buf;
  }
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace stereomet
