#include "stereomet/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stereomet/version.hpp"

namespace stereomet {

namespace {

std::uint8_t quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in, const std::string& path) {
  std::string token;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (token.empty()) throw IoError(path, "truncated header");
  return token;
}

}  // namespace

void write_image(const std::filesystem::path& path, const RasterImage& image) {
  image.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << (image.channels == 1 ? "P5" : "P6") << "\n";
  out << "# generator: " << kGenerator << "\n";
  out << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> row(
      static_cast<size_t>(image.width) * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        row[static_cast<size_t>(x) * image.channels + c] =
            quantize(image.at(x, y, c));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError(path.string(), "write failed");
}

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open image");
  const std::string spath = path.string();

  const std::string magic = next_token(in, spath);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError(spath, "unsupported image format '" + magic + "'");
  }
  const int width = std::stoi(next_token(in, spath));
  const int height = std::stoi(next_token(in, spath));
  const int maxval = std::stoi(next_token(in, spath));
  if (width < 1 || height < 1) throw IoError(spath, "bad dimensions");
  if (maxval != 255) throw IoError(spath, "only 8-bit images are supported");
  // Exactly one whitespace byte separates the header from the raster.

  RasterImage image = RasterImage::zeros(width, height, channels);
  std::vector<std::uint8_t> raw(static_cast<size_t>(width) * height *
                                channels);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError(spath, "truncated raster data");
  }
  for (size_t i = 0; i < raw.size(); ++i) {
    image.samples[i] = raw[i] / 255.0;
  }
  return image;
}

void write_mask(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& mask, int width, int height) {
  RasterImage img = RasterImage::zeros(width, height, 1);
  if (mask.size() != img.samples.size()) {
    throw Error("write_mask: mask size does not match dimensions");
  }
  for (size_t i = 0; i < mask.size(); ++i) {
    img.samples[i] = mask[i] ? 1.0 : 0.0;
  }
  write_image(path, img);
}

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path,
                                    int expected_width, int expected_height) {
  const RasterImage img = read_image(path);
  if (img.width != expected_width || img.height != expected_height ||
      img.channels != 1) {
    throw IoError(path.string(), "mask dimensions do not match");
  }
  std::vector<std::uint8_t> mask(img.samples.size());
  for (size_t i = 0; i < mask.size(); ++i) {
    mask[i] = img.samples[i] > 0.5 ? 1 : 0;
  }
  return mask;
}

}  // namespace stereomet
