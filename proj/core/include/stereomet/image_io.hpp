#pragma once

#include <filesystem>

#include "stereomet/rectification.hpp"

namespace stereomet {

/// Binary portable graymap/pixmap (P5 for 1 channel, P6 for 3), 8-bit,
/// intensities mapped linearly between [0, 1] and [0, 255].
void write_image(const std::filesystem::path& path, const RasterImage& image);

RasterImage read_image(const std::filesystem::path& path);

/// Validity masks as a graymap: 255 valid, 0 invalid.
void write_mask(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& mask, int width, int height);

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path,
                                    int expected_width, int expected_height);

}  // namespace stereomet
