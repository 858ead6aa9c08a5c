#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "nlos/evaluate.hpp"
#include "nlos/optimizer.hpp"

namespace nlos {

enum class ImageFormat { pgm, png };

// 16-bit grayscale, min-max normalized to [0, 65535]; a constant image maps to zeros.
// Pixel (i, j) of the [nx][ny] image lands at column i, row j.
void write_image(const Image2 &img, const std::filesystem::path &path, ImageFormat format);

// Invalid pixels take the smallest valid depth, so they map to black after normalization.
Image2 depth_to_image(const DepthMap &d);

// ASCII PLY with x y z nx ny nz intensity.
void write_ply(std::span<const OrientedPoint> cloud, const std::filesystem::path &path);

// Header step,loss,active_ratio,iter_seconds.
void write_csv(std::span<const TraceRecord> trace, const std::filesystem::path &path,
               bool include_timing = true);

} // namespace nlos
