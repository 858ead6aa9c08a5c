#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlos/types.hpp"

namespace nlos {

// Scalar per-bin volume, C order [nx][ny][nz].
struct Volume3 {
  GridShape shape;
  std::vector<double> data;

  double &at(int i, int j, int k) { return data[shape.bin_index(i, j, k)]; }
  double at(int i, int j, int k) const { return data[shape.bin_index(i, j, k)]; }
};

// Image indexed [nx][ny].
struct Image2 {
  int nx = 0;
  int ny = 0;
  std::vector<double> data;

  double &at(int i, int j) { return data[std::size_t(i) * ny + j]; }
  double at(int i, int j) const { return data[std::size_t(i) * ny + j]; }
};

struct DepthMap {
  int nx = 0;
  int ny = 0;
  std::vector<double> values; // meters
  std::vector<std::uint8_t> valid;

  std::size_t index(int i, int j) const { return std::size_t(i) * ny + j; }
};

struct DepthMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t pixels = 0;      // jointly valid
  double valid_fraction = 0.0; // jointly valid / valid in truth
};

struct OrientedPoint {
  Point3 position;
  Vec3 normal;
  double intensity = 0.0;
};

// Albedo with the rho / |n| ambiguity folded in: rho * |n| when the cosine term is modelled.
double effective_albedo(double rho, const Vec3 &n, FalloffMode mode);

// Per-bin mean of the 8 vertex effective albedos.
Volume3 bin_albedo(const VoxelField &field, FalloffMode mode);
// As bin_albedo, with inactive bins set to zero.
Volume3 masked_bin_albedo(const VoxelField &field, const ActiveDomain &domain, FalloffMode mode);

Image2 max_intensity_projection(const Volume3 &vol);

std::vector<double> bin_center_z(const VoxelField &field);

// Column argmax depth; a column is valid when its max is positive and at least
// threshold_frac times the global max. Ties resolve to the smallest k.
DepthMap depth_from_argmax(const Volume3 &vol, std::span<const double> z_coords,
                           double threshold_frac);

// Bilinear resampling over valid pixels; a target pixel is valid when its nearest source
// pixel is.
DepthMap upsample_depth(const DepthMap &src, int nx, int ny);

// MAE / RMSE over pixels valid in both maps. Throws NoOverlap when there are none.
DepthMetrics depth_metrics(const DepthMap &pred, const DepthMap &truth, bool upsample = false);

// One point per active bin whose effective albedo reaches threshold_frac * max, with the
// normal flipped to face the relay wall.
std::vector<OrientedPoint> export_point_cloud(const VoxelField &field, const ActiveDomain &domain,
                                              FalloffMode mode, const Point3 &wall_centroid,
                                              double threshold_frac);

} // namespace nlos
