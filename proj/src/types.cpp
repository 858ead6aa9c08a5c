#include "nlos/types.hpp"

#include <algorithm>
#include <numeric>

namespace nlos {

std::string to_string(FalloffMode m) {
  switch (m) {
  case FalloffMode::lambertian:
    return "lambertian";
  case FalloffMode::retroreflective:
    return "retroreflective";
  case FalloffMode::none:
    return "none";
  }
  return "lambertian";
}

std::string to_string(Pairing p) { return p == Pairing::paired ? "paired" : "cartesian"; }

FalloffMode falloff_mode_from_string(const std::string &s) {
  if (s == "lambertian")
    return FalloffMode::lambertian;
  if (s == "retroreflective")
    return FalloffMode::retroreflective;
  if (s == "none")
    return FalloffMode::none;
  throw InvalidArgument("unknown falloff mode '" + s + "'");
}

Pairing pairing_from_string(const std::string &s) {
  if (s == "paired")
    return Pairing::paired;
  if (s == "cartesian")
    return Pairing::cartesian;
  throw InvalidArgument("unknown pairing '" + s + "'");
}

Point3 ScanGeometry::wall_centroid() const {
  Vec3 sum;
  for (const auto &p : laser_points)
    sum += p;
  for (const auto &p : scan_points)
    sum += p;
  const auto n = laser_points.size() + scan_points.size();
  return n == 0 ? sum : sum * (1.0 / double(n));
}

void ScanGeometry::validate() const {
  if (laser_points.empty() || scan_points.empty())
    throw InvalidArgument("scan geometry needs at least one laser and one scan point");
  for (const auto &p : laser_points)
    if (!is_finite(p))
      throw InvalidArgument("non-finite laser point");
  for (const auto &p : scan_points)
    if (!is_finite(p))
      throw InvalidArgument("non-finite scan point");
  if (pairing == Pairing::paired && laser_points.size() != scan_points.size())
    throw InvalidArgument("paired geometry needs as many laser points as scan points");
  if (confocal) {
    if (pairing != Pairing::paired)
      throw InvalidArgument("confocal geometry must use paired measurements");
    for (std::size_t i = 0; i < laser_points.size(); ++i)
      if (!(laser_points[i] == scan_points[i]))
        throw InvalidArgument("confocal geometry has laser point != scan point at index " +
                              std::to_string(i));
  }
  if (grid_shape) {
    const auto [gx, gy] = *grid_shape;
    if (gx < 1 || gy < 1 || std::size_t(gx) * std::size_t(gy) != scan_points.size())
      throw InvalidArgument("grid_shape does not match the number of scan points");
  }
}

TransientVolume::TransientVolume(std::size_t pair_count, TimeBinning b)
    : data(pair_count * std::size_t(std::max(b.bins, 0)), 0.0), pairs(pair_count), binning(b) {}

void TransientVolume::validate() const {
  if (!(binning.bin_length > 0.0) || !std::isfinite(binning.bin_length))
    throw InvalidArgument("bin_length must be positive");
  if (!std::isfinite(binning.path_offset))
    throw InvalidArgument("path_offset must be finite");
  if (binning.bins < 1)
    throw InvalidArgument("transient needs at least one time bin");
  if (data.size() != pairs * std::size_t(binning.bins))
    throw InvalidArgument("transient data size does not match its shape");
  for (double v : data)
    if (!std::isfinite(v))
      throw InvalidArgument("non-finite transient value");
}

void BoundingBox::validate() const {
  if (!is_finite(origin) || !is_finite(extent))
    throw InvalidArgument("bounding box must be finite");
  if (!(extent.x > 0 && extent.y > 0 && extent.z > 0))
    throw InvalidArgument("bounding box must enclose a positive volume");
}

VoxelField::VoxelField(BoundingBox b, GridShape s, double rho0, Vec3 n0)
    : box(b), shape(s), rho(s.vertex_count(), rho0), normal(s.vertex_count(), n0) {}

Point3 VoxelField::vertex_position(int i, int j, int k) const {
  const Vec3 d = bin_size();
  return {box.origin.x + i * d.x, box.origin.y + j * d.y, box.origin.z + k * d.z};
}

Point3 VoxelField::bin_center(std::size_t bin) const {
  const auto [i, j, k] = shape.bin_coords(bin);
  const Vec3 d = bin_size();
  return {box.origin.x + (i + 0.5) * d.x, box.origin.y + (j + 0.5) * d.y,
          box.origin.z + (k + 0.5) * d.z};
}

std::array<std::size_t, 8> VoxelField::bin_vertices(std::size_t bin) const {
  const auto [i, j, k] = shape.bin_coords(bin);
  std::array<std::size_t, 8> ids{};
  for (int c = 0; c < 8; ++c)
    ids[c] = shape.vertex_index(i + ((c >> 2) & 1), j + ((c >> 1) & 1), k + (c & 1));
  return ids;
}

void VoxelField::validate() const {
  box.validate();
  if (shape.nx < 1 || shape.ny < 1 || shape.nz < 1)
    throw InvalidArgument("grid resolution must be positive");
  if (rho.size() != shape.vertex_count() || normal.size() != shape.vertex_count())
    throw InvalidArgument("field arrays do not match the grid resolution");
  for (std::size_t v = 0; v < rho.size(); ++v) {
    if (!std::isfinite(rho[v]) || rho[v] < 0.0)
      throw InvalidArgument("albedo must be finite and non-negative");
    if (!is_finite(normal[v]))
      throw InvalidArgument("normal must be finite");
  }
}

ActiveDomain::ActiveDomain(GridShape shape, bool active)
    : shape_(shape), mask_(shape.bin_count(), active ? 1 : 0),
      active_count_(active ? shape.bin_count() : 0) {}

ActiveDomain ActiveDomain::from_mask(GridShape shape, std::vector<std::uint8_t> mask) {
  if (mask.size() != shape.bin_count())
    throw InvalidArgument("domain mask size does not match grid");
  ActiveDomain d;
  d.shape_ = shape;
  for (auto &m : mask)
    m = m ? 1 : 0;
  d.active_count_ = std::size_t(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  d.mask_ = std::move(mask);
  return d;
}

void ActiveDomain::deactivate(std::size_t bin) {
  if (mask_[bin]) {
    mask_[bin] = 0;
    --active_count_;
  }
}

std::vector<std::size_t> ActiveDomain::active_bins() const {
  std::vector<std::size_t> bins;
  bins.reserve(active_count_);
  for (std::size_t b = 0; b < mask_.size(); ++b)
    if (mask_[b])
      bins.push_back(b);
  return bins;
}

std::vector<std::uint8_t> ActiveDomain::live_vertices() const {
  std::vector<std::uint8_t> live(shape_.vertex_count(), 0);
  for (std::size_t b = 0; b < mask_.size(); ++b) {
    if (!mask_[b])
      continue;
    const auto [i, j, k] = shape_.bin_coords(b);
    for (int c = 0; c < 8; ++c)
      live[shape_.vertex_index(i + ((c >> 2) & 1), j + ((c >> 1) & 1), k + (c & 1))] = 1;
  }
  return live;
}

} // namespace nlos
