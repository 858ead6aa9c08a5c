#include "nlos/geometry.hpp"

#include <cmath>
#include <numbers>

namespace nlos {

namespace {

void check_wall(double w, double h, int nx, int ny) {
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h))
    throw InvalidArgument("wall dimensions must be positive");
  if (nx < 1 || ny < 1)
    throw InvalidArgument("wall grid needs at least one point per axis");
}

std::vector<Point3> grid_points(double w, double h, int nx, int ny, double z) {
  std::vector<Point3> pts;
  pts.reserve(std::size_t(nx) * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      pts.push_back({-0.5 * w + (i + 0.5) * w / nx, -0.5 * h + (j + 0.5) * h / ny, z});
  return pts;
}

} // namespace

ScanGeometry make_planar_confocal_geometry(double wall_width, double wall_height, int nx, int ny,
                                           double z_plane) {
  check_wall(wall_width, wall_height, nx, ny);
  ScanGeometry g;
  g.scan_points = grid_points(wall_width, wall_height, nx, ny, z_plane);
  g.laser_points = g.scan_points;
  g.confocal = true;
  g.pairing = Pairing::paired;
  g.grid_shape = std::array<int, 2>{nx, ny};
  return g;
}

ScanGeometry make_planar_single_laser_geometry(const Point3 &laser, double wall_width,
                                               double wall_height, int nx, int ny, double z_plane) {
  check_wall(wall_width, wall_height, nx, ny);
  ScanGeometry g;
  g.laser_points = {laser};
  g.scan_points = grid_points(wall_width, wall_height, nx, ny, z_plane);
  g.confocal = false;
  g.pairing = Pairing::cartesian;
  g.grid_shape = std::array<int, 2>{nx, ny};
  g.validate();
  return g;
}

ScanGeometry make_cylindrical_confocal_geometry(double wall_width, double wall_height, int nx,
                                                int ny, double sag_degrees) {
  check_wall(wall_width, wall_height, nx, ny);
  if (!(sag_degrees > 0.0) || !(sag_degrees < 90.0))
    throw InvalidArgument("sag angle must lie in (0, 90) degrees");
  const double half = sag_degrees * std::numbers::pi / 180.0;
  const double radius = 0.5 * wall_width / std::sin(half);
  ScanGeometry g;
  for (int i = 0; i < nx; ++i) {
    const double theta = -half + (i + 0.5) * 2.0 * half / nx;
    for (int j = 0; j < ny; ++j) {
      const double y = -0.5 * wall_height + (j + 0.5) * wall_height / ny;
      g.scan_points.push_back({radius * std::sin(theta), y, -radius * (1.0 - std::cos(theta))});
    }
  }
  g.laser_points = g.scan_points;
  g.confocal = true;
  g.pairing = Pairing::paired;
  g.grid_shape = std::array<int, 2>{nx, ny};
  return g;
}

std::array<int, 2> scan_grid_shape(const ScanGeometry &g) {
  if (g.grid_shape)
    return *g.grid_shape;
  const auto side = static_cast<int>(std::lround(std::sqrt(double(g.scan_points.size()))));
  if (std::size_t(side) * std::size_t(side) != g.scan_points.size())
    throw InvalidArgument("scan points do not form a square grid and no grid_shape is set");
  return {side, side};
}

std::vector<std::size_t> subsample_scan_indices(const ScanGeometry &g, int stride) {
  if (stride < 1)
    throw InvalidArgument("stride must be at least 1");
  const auto [gx, gy] = scan_grid_shape(g);
  if (stride > gx || stride > gy)
    throw InvalidArgument("stride larger than the scan grid");
  std::vector<std::size_t> kept;
  for (int i = 0; i < gx; i += stride)
    for (int j = 0; j < gy; j += stride)
      kept.push_back(std::size_t(i) * gy + j);
  return kept;
}

ScanGeometry subsample_geometry(const ScanGeometry &g, int stride) {
  const auto kept = subsample_scan_indices(g, stride);
  const auto [gx, gy] = scan_grid_shape(g);
  ScanGeometry out = g;
  out.scan_points.clear();
  for (auto idx : kept)
    out.scan_points.push_back(g.scan_points[idx]);
  if (g.pairing == Pairing::paired) {
    out.laser_points.clear();
    for (auto idx : kept)
      out.laser_points.push_back(g.laser_points[idx]);
  }
  out.grid_shape = std::array<int, 2>{(gx + stride - 1) / stride, (gy + stride - 1) / stride};
  return out;
}

} // namespace nlos
