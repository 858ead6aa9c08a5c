#pragma once

#include "nlos/types.hpp"

namespace nlos {

// Confocal scan on a regular nx-by-ny grid of cell centers in the plane z = z_plane,
// centered on the origin.
ScanGeometry make_planar_confocal_geometry(double wall_width, double wall_height, int nx, int ny,
                                           double z_plane);

// One fixed laser point and a regular nx-by-ny grid of scan points in z = z_plane.
ScanGeometry make_planar_single_laser_geometry(const Point3 &laser, double wall_width,
                                               double wall_height, int nx, int ny, double z_plane);

// Confocal scan on a cylinder whose axis is parallel to y. The wall spans
// +-sag_degrees of arc across its width and bends away from the hidden volume
// (towards -z); its chord has length wall_width.
ScanGeometry make_cylindrical_confocal_geometry(double wall_width, double wall_height, int nx,
                                                int ny, double sag_degrees);

// Grid dimensions of the scan points; inferred as square when grid_shape is unset.
std::array<int, 2> scan_grid_shape(const ScanGeometry &g);

// Scan indices kept by a per-axis stride, in index order.
std::vector<std::size_t> subsample_scan_indices(const ScanGeometry &g, int stride);

// Every stride-th scan point per grid axis. Paired geometries drop the matching laser
// points too; cartesian geometries keep all laser points.
ScanGeometry subsample_geometry(const ScanGeometry &g, int stride);

} // namespace nlos
