#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlos/evaluate.hpp"
#include "nlos/types.hpp"

namespace nlos {

struct Surfel {
  Point3 position;
  double albedo = 1.0;
  Vec3 normal{0.0, 0.0, -1.0}; // unit length
  double area = 0.0;           // m^2
};

// Axis-aligned square-ish patch in the plane z = center.z, facing -z.
struct PlanePatchParams {
  Point3 center{0.0, 0.0, 0.5};
  double width = 0.2;
  double height = 0.2;
  int count_x = 20;
  int count_y = 20;
  double albedo = 1.0;
};

// Spherical cap around the -z pole (the side facing a wall at z = 0).
struct SphereCapParams {
  Point3 center{0.0, 0.0, 0.6};
  double radius = 0.1;
  double cap_angle_deg = 60.0; // polar half-angle of the cap
  int rings = 16;
  int segments = 32;
  double albedo = 1.0;
};

// Two side-by-side patches at different depths; the near one at -x.
struct TwoPlanesParams {
  double depth_near = 0.4;
  double depth_far = 0.7;
  double width = 0.15;
  double height = 0.15;
  double separation = 0.25; // distance between patch centers along x
  int count_x = 15;
  int count_y = 15;
  double albedo = 1.0;
};

// Binary pattern of square cells in the plane z = center.z. Rows run along -y
// (row 0 on top), columns along +x; '#' or 'X' marks a filled cell.
struct LetterGridParams {
  Point3 center{0.0, 0.0, 0.5};
  double cell_size = 0.04;
  std::vector<std::string> pattern{"###", "#..", "###", "#..", "###"};
  int samples_per_cell = 4;
  double albedo = 1.0;
};

using SceneSpec = std::variant<PlanePatchParams, SphereCapParams, TwoPlanesParams, LetterGridParams>;

std::vector<Surfel> make_scene(const SceneSpec &spec);

struct NoiseModel {
  double photon_scale = 1.0;
  std::uint64_t seed = 0;
};

struct RenderOptions {
  // Physical one-sided emission. Disable only for cross-checks against the signed model.
  bool clamp_cosine = true;
  int threads = 0;
};

// Brute-force transient renderer: albedo * cos+ * 1/(d_l^2 d_s^2) * area per surfel and pair,
// following g.falloff_mode. Optional Poisson shot noise.
TransientVolume render(const std::vector<Surfel> &surfels, const ScanGeometry &g,
                       const TimeBinning &binning, const std::optional<NoiseModel> &noise = {},
                       const RenderOptions &options = {});

// Ground-truth depth on an nx-by-ny grid over the box footprint: per pixel the smallest
// surfel z among surfels inside it.
DepthMap surfel_depth_map(const std::vector<Surfel> &surfels, const BoundingBox &box, int nx,
                          int ny);

} // namespace nlos
