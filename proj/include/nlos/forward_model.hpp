#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nlos/types.hpp"

namespace nlos {

// A hidden-scene point with its (interpolated) variables.
struct PointSample {
  Point3 position;
  double rho = 0.0;
  Vec3 normal;
};

struct PointGradient {
  double rho = 0.0;
  Vec3 normal;
};

struct FootprintEntry {
  std::size_t pair = 0;
  int bin = 0;
  double weight = 0.0;
};

// Discretized propagation function of one point: at most one entry per measurement pair.
struct Footprint {
  std::vector<FootprintEntry> entries;
};

// Signed cosine between the direction towards the laser point and n. n need not be unit length.
double cosine_falloff(const Point3 &p, const Point3 &l, const Vec3 &n);

// Inverse-square attenuation 1 / (d_l^2 d_s^2); 1 for FalloffMode::none.
double distance_falloff(const Point3 &p, const Point3 &l, const Point3 &s, FalloffMode mode);

// Time bin reached by the path l -> p -> s, or nullopt when outside [0, bins).
std::optional<int> arrival_bin(const Point3 &p, const Point3 &l, const Point3 &s,
                               const TimeBinning &binning);

Footprint propagation_footprint(const Point3 &p, const Vec3 &n, const ScanGeometry &g,
                                const TimeBinning &binning);

// Sum over points of rho * footprint * cell_volume. Bit-identical for any worker count:
// every output row is owned by one worker and accumulated in point order.
TransientVolume synthesize(std::span<const PointSample> points, const ScanGeometry &g,
                           double cell_volume, const TimeBinning &binning, int threads = 0);

// Transpose of synthesize applied to `cotangent` (for the L2 loss pass 2 * (T - tau)).
// Returns d/d rho and d/d n per point. Normal gradients are zero unless the cosine term is
// modelled (lambertian).
std::vector<PointGradient> adjoint(const TransientVolume &cotangent,
                                   std::span<const PointSample> points, const ScanGeometry &g,
                                   double cell_volume, int threads = 0);

// Largest |weight| of a point's footprint; 0 when it has no entries.
double max_footprint_weight(const Point3 &p, const Vec3 &n, const ScanGeometry &g,
                            const TimeBinning &binning);

namespace detail {

struct PairTerm {
  int bin = 0;
  double upsilon = 1.0; // distance fall-off actually applied
  Vec3 to_laser;        // unit direction p -> l
  double weight = 0.0;  // full footprint weight for this pair
};

// Shared kernel of synthesize / adjoint / footprint. Throws DegenerateGeometry when p
// coincides with l or s.
inline std::optional<PairTerm> pair_term(const Point3 &p, const Vec3 &n, const Point3 &l,
                                         const Point3 &s, bool same_point, FalloffMode mode,
                                         const TimeBinning &binning) {
  const Vec3 dl_vec = l - p;
  const double dl2 = norm2(dl_vec);
  double ds2 = dl2;
  if (!same_point)
    ds2 = norm2(s - p);
  if (dl2 == 0.0 || ds2 == 0.0)
    throw DegenerateGeometry("hidden point coincides with a wall point");
  const double dl = std::sqrt(dl2);
  const double ds = same_point ? dl : std::sqrt(ds2);
  const double t = std::floor((dl + ds - binning.path_offset) / binning.bin_length);
  if (!(t >= 0.0) || t >= double(binning.bins))
    return std::nullopt;
  PairTerm term;
  term.bin = int(t);
  term.to_laser = dl_vec * (1.0 / dl);
  switch (mode) {
  case FalloffMode::lambertian:
    term.upsilon = 1.0 / (dl2 * ds2);
    term.weight = dot(term.to_laser, n) * term.upsilon;
    break;
  case FalloffMode::retroreflective:
    term.upsilon = 1.0 / (dl2 * ds2);
    term.weight = term.upsilon;
    break;
  case FalloffMode::none:
    term.upsilon = 1.0;
    term.weight = 1.0;
    break;
  }
  return term;
}

} // namespace detail

} // namespace nlos
