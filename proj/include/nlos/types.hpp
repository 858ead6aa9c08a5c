#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlos {

// Error kinds surfaced by the library. The CLI maps some of them to exit codes.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 &operator+=(const Vec3 &o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3 &operator-=(const Vec3 &o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3 &operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3 &b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3 &b) { return a -= b; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator-(const Vec3 &a) { return {-a.x, -a.y, -a.z}; }
constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr double norm2(const Vec3 &a) { return dot(a, a); }
inline double norm(const Vec3 &a) { return std::sqrt(norm2(a)); }
inline bool is_finite(const Vec3 &a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Hidden-scene points, laser points and scan points, in meters.
using Point3 = Vec3;

// lambertian: cosine and inverse-square fall-off.
// retroreflective: inverse-square only.
// none: neither; isotropic scattering without distance attenuation (ablation only).
enum class FalloffMode { lambertian, retroreflective, none };

enum class Pairing { cartesian, paired };

std::string to_string(FalloffMode m);
std::string to_string(Pairing p);
FalloffMode falloff_mode_from_string(const std::string &s);
Pairing pairing_from_string(const std::string &s);

// Laser/scan point sets on an arbitrary relay wall. The wall is known only
// through these samples; nothing assumes it is planar.
struct ScanGeometry {
  std::vector<Point3> laser_points;
  std::vector<Point3> scan_points;
  bool confocal = false;
  FalloffMode falloff_mode = FalloffMode::lambertian;
  Pairing pairing = Pairing::cartesian;
  // Set when the scan points come from a regular nx-by-ny grid (index = ix * ny + iy).
  std::optional<std::array<int, 2>> grid_shape;

  // Measurement pairs: L*S for cartesian (index = li * S + si), L for paired.
  std::size_t pair_count() const {
    return pairing == Pairing::paired ? laser_points.size()
                                      : laser_points.size() * scan_points.size();
  }
  const Point3 &laser_of(std::size_t pair) const {
    return pairing == Pairing::paired ? laser_points[pair] : laser_points[pair / scan_points.size()];
  }
  const Point3 &scan_of(std::size_t pair) const {
    return pairing == Pairing::paired ? scan_points[pair] : scan_points[pair % scan_points.size()];
  }
  Point3 wall_centroid() const;

  // Throws InvalidArgument when an invariant does not hold.
  void validate() const;

  friend bool operator==(const ScanGeometry &, const ScanGeometry &) = default;
};

// Time axis of a transient, expressed as optical path length. Bin k covers
// [path_offset + k * bin_length, path_offset + (k + 1) * bin_length).
struct TimeBinning {
  double bin_length = 0.0;
  double path_offset = 0.0;
  int bins = 0;

  friend bool operator==(const TimeBinning &, const TimeBinning &) = default;
};

// Photon histograms, C order [pair][bin].
struct TransientVolume {
  std::vector<double> data;
  std::size_t pairs = 0;
  TimeBinning binning;

  TransientVolume() = default;
  TransientVolume(std::size_t pair_count, TimeBinning b);

  double &at(std::size_t pair, int bin) { return data[pair * binning.bins + bin]; }
  double at(std::size_t pair, int bin) const { return data[pair * binning.bins + bin]; }
  std::span<double> row(std::size_t pair) {
    return {data.data() + pair * binning.bins, static_cast<std::size_t>(binning.bins)};
  }
  std::span<const double> row(std::size_t pair) const {
    return {data.data() + pair * binning.bins, static_cast<std::size_t>(binning.bins)};
  }
  bool same_shape(const TransientVolume &o) const {
    return pairs == o.pairs && binning.bins == o.binning.bins;
  }
  void validate() const;
};

struct GridShape {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t bin_count() const { return std::size_t(nx) * ny * nz; }
  std::size_t vertex_count() const { return std::size_t(nx + 1) * (ny + 1) * (nz + 1); }
  std::size_t bin_index(int i, int j, int k) const { return (std::size_t(i) * ny + j) * nz + k; }
  std::size_t vertex_index(int i, int j, int k) const {
    return (std::size_t(i) * (ny + 1) + j) * (nz + 1) + k;
  }
  std::array<int, 3> bin_coords(std::size_t b) const {
    const int k = int(b % nz);
    const int j = int((b / nz) % ny);
    const int i = int(b / (std::size_t(nz) * ny));
    return {i, j, k};
  }
  friend bool operator==(const GridShape &, const GridShape &) = default;
};

// Axis-aligned hidden volume in meters.
struct BoundingBox {
  Point3 origin;
  Vec3 extent;

  void validate() const;
  friend bool operator==(const BoundingBox &, const BoundingBox &) = default;
};

// Per-vertex albedo and (unnormalized) normal over a regular grid.
struct VoxelField {
  BoundingBox box;
  GridShape shape;
  std::vector<double> rho;
  std::vector<Vec3> normal;

  VoxelField() = default;
  VoxelField(BoundingBox b, GridShape s, double rho0, Vec3 n0);

  Vec3 bin_size() const {
    return {box.extent.x / shape.nx, box.extent.y / shape.ny, box.extent.z / shape.nz};
  }
  double bin_volume() const {
    const Vec3 d = bin_size();
    return d.x * d.y * d.z;
  }
  Point3 vertex_position(int i, int j, int k) const;
  Point3 bin_center(std::size_t bin) const;
  // The 8 vertex ids of a bin, ordered by (di, dj, dk) bits (di is bit 2).
  std::array<std::size_t, 8> bin_vertices(std::size_t bin) const;
  void validate() const;
};

// Occupancy over grid bins; the reduced domain.
class ActiveDomain {
public:
  ActiveDomain() = default;
  explicit ActiveDomain(GridShape shape, bool active = true);
  static ActiveDomain from_mask(GridShape shape, std::vector<std::uint8_t> mask);

  const GridShape &shape() const { return shape_; }
  std::size_t size() const { return mask_.size(); }
  std::size_t active_count() const { return active_count_; }
  double active_ratio() const {
    return mask_.empty() ? 0.0 : double(active_count_) / double(mask_.size());
  }
  bool empty() const { return active_count_ == 0; }
  bool is_active(std::size_t bin) const { return mask_[bin] != 0; }
  void deactivate(std::size_t bin);
  const std::vector<std::uint8_t> &mask() const { return mask_; }
  std::vector<std::size_t> active_bins() const;
  // Vertices touching at least one active bin.
  std::vector<std::uint8_t> live_vertices() const;

  friend bool operator==(const ActiveDomain &, const ActiveDomain &) = default;

private:
  GridShape shape_;
  std::vector<std::uint8_t> mask_;
  std::size_t active_count_ = 0;
};

} // namespace nlos
