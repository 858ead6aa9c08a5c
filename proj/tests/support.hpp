#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "nlos/forward_model.hpp"
#include "nlos/geometry.hpp"
#include "nlos/simulator.hpp"

namespace nlos::test {

inline double uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Vec3 random_unit(std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  for (;;) {
    const Vec3 v{nd(rng), nd(rng), nd(rng)};
    const double n = norm(v);
    if (n > 1e-3)
      return v * (1.0 / n);
  }
}

// Points in front of a wall at z = 0 spanning [-0.5, 0.5]^2.
inline Point3 random_hidden_point(std::mt19937_64 &rng) {
  return {uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, 0.2, 0.8)};
}

// A binning that covers every path between the wall and the hidden slab above.
inline TimeBinning covering_binning(int bins, double offset = 0.0) {
  const double longest = 2.0 * std::sqrt(1.0 + 1.0 + 0.8 * 0.8);
  return {(longest - offset) / bins, offset, bins};
}

inline std::vector<PointSample> to_points(const std::vector<Surfel> &surfels) {
  std::vector<PointSample> pts;
  for (const auto &s : surfels)
    pts.push_back({s.position, s.albedo * s.area, s.normal});
  return pts;
}

// Largest absolute element difference over the largest absolute reference element.
inline double relative_linf(const std::vector<double> &a, const std::vector<double> &ref) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - ref[i]));
    scale = std::max(scale, std::abs(ref[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

inline double inner(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

} // namespace nlos::test
