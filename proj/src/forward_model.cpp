#include "nlos/forward_model.hpp"

#include <cmath>

#include "nlos/parallel.hpp"

namespace nlos {

double cosine_falloff(const Point3 &p, const Point3 &l, const Vec3 &n) {
  const Vec3 d = l - p;
  const double len = norm(d);
  if (len == 0.0)
    throw DegenerateGeometry("cosine fall-off undefined: laser point coincides with p");
  return dot(d, n) / len;
}

double distance_falloff(const Point3 &p, const Point3 &l, const Point3 &s, FalloffMode mode) {
  const double dl2 = norm2(l - p);
  const double ds2 = norm2(s - p);
  if (dl2 == 0.0 || ds2 == 0.0)
    throw DegenerateGeometry("distance fall-off undefined at zero distance");
  return mode == FalloffMode::none ? 1.0 : 1.0 / (dl2 * ds2);
}

std::optional<int> arrival_bin(const Point3 &p, const Point3 &l, const Point3 &s,
                               const TimeBinning &binning) {
  if (!(binning.bin_length > 0.0))
    throw InvalidArgument("bin_length must be positive");
  const double path = norm(l - p) + norm(s - p);
  const double t = std::floor((path - binning.path_offset) / binning.bin_length);
  if (!(t >= 0.0) || t >= double(binning.bins))
    return std::nullopt;
  return int(t);
}

Footprint propagation_footprint(const Point3 &p, const Vec3 &n, const ScanGeometry &g,
                                const TimeBinning &binning) {
  Footprint fp;
  const std::size_t pairs = g.pair_count();
  for (std::size_t k = 0; k < pairs; ++k) {
    const Point3 &l = g.laser_of(k);
    const Point3 &s = g.scan_of(k);
    if (auto term = detail::pair_term(p, n, l, s, l == s, g.falloff_mode, binning))
      fp.entries.push_back({k, term->bin, term->weight});
  }
  return fp;
}

double max_footprint_weight(const Point3 &p, const Vec3 &n, const ScanGeometry &g,
                            const TimeBinning &binning) {
  double best = 0.0;
  for (const auto &e : propagation_footprint(p, n, g, binning).entries)
    best = std::max(best, std::abs(e.weight));
  return best;
}

TransientVolume synthesize(std::span<const PointSample> points, const ScanGeometry &g,
                           double cell_volume, const TimeBinning &binning, int threads) {
  if (!(cell_volume > 0.0))
    throw InvalidArgument("cell volume must be positive");
  if (!(binning.bin_length > 0.0) || binning.bins < 1)
    throw InvalidArgument("invalid time binning");
  TransientVolume out(g.pair_count(), binning);
  const FalloffMode mode = g.falloff_mode;
  parallel_chunks(out.pairs, threads, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Point3 &l = g.laser_of(k);
      const Point3 &s = g.scan_of(k);
      const bool same = l == s;
      auto row = out.row(k);
      for (const auto &pt : points) {
        if (auto term = detail::pair_term(pt.position, pt.normal, l, s, same, mode, binning))
          row[term->bin] += pt.rho * term->weight * cell_volume;
      }
    }
  });
  return out;
}

std::vector<PointGradient> adjoint(const TransientVolume &cotangent,
                                   std::span<const PointSample> points, const ScanGeometry &g,
                                   double cell_volume, int threads) {
  if (cotangent.pairs != g.pair_count())
    throw InvalidArgument("cotangent volume does not match the scan geometry");
  if (cotangent.data.size() != cotangent.pairs * std::size_t(cotangent.binning.bins))
    throw InvalidArgument("cotangent volume data size does not match its shape");
  std::vector<PointGradient> grads(points.size());
  const FalloffMode mode = g.falloff_mode;
  const TimeBinning &binning = cotangent.binning;
  const std::size_t pairs = g.pair_count();
  parallel_chunks(points.size(), threads, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PointSample &pt = points[i];
      double d_rho = 0.0;
      Vec3 d_n;
      for (std::size_t k = 0; k < pairs; ++k) {
        const Point3 &l = g.laser_of(k);
        const Point3 &s = g.scan_of(k);
        auto term = detail::pair_term(pt.position, pt.normal, l, s, l == s, mode, binning);
        if (!term)
          continue;
        const double c = cotangent.at(k, term->bin);
        if (c == 0.0)
          continue;
        d_rho += c * term->weight * cell_volume;
        if (mode == FalloffMode::lambertian)
          d_n += term->to_laser * (c * pt.rho * term->upsilon * cell_volume);
      }
      grads[i] = {d_rho, d_n};
    }
  });
  return grads;
}

} // namespace nlos
