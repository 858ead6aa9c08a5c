#include "nlos/evaluate.hpp"

#include <algorithm>
#include <cmath>

namespace nlos {

double effective_albedo(double rho, const Vec3 &n, FalloffMode mode) {
  return mode == FalloffMode::lambertian ? rho * norm(n) : rho;
}

Volume3 bin_albedo(const VoxelField &field, FalloffMode mode) {
  Volume3 out{field.shape, std::vector<double>(field.shape.bin_count(), 0.0)};
  std::vector<double> vertex_eff(field.rho.size());
  for (std::size_t v = 0; v < vertex_eff.size(); ++v)
    vertex_eff[v] = effective_albedo(field.rho[v], field.normal[v], mode);
  for (std::size_t b = 0; b < out.data.size(); ++b) {
    double sum = 0.0;
    for (auto v : field.bin_vertices(b))
      sum += vertex_eff[v];
    out.data[b] = sum / 8.0;
  }
  return out;
}

Volume3 masked_bin_albedo(const VoxelField &field, const ActiveDomain &domain, FalloffMode mode) {
  Volume3 out = bin_albedo(field, mode);
  for (std::size_t b = 0; b < out.data.size(); ++b)
    if (!domain.is_active(b))
      out.data[b] = 0.0;
  return out;
}

Image2 max_intensity_projection(const Volume3 &vol) {
  const auto &s = vol.shape;
  Image2 img{s.nx, s.ny, std::vector<double>(std::size_t(s.nx) * s.ny, 0.0)};
  for (int i = 0; i < s.nx; ++i)
    for (int j = 0; j < s.ny; ++j) {
      double m = vol.at(i, j, 0);
      for (int k = 1; k < s.nz; ++k)
        m = std::max(m, vol.at(i, j, k));
      img.at(i, j) = m;
    }
  return img;
}

std::vector<double> bin_center_z(const VoxelField &field) {
  std::vector<double> z(field.shape.nz);
  const double dz = field.bin_size().z;
  for (int k = 0; k < field.shape.nz; ++k)
    z[k] = field.box.origin.z + (k + 0.5) * dz;
  return z;
}

DepthMap depth_from_argmax(const Volume3 &vol, std::span<const double> z_coords,
                           double threshold_frac) {
  const auto &s = vol.shape;
  if (z_coords.size() != std::size_t(s.nz))
    throw InvalidArgument("z coordinate count does not match the volume depth");
  if (!(threshold_frac >= 0.0 && threshold_frac < 1.0))
    throw InvalidArgument("threshold fraction must lie in [0, 1)");
  DepthMap out{s.nx, s.ny, std::vector<double>(std::size_t(s.nx) * s.ny, 0.0),
               std::vector<std::uint8_t>(std::size_t(s.nx) * s.ny, 0)};
  double global = 0.0;
  for (double v : vol.data)
    global = std::max(global, v);
  for (int i = 0; i < s.nx; ++i)
    for (int j = 0; j < s.ny; ++j) {
      int best = 0;
      for (int k = 1; k < s.nz; ++k)
        if (vol.at(i, j, k) > vol.at(i, j, best))
          best = k;
      const double m = vol.at(i, j, best);
      if (m > 0.0 && m >= threshold_frac * global) {
        out.values[out.index(i, j)] = z_coords[best];
        out.valid[out.index(i, j)] = 1;
      }
    }
  return out;
}

DepthMap upsample_depth(const DepthMap &src, int nx, int ny) {
  if (nx < 1 || ny < 1 || src.nx < 1 || src.ny < 1)
    throw InvalidArgument("upsampling needs non-empty maps");
  DepthMap out{nx, ny, std::vector<double>(std::size_t(nx) * ny, 0.0),
               std::vector<std::uint8_t>(std::size_t(nx) * ny, 0)};
  const auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double x = (i + 0.5) * src.nx / nx - 0.5;
      const double y = (j + 0.5) * src.ny / ny - 0.5;
      const int near_i = clampi(int(std::floor(x + 0.5)), src.nx);
      const int near_j = clampi(int(std::floor(y + 0.5)), src.ny);
      if (!src.valid[src.index(near_i, near_j)])
        continue;
      const int i0 = int(std::floor(x));
      const int j0 = int(std::floor(y));
      const double fx = x - i0;
      const double fy = y - j0;
      double acc = 0.0;
      double wsum = 0.0;
      for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj) {
          const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy);
          const int si = clampi(i0 + di, src.nx);
          const int sj = clampi(j0 + dj, src.ny);
          if (w > 0.0 && src.valid[src.index(si, sj)]) {
            acc += w * src.values[src.index(si, sj)];
            wsum += w;
          }
        }
      out.values[out.index(i, j)] =
          wsum > 0.0 ? acc / wsum : src.values[src.index(near_i, near_j)];
      out.valid[out.index(i, j)] = 1;
    }
  return out;
}

DepthMetrics depth_metrics(const DepthMap &pred_in, const DepthMap &truth, bool upsample) {
  const DepthMap pred = (upsample && (pred_in.nx != truth.nx || pred_in.ny != truth.ny))
                            ? upsample_depth(pred_in, truth.nx, truth.ny)
                            : pred_in;
  if (pred.nx != truth.nx || pred.ny != truth.ny)
    throw InvalidArgument("depth maps have different resolutions");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t joint = 0;
  std::size_t truth_valid = 0;
  for (std::size_t p = 0; p < truth.values.size(); ++p) {
    truth_valid += truth.valid[p] ? 1 : 0;
    if (!(pred.valid[p] && truth.valid[p]))
      continue;
    const double e = pred.values[p] - truth.values[p];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    ++joint;
  }
  if (joint == 0)
    throw NoOverlap("depth maps share no valid pixels");
  DepthMetrics m;
  m.pixels = joint;
  m.mae = abs_sum / double(joint);
  m.rmse = std::sqrt(sq_sum / double(joint));
  m.valid_fraction = double(joint) / double(truth_valid);
  return m;
}

std::vector<OrientedPoint> export_point_cloud(const VoxelField &field, const ActiveDomain &domain,
                                              FalloffMode mode, const Point3 &wall_centroid,
                                              double threshold_frac) {
  std::vector<OrientedPoint> cloud;
  if (domain.empty())
    return cloud;
  const Volume3 albedo = masked_bin_albedo(field, domain, mode);
  double peak = 0.0;
  for (double v : albedo.data)
    peak = std::max(peak, v);
  for (std::size_t b = 0; b < albedo.data.size(); ++b) {
    if (!domain.is_active(b) || albedo.data[b] < threshold_frac * peak)
      continue;
    OrientedPoint pt;
    pt.position = field.bin_center(b);
    pt.intensity = albedo.data[b];
    Vec3 n;
    for (auto v : field.bin_vertices(b))
      n += field.normal[v] * 0.125;
    const Vec3 to_wall = wall_centroid - pt.position;
    const double len = norm(n);
    if (len > 0.0)
      n *= 1.0 / len;
    else
      n = to_wall * (1.0 / std::max(norm(to_wall), 1e-300));
    if (dot(n, to_wall) < 0.0)
      n = -n;
    pt.normal = n;
    cloud.push_back(pt);
  }
  return cloud;
}

} // namespace nlos
