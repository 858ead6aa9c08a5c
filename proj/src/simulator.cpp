#include "nlos/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nlos/parallel.hpp"

namespace nlos {

namespace {

void require(bool ok, const char *msg) {
  if (!ok)
    throw InvalidArgument(msg);
}

void add_patch(std::vector<Surfel> &out, const Point3 &center, double w, double h, int nx, int ny,
               double albedo) {
  const double area = w * h / (double(nx) * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      out.push_back({{center.x - 0.5 * w + (i + 0.5) * w / nx,
                      center.y - 0.5 * h + (j + 0.5) * h / ny, center.z},
                     albedo,
                     {0.0, 0.0, -1.0},
                     area});
}

std::vector<Surfel> build(const PlanePatchParams &p) {
  require(p.width > 0 && p.height > 0, "plane_patch: width and height must be positive");
  require(p.count_x >= 1 && p.count_y >= 1, "plane_patch: counts must be positive");
  require(p.albedo >= 0, "plane_patch: albedo must be non-negative");
  std::vector<Surfel> out;
  add_patch(out, p.center, p.width, p.height, p.count_x, p.count_y, p.albedo);
  return out;
}

std::vector<Surfel> build(const SphereCapParams &p) {
  require(p.radius > 0, "sphere_cap: radius must be positive");
  require(p.cap_angle_deg > 0 && p.cap_angle_deg <= 180, "sphere_cap: cap angle must lie in (0, 180]");
  require(p.rings >= 1 && p.segments >= 1, "sphere_cap: rings and segments must be positive");
  require(p.albedo >= 0, "sphere_cap: albedo must be non-negative");
  const double alpha = p.cap_angle_deg * std::numbers::pi / 180.0;
  const double total = 2.0 * std::numbers::pi * p.radius * p.radius * (1.0 - std::cos(alpha));
  const double area = total / (double(p.rings) * p.segments);
  std::vector<Surfel> out;
  for (int r = 0; r < p.rings; ++r) {
    // Equal-area bands: cos(theta) uniformly spaced.
    const double c = 1.0 - (r + 0.5) * (1.0 - std::cos(alpha)) / p.rings;
    const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int s = 0; s < p.segments; ++s) {
      const double phi = 2.0 * std::numbers::pi * (s + 0.5) / p.segments;
      const Vec3 n{sn * std::cos(phi), sn * std::sin(phi), -c};
      out.push_back({p.center + n * p.radius, p.albedo, n, area});
    }
  }
  return out;
}

std::vector<Surfel> build(const TwoPlanesParams &p) {
  require(p.width > 0 && p.height > 0, "two_planes: width and height must be positive");
  require(p.count_x >= 1 && p.count_y >= 1, "two_planes: counts must be positive");
  require(p.depth_near > 0 && p.depth_far > 0, "two_planes: depths must be positive");
  require(p.albedo >= 0, "two_planes: albedo must be non-negative");
  std::vector<Surfel> out;
  add_patch(out, {-0.5 * p.separation, 0.0, p.depth_near}, p.width, p.height, p.count_x,
            p.count_y, p.albedo);
  add_patch(out, {0.5 * p.separation, 0.0, p.depth_far}, p.width, p.height, p.count_x, p.count_y,
            p.albedo);
  return out;
}

std::vector<Surfel> build(const LetterGridParams &p) {
  require(p.cell_size > 0, "letter_grid: cell size must be positive");
  require(p.samples_per_cell >= 1, "letter_grid: samples_per_cell must be positive");
  require(!p.pattern.empty(), "letter_grid: pattern is empty");
  require(p.albedo >= 0, "letter_grid: albedo must be non-negative");
  const int rows = int(p.pattern.size());
  std::size_t cols = 0;
  for (const auto &row : p.pattern)
    cols = std::max(cols, row.size());
  require(cols > 0, "letter_grid: pattern is empty");
  std::vector<Surfel> out;
  for (int r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < p.pattern[r].size(); ++c) {
      const char ch = p.pattern[r][c];
      if (ch != '#' && ch != 'X')
        continue;
      const Point3 cell{p.center.x + (double(c) - 0.5 * double(cols - 1)) * p.cell_size,
                        p.center.y + (0.5 * (rows - 1) - r) * p.cell_size, p.center.z};
      add_patch(out, cell, p.cell_size, p.cell_size, p.samples_per_cell, p.samples_per_cell,
                p.albedo);
    }
  require(!out.empty(), "letter_grid: pattern has no filled cells");
  return out;
}

} // namespace

std::vector<Surfel> make_scene(const SceneSpec &spec) {
  return std::visit([](const auto &p) { return build(p); }, spec);
}

TransientVolume render(const std::vector<Surfel> &surfels, const ScanGeometry &g,
                       const TimeBinning &binning, const std::optional<NoiseModel> &noise,
                       const RenderOptions &options) {
  g.validate();
  if (!(binning.bin_length > 0.0) || binning.bins < 1)
    throw InvalidArgument("invalid time binning");
  const std::size_t P = g.pair_count();
  const std::size_t T = std::size_t(binning.bins);
  const int workers = std::max(1, std::min<int>(resolve_threads(options.threads),
                                                int(std::max<std::size_t>(1, surfels.size()))));
  std::vector<std::vector<double>> partial(workers);

  parallel_chunks(surfels.size(), workers, [&](int w, std::size_t begin, std::size_t end) {
    auto &acc = partial[w];
    acc.assign(P * T, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const Surfel &sf = surfels[i];
      for (std::size_t k = 0; k < P; ++k) {
        const Point3 l = g.pairing == Pairing::paired ? g.laser_points[k]
                                                      : g.laser_points[k / g.scan_points.size()];
        const Point3 s = g.pairing == Pairing::paired ? g.scan_points[k]
                                                      : g.scan_points[k % g.scan_points.size()];
        const Vec3 to_l = l - sf.position;
        const Vec3 to_s = s - sf.position;
        const double d_l = std::sqrt(to_l.x * to_l.x + to_l.y * to_l.y + to_l.z * to_l.z);
        const double d_s = std::sqrt(to_s.x * to_s.x + to_s.y * to_s.y + to_s.z * to_s.z);
        if (d_l == 0.0 || d_s == 0.0)
          throw DegenerateGeometry("surfel coincides with a wall point");
        const double bin = std::floor((d_l + d_s - binning.path_offset) / binning.bin_length);
        if (bin < 0.0 || bin >= double(T))
          continue;
        double radiometry = 1.0;
        if (g.falloff_mode != FalloffMode::none)
          radiometry = (1.0 / (d_l * d_l)) * (1.0 / (d_s * d_s));
        if (g.falloff_mode == FalloffMode::lambertian) {
          double cosine = (to_l.x * sf.normal.x + to_l.y * sf.normal.y + to_l.z * sf.normal.z) / d_l;
          if (options.clamp_cosine)
            cosine = std::max(cosine, 0.0);
          radiometry *= cosine;
        }
        acc[k * T + std::size_t(bin)] += sf.albedo * radiometry * sf.area;
      }
    }
  });

  TransientVolume out(P, binning);
  for (const auto &acc : partial) {
    if (acc.empty())
      continue;
    for (std::size_t i = 0; i < acc.size(); ++i)
      out.data[i] += acc[i];
  }

  if (noise) {
    if (!(noise->photon_scale > 0.0))
      throw InvalidArgument("photon_scale must be positive");
    std::mt19937_64 rng(noise->seed);
    for (double &v : out.data) {
      const double mean = std::max(v, 0.0) * noise->photon_scale;
      if (mean <= 0.0) {
        v = 0.0;
        continue;
      }
      std::poisson_distribution<long long> dist(mean);
      v = double(dist(rng)) / noise->photon_scale;
    }
  }
  return out;
}

DepthMap surfel_depth_map(const std::vector<Surfel> &surfels, const BoundingBox &box, int nx,
                          int ny) {
  box.validate();
  if (nx < 1 || ny < 1)
    throw InvalidArgument("depth map resolution must be positive");
  DepthMap out{nx, ny, std::vector<double>(std::size_t(nx) * ny, 0.0),
               std::vector<std::uint8_t>(std::size_t(nx) * ny, 0)};
  const double dx = box.extent.x / nx;
  const double dy = box.extent.y / ny;
  for (const auto &sf : surfels) {
    const double fx = (sf.position.x - box.origin.x) / dx;
    const double fy = (sf.position.y - box.origin.y) / dy;
    if (fx < 0 || fy < 0 || fx >= nx || fy >= ny)
      continue;
    const std::size_t idx = out.index(int(fx), int(fy));
    if (!out.valid[idx] || sf.position.z < out.values[idx]) {
      out.values[idx] = sf.position.z;
      out.valid[idx] = 1;
    }
  }
  return out;
}

} // namespace nlos
