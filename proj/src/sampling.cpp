#include "nlos/sampling.hpp"

namespace nlos {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::uint64_t sample_key(std::uint64_t seed, std::uint64_t step, std::uint64_t bin,
                         std::uint64_t lane) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ bin);
  return splitmix64(h ^ lane);
}

double key_to_unit(std::uint64_t key) { return double(key >> 11) * 0x1.0p-53; }

Sample make_sample(const VoxelField &field, std::size_t bin, double u, double v, double w) {
  const auto [i, j, k] = field.shape.bin_coords(bin);
  const Vec3 d = field.bin_size();
  const Point3 &o = field.box.origin;
  Sample s;
  s.bin = bin;
  s.position = {o.x + (i + u) * d.x, o.y + (j + v) * d.y, o.z + (k + w) * d.z};
  s.vertex_ids = field.bin_vertices(bin);
  for (int c = 0; c < 8; ++c) {
    const double wx = (c >> 2) & 1 ? u : 1.0 - u;
    const double wy = (c >> 1) & 1 ? v : 1.0 - v;
    const double wz = c & 1 ? w : 1.0 - w;
    s.weights[c] = wx * wy * wz;
  }
  return s;
}

SampleBatch stratified_sample(const VoxelField &field, const ActiveDomain &domain,
                              std::uint64_t seed, std::uint64_t step) {
  if (domain.empty())
    throw EmptyDomain("cannot sample an empty domain");
  if (!(domain.shape() == field.shape))
    throw InvalidArgument("domain and field resolutions differ");
  SampleBatch batch;
  batch.reserve(domain.active_count());
  for (std::size_t b = 0; b < domain.size(); ++b) {
    if (!domain.is_active(b))
      continue;
    const double u = key_to_unit(sample_key(seed, step, b, 0));
    const double v = key_to_unit(sample_key(seed, step, b, 1));
    const double w = key_to_unit(sample_key(seed, step, b, 2));
    batch.push_back(make_sample(field, b, u, v, w));
  }
  return batch;
}

std::vector<PointSample> interpolate(const VoxelField &field, const SampleBatch &batch) {
  std::vector<PointSample> out;
  out.reserve(batch.size());
  const std::size_t nv = field.rho.size();
  for (const auto &s : batch) {
    PointSample p;
    p.position = s.position;
    for (int c = 0; c < 8; ++c) {
      const std::size_t v = s.vertex_ids[c];
      if (v >= nv)
        throw InvalidArgument("sample vertex index out of range");
      p.rho += s.weights[c] * field.rho[v];
      p.normal += field.normal[v] * s.weights[c];
    }
    out.push_back(p);
  }
  return out;
}

VertexGradients scatter_gradients(const SampleBatch &batch, std::span<const PointGradient> grads,
                                  const GridShape &shape) {
  if (batch.size() != grads.size())
    throw InvalidArgument("gradient count does not match sample count");
  VertexGradients out{std::vector<double>(shape.vertex_count(), 0.0),
                      std::vector<Vec3>(shape.vertex_count())};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto &s = batch[i];
    for (int c = 0; c < 8; ++c) {
      const std::size_t v = s.vertex_ids[c];
      if (v >= out.rho.size())
        throw InvalidArgument("sample vertex index out of range");
      out.rho[v] += s.weights[c] * grads[i].rho;
      out.normal[v] += grads[i].normal * s.weights[c];
    }
  }
  return out;
}

} // namespace nlos
