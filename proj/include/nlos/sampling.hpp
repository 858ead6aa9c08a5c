#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nlos/forward_model.hpp"
#include "nlos/types.hpp"

namespace nlos {

struct Sample {
  Point3 position;
  std::size_t bin = 0;
  std::array<std::size_t, 8> vertex_ids{};
  std::array<double, 8> weights{};
};

using SampleBatch = std::vector<Sample>;

struct VertexGradients {
  std::vector<double> rho;
  std::vector<Vec3> normal;
};

// Counter-based randomness: a pure function of (seed, step, bin, lane).
std::uint64_t sample_key(std::uint64_t seed, std::uint64_t step, std::uint64_t bin,
                         std::uint64_t lane);
// Uniform in [0, 1) with 53 random bits.
double key_to_unit(std::uint64_t key);

// Trilinear weights and vertex ids for a point at local coordinates (u, v, w) in a bin.
Sample make_sample(const VoxelField &field, std::size_t bin, double u, double v, double w);

// One uniformly distributed point in every active bin, in bin order.
SampleBatch stratified_sample(const VoxelField &field, const ActiveDomain &domain,
                              std::uint64_t seed, std::uint64_t step = 0);

std::vector<PointSample> interpolate(const VoxelField &field, const SampleBatch &batch);

// Transpose of interpolate.
VertexGradients scatter_gradients(const SampleBatch &batch, std::span<const PointGradient> grads,
                                  const GridShape &shape);

} // namespace nlos
