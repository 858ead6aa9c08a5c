#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nlos/evaluate.hpp"
#include "nlos/sampling.hpp"
#include "nlos/types.hpp"

namespace nlos {

struct TransientStage {
  int stride = 1;     // spatial subsampling of the scan grid
  int until_step = 0; // used for steps <= until_step
};

struct ReconstructionConfig {
  int steps_total = 2000;
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int reduction_period = 50;
  double reduction_threshold_frac = 0.02;
  double blur_sigma_bins = 1.0;
  int blur_kernel_radius = 1;
  std::vector<GridShape> resolution_ladder{{16, 16, 16}, {32, 32, 32}, {64, 64, 64}};
  std::vector<int> expansion_steps{300, 800};
  std::vector<TransientStage> transient_coarse_to_fine;
  std::uint64_t seed = 0;
  double initial_albedo = 0.5;

  void validate() const;
};

struct TraceRecord {
  int step = 0;
  double loss = 0.0;
  double active_ratio = 0.0; // of the domain the step was computed on
  double iter_seconds = 0.0;
  std::size_t active_bins = 0;
  int level = 0;
};

struct OptimizerState {
  std::vector<double> m_rho, v_rho;
  std::vector<Vec3> m_n, v_n;
  long step = 0;

  void reset(std::size_t vertices);
};

struct ReconstructionResult {
  VoxelField field;
  ActiveDomain domain;
  std::vector<TraceRecord> trace;
};

// Thrown by reconstruct when the domain empties or the loss stops being finite. Carries the
// last state before the failing reduction.
class ReconstructionAborted : public std::runtime_error {
public:
  enum class Reason { empty_domain, non_finite_loss };

  ReconstructionAborted(Reason reason, const std::string &what, ReconstructionResult last)
      : std::runtime_error(what), reason_(reason), last_(std::move(last)) {}

  Reason reason() const { return reason_; }
  const ReconstructionResult &last_state() const { return last_; }

private:
  Reason reason_;
  ReconstructionResult last_;
};

using ProgressSink = std::function<void(const TraceRecord &)>;

// Sum of squared differences.
double loss(const TransientVolume &predicted, const TransientVolume &measured);

// Bias-corrected Adam on rho and n, then rho <- max(rho, 0). Only vertices flagged in `live`
// move when a mask is given.
void adam_step(VoxelField &field, const VertexGradients &grads, OptimizerState &state,
               const ReconstructionConfig &cfg, const std::vector<std::uint8_t> *live = nullptr);

// Normalized, truncated 3D Gaussian blur (zero padded) of `values` restricted to active bins.
Volume3 blur_active(const Volume3 &values, const ActiveDomain &domain, double sigma_bins,
                    int radius);

// Removes active bins whose value is below `threshold` (all of them when max <= 0).
// Throws EmptyDomain when nothing survives.
ActiveDomain threshold_domain(const Volume3 &values, const ActiveDomain &domain,
                              double threshold);

// Blur the per-bin albedo, then drop bins below reduction_threshold_frac of the blurred max.
ActiveDomain soft_domain_reduction(const VoxelField &field, const ActiveDomain &domain,
                                   const ReconstructionConfig &cfg,
                                   FalloffMode mode = FalloffMode::lambertian);

// Subdivides every bin by an integer factor per axis; vertex values are trilinearly
// interpolated and children inherit their parent's activity.
std::pair<VoxelField, ActiveDomain> expand_grid(const VoxelField &field, const ActiveDomain &domain,
                                                const GridShape &new_resolution);

// Keeps every stride-th scan point per axis (selection, not averaging).
std::pair<TransientVolume, ScanGeometry> downsample_transients(const TransientVolume &tv,
                                                               const ScanGeometry &g, int stride);

// Drops ladder levels finer than `max_per_axis` on any axis, together with their expansion
// steps. Throws when not even the first level fits.
ReconstructionConfig cap_resolution(ReconstructionConfig cfg, int max_per_axis);

// Initial unit normal: from the hidden-volume center towards the wall centroid.
Vec3 initial_normal(const BoundingBox &bbox, const ScanGeometry &g);

ReconstructionResult reconstruct(const TransientVolume &measured, const ScanGeometry &g,
                                 const BoundingBox &bbox, const ReconstructionConfig &cfg,
                                 const ProgressSink &sink = {}, int threads = 0);

} // namespace nlos
