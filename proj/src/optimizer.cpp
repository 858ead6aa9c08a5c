#include "nlos/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "nlos/forward_model.hpp"
#include "nlos/geometry.hpp"

namespace nlos {

void ReconstructionConfig::validate() const {
  if (steps_total < 1)
    throw InvalidArgument("steps_total must be positive");
  if (!(learning_rate >= 0.0))
    throw InvalidArgument("learning_rate must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0))
    throw InvalidArgument("adam_eps must be positive");
  if (reduction_period < 1)
    throw InvalidArgument("reduction_period must be at least 1");
  if (!(reduction_threshold_frac > 0.0 && reduction_threshold_frac < 1.0))
    throw InvalidArgument("reduction_threshold_frac must lie in (0, 1)");
  if (!(blur_sigma_bins > 0.0) || blur_kernel_radius < 0)
    throw InvalidArgument("blur parameters must be positive");
  if (resolution_ladder.empty())
    throw InvalidArgument("resolution ladder is empty");
  if (expansion_steps.size() + 1 != resolution_ladder.size())
    throw InvalidArgument("expansion_steps needs one entry fewer than resolution_ladder");
  for (const auto &r : resolution_ladder)
    if (r.nx < 1 || r.ny < 1 || r.nz < 1)
      throw InvalidArgument("resolutions must be positive");
  for (std::size_t i = 1; i < resolution_ladder.size(); ++i) {
    const auto &a = resolution_ladder[i - 1];
    const auto &b = resolution_ladder[i];
    if (!(b.nx > a.nx && b.ny > a.ny && b.nz > a.nz))
      throw InvalidArgument("resolution ladder must increase on every axis");
    if (b.nx % a.nx || b.ny % a.ny || b.nz % a.nz)
      throw InvalidArgument("resolution ladder entries must be integer multiples");
  }
  for (std::size_t i = 0; i < expansion_steps.size(); ++i) {
    if (expansion_steps[i] < 1 || expansion_steps[i] >= steps_total)
      throw InvalidArgument("expansion steps must lie in [1, steps_total)");
    if (i > 0 && expansion_steps[i] <= expansion_steps[i - 1])
      throw InvalidArgument("expansion steps must be strictly increasing");
  }
  for (const auto &st : transient_coarse_to_fine)
    if (st.stride < 1 || st.until_step < 0)
      throw InvalidArgument("invalid transient coarse-to-fine stage");
  if (!(initial_albedo > 0.0))
    throw InvalidArgument("initial_albedo must be positive");
}

void OptimizerState::reset(std::size_t vertices) {
  m_rho.assign(vertices, 0.0);
  v_rho.assign(vertices, 0.0);
  m_n.assign(vertices, Vec3{});
  v_n.assign(vertices, Vec3{});
  step = 0;
}

double loss(const TransientVolume &predicted, const TransientVolume &measured) {
  if (!predicted.same_shape(measured) || predicted.data.size() != measured.data.size())
    throw InvalidArgument("loss: transient shapes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.data.size(); ++i) {
    const double d = predicted.data[i] - measured.data[i];
    sum += d * d;
  }
  return sum;
}

void adam_step(VoxelField &field, const VertexGradients &grads, OptimizerState &state,
               const ReconstructionConfig &cfg, const std::vector<std::uint8_t> *live) {
  const std::size_t nv = field.rho.size();
  if (grads.rho.size() != nv || grads.normal.size() != nv)
    throw InvalidArgument("gradient arrays do not match the field");
  if (live && live->size() != nv)
    throw InvalidArgument("live mask does not match the field");
  if (state.m_rho.size() != nv)
    state.reset(nv);
  ++state.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, double(state.step));
  const double c2 = 1.0 - std::pow(b2, double(state.step));
  const double lr = cfg.learning_rate;
  const double eps = cfg.adam_eps;
  const auto update = [&](double g, double &m, double &v, double &x) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    x -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
  };
  for (std::size_t i = 0; i < nv; ++i) {
    if (live && !(*live)[i])
      continue;
    update(grads.rho[i], state.m_rho[i], state.v_rho[i], field.rho[i]);
    field.rho[i] = std::max(field.rho[i], 0.0);
    Vec3 &n = field.normal[i];
    Vec3 &m = state.m_n[i];
    Vec3 &v = state.v_n[i];
    const Vec3 &g = grads.normal[i];
    update(g.x, m.x, v.x, n.x);
    update(g.y, m.y, v.y, n.y);
    update(g.z, m.z, v.z, n.z);
  }
}

Volume3 blur_active(const Volume3 &values, const ActiveDomain &domain, double sigma_bins,
                    int radius) {
  const GridShape s = values.shape;
  if (!(domain.shape() == s))
    throw InvalidArgument("blur: domain and volume resolutions differ");
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    kernel[d + radius] = std::exp(-0.5 * d * d / (sigma_bins * sigma_bins));
    ksum += kernel[d + radius];
  }
  for (auto &k : kernel)
    k /= ksum;

  std::vector<double> a(values.data.size());
  for (std::size_t b = 0; b < a.size(); ++b)
    a[b] = domain.is_active(b) ? values.data[b] : 0.0;
  std::vector<double> tmp(a.size());
  const int dims[3] = {s.nx, s.ny, s.nz};
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = 0; i < s.nx; ++i)
      for (int j = 0; j < s.ny; ++j)
        for (int k = 0; k < s.nz; ++k) {
          int c[3] = {i, j, k};
          const int center = c[axis];
          double acc = 0.0;
          for (int d = -radius; d <= radius; ++d) {
            const int q = center + d;
            if (q < 0 || q >= dims[axis])
              continue;
            c[axis] = q;
            acc += kernel[d + radius] * a[s.bin_index(c[0], c[1], c[2])];
          }
          tmp[s.bin_index(i, j, k)] = acc;
        }
    a.swap(tmp);
  }
  return Volume3{s, std::move(a)};
}

ActiveDomain threshold_domain(const Volume3 &values, const ActiveDomain &domain,
                              double threshold) {
  if (!(domain.shape() == values.shape))
    throw InvalidArgument("threshold: domain and volume resolutions differ");
  ActiveDomain out = domain;
  for (std::size_t b = 0; b < values.data.size(); ++b)
    if (out.is_active(b) && !(values.data[b] >= threshold))
      out.deactivate(b);
  if (out.empty())
    throw EmptyDomain("domain reduction removed every bin");
  return out;
}

ActiveDomain soft_domain_reduction(const VoxelField &field, const ActiveDomain &domain,
                                   const ReconstructionConfig &cfg, FalloffMode mode) {
  if (!(domain.shape() == field.shape))
    throw InvalidArgument("domain and field resolutions differ");
  const Volume3 blurred =
      blur_active(bin_albedo(field, mode), domain, cfg.blur_sigma_bins, cfg.blur_kernel_radius);
  double peak = 0.0;
  for (std::size_t b = 0; b < blurred.data.size(); ++b)
    if (domain.is_active(b))
      peak = std::max(peak, blurred.data[b]);
  if (!(peak > 0.0)) {
    // Nothing carries albedo: the reduced set {rho > eps} is empty.
    throw EmptyDomain("domain reduction removed every bin (no positive albedo left)");
  }
  return threshold_domain(blurred, domain, cfg.reduction_threshold_frac * peak);
}

std::pair<VoxelField, ActiveDomain> expand_grid(const VoxelField &field, const ActiveDomain &domain,
                                                const GridShape &nr) {
  const GridShape &cr = field.shape;
  if (!(domain.shape() == cr))
    throw InvalidArgument("domain and field resolutions differ");
  if (nr.nx < cr.nx || nr.ny < cr.ny || nr.nz < cr.nz || nr.nx % cr.nx || nr.ny % cr.ny ||
      nr.nz % cr.nz)
    throw InvalidArgument("new resolution must be an integer multiple of the current one");
  const int fx = nr.nx / cr.nx;
  const int fy = nr.ny / cr.ny;
  const int fz = nr.nz / cr.nz;

  VoxelField fine(field.box, nr, 0.0, Vec3{});
  // Coarse cell index and fractional offset for a fine vertex index along one axis.
  const auto locate = [](int fine_idx, int factor, int coarse_n) {
    int c = fine_idx / factor;
    double t = double(fine_idx % factor) / factor;
    if (c >= coarse_n) {
      c = coarse_n - 1;
      t = 1.0;
    }
    return std::pair<int, double>{c, t};
  };
  for (int I = 0; I <= nr.nx; ++I) {
    const auto [ci, ti] = locate(I, fx, cr.nx);
    for (int J = 0; J <= nr.ny; ++J) {
      const auto [cj, tj] = locate(J, fy, cr.ny);
      for (int K = 0; K <= nr.nz; ++K) {
        const auto [ck, tk] = locate(K, fz, cr.nz);
        double r = 0.0;
        Vec3 n;
        for (int c = 0; c < 8; ++c) {
          const int di = (c >> 2) & 1, dj = (c >> 1) & 1, dk = c & 1;
          const double w =
              (di ? ti : 1.0 - ti) * (dj ? tj : 1.0 - tj) * (dk ? tk : 1.0 - tk);
          if (w == 0.0)
            continue;
          const std::size_t v = cr.vertex_index(ci + di, cj + dj, ck + dk);
          r += w * field.rho[v];
          n += field.normal[v] * w;
        }
        const std::size_t fv = nr.vertex_index(I, J, K);
        fine.rho[fv] = r;
        fine.normal[fv] = n;
      }
    }
  }

  std::vector<std::uint8_t> mask(nr.bin_count(), 0);
  for (int I = 0; I < nr.nx; ++I)
    for (int J = 0; J < nr.ny; ++J)
      for (int K = 0; K < nr.nz; ++K)
        mask[nr.bin_index(I, J, K)] = domain.is_active(cr.bin_index(I / fx, J / fy, K / fz));
  return {std::move(fine), ActiveDomain::from_mask(nr, std::move(mask))};
}

std::pair<TransientVolume, ScanGeometry> downsample_transients(const TransientVolume &tv,
                                                               const ScanGeometry &g, int stride) {
  if (tv.pairs != g.pair_count())
    throw InvalidArgument("transient volume does not match the scan geometry");
  const auto [gx, gy] = scan_grid_shape(g);
  if (stride < 1 || gx % stride || gy % stride)
    throw InvalidArgument("stride must divide the scan grid dimensions");
  const auto kept = subsample_scan_indices(g, stride);
  ScanGeometry sub = subsample_geometry(g, stride);

  std::vector<std::size_t> rows;
  if (g.pairing == Pairing::paired) {
    rows = kept;
  } else {
    const std::size_t S = g.scan_points.size();
    for (std::size_t li = 0; li < g.laser_points.size(); ++li)
      for (auto si : kept)
        rows.push_back(li * S + si);
  }
  TransientVolume out(rows.size(), tv.binning);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = tv.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return {std::move(out), std::move(sub)};
}

ReconstructionConfig cap_resolution(ReconstructionConfig cfg, int max_per_axis) {
  std::size_t keep = 0;
  while (keep < cfg.resolution_ladder.size()) {
    const GridShape &r = cfg.resolution_ladder[keep];
    if (r.nx > max_per_axis || r.ny > max_per_axis || r.nz > max_per_axis)
      break;
    ++keep;
  }
  if (keep == 0)
    throw InvalidArgument("no resolution level fits within the cap");
  cfg.resolution_ladder.resize(keep);
  cfg.expansion_steps.resize(keep - 1);
  return cfg;
}

Vec3 initial_normal(const BoundingBox &bbox, const ScanGeometry &g) {
  const Point3 center = bbox.origin + bbox.extent * 0.5;
  Vec3 d = g.wall_centroid() - center;
  const double len = norm(d);
  if (len == 0.0)
    throw DegenerateGeometry("hidden volume is centered on the relay wall centroid");
  return d * (1.0 / len);
}

namespace {

struct DataLevel {
  int until_step; // inclusive; INT_MAX for the full data
  TransientVolume data;
  ScanGeometry geometry;
};

} // namespace

ReconstructionResult reconstruct(const TransientVolume &measured, const ScanGeometry &g,
                                 const BoundingBox &bbox, const ReconstructionConfig &cfg,
                                 const ProgressSink &sink, int threads) {
  cfg.validate();
  g.validate();
  measured.validate();
  bbox.validate();
  if (measured.pairs != g.pair_count())
    throw InvalidArgument("measured transients do not match the scan geometry");

  std::vector<DataLevel> data_levels;
  {
    auto stages = cfg.transient_coarse_to_fine;
    std::sort(stages.begin(), stages.end(),
              [](const TransientStage &a, const TransientStage &b) {
                return a.until_step < b.until_step;
              });
    for (const auto &st : stages) {
      auto [tv, sub] = downsample_transients(measured, g, st.stride);
      data_levels.push_back({st.until_step, std::move(tv), std::move(sub)});
    }
    data_levels.push_back({std::numeric_limits<int>::max(), measured, g});
  }

  ReconstructionResult res;
  res.field = VoxelField(bbox, cfg.resolution_ladder.front(), cfg.initial_albedo,
                         initial_normal(bbox, g));
  res.domain = ActiveDomain(res.field.shape, true);
  OptimizerState state;
  state.reset(res.field.rho.size());
  auto live = res.domain.live_vertices();
  std::size_t level = 0;
  std::size_t next_expansion = 0;
  const FalloffMode mode = g.falloff_mode;

  using clock = std::chrono::steady_clock;
  for (int step = 1; step <= cfg.steps_total; ++step) {
    const auto t0 = clock::now();
    const DataLevel *dl = &data_levels.back();
    for (const auto &cand : data_levels)
      if (step <= cand.until_step) {
        dl = &cand;
        break;
      }

    TraceRecord rec;
    rec.step = step;
    rec.active_ratio = res.domain.active_ratio();
    rec.active_bins = res.domain.active_count();
    rec.level = int(level);

    const SampleBatch batch = stratified_sample(res.field, res.domain, cfg.seed, std::uint64_t(step));
    const std::vector<PointSample> points = interpolate(res.field, batch);
    const double cell_volume = res.field.bin_volume();
    TransientVolume residual =
        synthesize(points, dl->geometry, cell_volume, dl->data.binning, threads);
    rec.loss = loss(residual, dl->data);
    if (!std::isfinite(rec.loss)) {
      rec.iter_seconds = std::chrono::duration<double>(clock::now() - t0).count();
      res.trace.push_back(rec);
      if (sink)
        sink(rec);
      throw ReconstructionAborted(ReconstructionAborted::Reason::non_finite_loss,
                                  "loss became non-finite at step " + std::to_string(step),
                                  std::move(res));
    }
    for (std::size_t i = 0; i < residual.data.size(); ++i)
      residual.data[i] = 2.0 * (residual.data[i] - dl->data.data[i]);
    const auto point_grads = adjoint(residual, points, dl->geometry, cell_volume, threads);
    const VertexGradients vertex_grads = scatter_gradients(batch, point_grads, res.field.shape);
    adam_step(res.field, vertex_grads, state, cfg, &live);

    bool aborted = false;
    std::string why;
    if (step % cfg.reduction_period == 0) {
      try {
        res.domain = soft_domain_reduction(res.field, res.domain, cfg, mode);
        live = res.domain.live_vertices();
      } catch (const EmptyDomain &e) {
        aborted = true;
        why = std::string(e.what()) + " at step " + std::to_string(step);
      }
    }
    if (!aborted && next_expansion < cfg.expansion_steps.size() &&
        step == cfg.expansion_steps[next_expansion]) {
      ++next_expansion;
      ++level;
      auto [fine, fine_domain] = expand_grid(res.field, res.domain, cfg.resolution_ladder[level]);
      res.field = std::move(fine);
      res.domain = std::move(fine_domain);
      state.reset(res.field.rho.size());
      live = res.domain.live_vertices();
    }

    rec.iter_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    res.trace.push_back(rec);
    if (sink)
      sink(rec);
    if (aborted)
      throw ReconstructionAborted(ReconstructionAborted::Reason::empty_domain, why,
                                  std::move(res));
  }
  return res;
}

} // namespace nlos
