#include "doctest.h"

#include <cmath>
#include <random>

#include "../support.hpp"
#include "nlos/evaluate.hpp"
#include "nlos/optimizer.hpp"

using namespace nlos;
using namespace nlos::test;

namespace {

VertexGradients zero_grads(const VoxelField &f) {
  return {std::vector<double>(f.rho.size(), 0.0), std::vector<Vec3>(f.rho.size())};
}

ReconstructionConfig small_config(int steps) {
  ReconstructionConfig cfg;
  cfg.steps_total = steps;
  cfg.resolution_ladder = {{8, 8, 8}};
  cfg.expansion_steps = {};
  return cfg;
}

} // namespace

TEST_SUITE("optimizer") {

TEST_CASE("loss examples") {
  TransientVolume a(2, {0.01, 0.0, 4}), b(2, {0.01, 0.0, 4});
  for (std::size_t i = 0; i < a.data.size(); ++i)
    a.data[i] = b.data[i] = 0.1 * double(i);
  CHECK(loss(a, b) == 0.0);
  b.data[1] += 1.0;
  b.data[6] -= 1.0;
  CHECK(loss(a, b) == doctest::Approx(2.0));
  CHECK(loss(a, b) == loss(b, a));
  CHECK_THROWS_AS(loss(a, TransientVolume(3, {0.01, 0.0, 4})), InvalidArgument);
}

TEST_CASE("adam with zero gradient is a fixed point") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2}, 0.5, {0, 0, -1});
  const VoxelField before = f;
  OptimizerState st;
  adam_step(f, zero_grads(f), st, ReconstructionConfig{});
  CHECK(st.step == 1);
  CHECK(f.rho == before.rho);
  CHECK(f.normal == before.normal);
}

TEST_CASE("first adam step moves by the learning rate against the gradient sign") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {1, 1, 1}, 0.5, {0, 0, -1});
  auto g = zero_grads(f);
  g.rho[0] = 3.0;
  g.rho[1] = -1e-3;
  g.normal[2] = {2.0, -5.0, 0.0};
  OptimizerState st;
  ReconstructionConfig cfg;
  adam_step(f, g, st, cfg);
  // Closed form of the first step: m_hat = g, v_hat = g^2, update = lr g / (|g| + eps).
  CHECK(f.rho[0] == doctest::Approx(0.5 - 0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
  CHECK(f.rho[1] == doctest::Approx(0.5 + 0.1 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));
  CHECK(f.normal[2].x == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(f.normal[2].y == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(f.normal[2].z == -1.0);
}

TEST_CASE("adam projects albedo onto the non-negative half-line") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {1, 1, 1}, 0.05, {0, 0, -1});
  auto g = zero_grads(f);
  g.rho.assign(g.rho.size(), 1.0);
  OptimizerState st;
  adam_step(f, g, st, ReconstructionConfig{});
  for (double r : f.rho)
    CHECK(r == 0.0);
}

TEST_CASE("adam with zero learning rate is a no-op") {
  std::mt19937_64 rng(1);
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2}, 0.0, {});
  auto g = zero_grads(f);
  for (std::size_t v = 0; v < f.rho.size(); ++v) {
    f.rho[v] = uniform(rng, 0, 1);
    f.normal[v] = random_unit(rng);
    g.rho[v] = uniform(rng, -1, 1);
    g.normal[v] = random_unit(rng);
  }
  const VoxelField before = f;
  ReconstructionConfig cfg;
  cfg.learning_rate = 0.0;
  OptimizerState st;
  for (int i = 0; i < 3; ++i)
    adam_step(f, g, st, cfg);
  CHECK(f.rho == before.rho);
  CHECK(f.normal == before.normal);
}

TEST_CASE("adam leaves dead vertices alone") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {1, 1, 1}, 0.5, {0, 0, -1});
  auto g = zero_grads(f);
  g.rho.assign(g.rho.size(), 1.0);
  std::vector<std::uint8_t> live(f.rho.size(), 0);
  live[3] = 1;
  OptimizerState st;
  adam_step(f, g, st, ReconstructionConfig{}, &live);
  CHECK(f.rho[0] == 0.5);
  CHECK(f.rho[3] < 0.5);
}

TEST_CASE("uniform albedo prunes nothing") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {4, 4, 4}, 0.7, {0, 0, -1});
  const auto d = soft_domain_reduction(f, ActiveDomain(f.shape), ReconstructionConfig{});
  CHECK(d.active_count() == 64);
}

TEST_CASE("soft reduction around a single bright bin") {
  const GridShape s{7, 7, 7};
  Volume3 v{s, std::vector<double>(s.bin_count(), 0.0)};
  v.at(3, 3, 3) = 1.0;
  const ActiveDomain full(s);
  const Volume3 blurred = blur_active(v, full, 1.0, 1);
  // Separable normalized kernel: ratios to the center are e^{-1/2} per unit offset.
  CHECK(blurred.at(4, 3, 3) / blurred.at(3, 3, 3) == doctest::Approx(std::exp(-0.5)));
  CHECK(blurred.at(4, 4, 3) / blurred.at(3, 3, 3) == doctest::Approx(std::exp(-1.0)));
  CHECK(blurred.at(4, 4, 4) / blurred.at(3, 3, 3) == doctest::Approx(std::exp(-1.5)));
  const double k1 = std::exp(-0.5);
  CHECK(blurred.at(3, 3, 3) == doctest::Approx(std::pow(1.0 / (1.0 + 2.0 * k1), 3)));

  double peak = 0.0;
  for (double x : blurred.data)
    peak = std::max(peak, x);
  const auto d = threshold_domain(blurred, full, 0.02 * peak);
  CHECK(d.active_count() == 27);
  for (std::size_t b = 0; b < s.bin_count(); ++b) {
    const auto [i, j, k] = s.bin_coords(b);
    const int cheb = std::max({std::abs(i - 3), std::abs(j - 3), std::abs(k - 3)});
    CHECK(d.is_active(b) == (cheb <= 1));
  }
}

TEST_CASE("threshold close to one keeps the argmax") {
  std::mt19937_64 rng(2);
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {4, 4, 4}, 0.0, {0, 0, -1});
  for (auto &r : f.rho)
    r = uniform(rng, 0, 1);
  ReconstructionConfig cfg;
  cfg.reduction_threshold_frac = 1.0 - 1e-12;
  const auto d = soft_domain_reduction(f, ActiveDomain(f.shape), cfg);
  CHECK(d.active_count() == 1);
}

TEST_CASE("inactive bins do not feed the blur and never come back") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {4, 4, 4}, 1.0, {0, 0, -1});
  ActiveDomain d(f.shape);
  d.deactivate(0);
  const auto out = soft_domain_reduction(f, d, ReconstructionConfig{});
  CHECK_FALSE(out.is_active(0));
  CHECK(out.active_count() <= d.active_count());
}

TEST_CASE("reduction of an all-zero field empties the domain") {
  VoxelField f({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2}, 0.0, {0, 0, -1});
  CHECK_THROWS_AS(soft_domain_reduction(f, ActiveDomain(f.shape), ReconstructionConfig{}),
                  EmptyDomain);
}

TEST_CASE("expand_grid") {
  VoxelField c({{0, 0, 0}, {1, 1, 2}}, {2, 2, 2}, 0.3, {0.1, 0.2, -1});
  auto [fc, dc] = expand_grid(c, ActiveDomain(c.shape), {4, 4, 4});
  for (std::size_t v = 0; v < fc.rho.size(); ++v) {
    CHECK(fc.rho[v] == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(fc.normal[v].y == doctest::Approx(0.2).epsilon(1e-14));
  }
  CHECK(dc.active_count() == 64);

  // A ramp in z survives subdivision exactly.
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j)
      for (int k = 0; k <= 2; ++k)
        c.rho[c.shape.vertex_index(i, j, k)] = 0.25 + 1.5 * c.vertex_position(i, j, k).z;
  std::vector<std::uint8_t> mask(8, 0);
  mask[c.shape.bin_index(1, 0, 1)] = 1;
  auto [fine, fd] = expand_grid(c, ActiveDomain::from_mask(c.shape, mask), {4, 4, 4});
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 4; ++k)
        CHECK(std::abs(fine.rho[fine.shape.vertex_index(i, j, k)] -
                       (0.25 + 1.5 * fine.vertex_position(i, j, k).z)) <= 1e-12);
  CHECK(fd.active_count() == 8);
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk)
        CHECK(fd.is_active(fine.shape.bin_index(2 + di, dj, 2 + dk)));

  CHECK_THROWS_AS(expand_grid(c, ActiveDomain(c.shape), {3, 4, 4}), InvalidArgument);
}

TEST_CASE("expansion preserves interpolated values") {
  std::mt19937_64 rng(3);
  VoxelField c({{-0.3, 0, 0.2}, {0.6, 0.5, 0.4}}, {3, 2, 2}, 0.0, {});
  for (std::size_t v = 0; v < c.rho.size(); ++v) {
    c.rho[v] = uniform(rng, 0, 1);
    c.normal[v] = random_unit(rng);
  }
  auto [fine, fd] = expand_grid(c, ActiveDomain(c.shape), {6, 4, 8});
  // Points sampled in the coarse grid evaluate identically in the fine grid.
  const auto coarse_batch = stratified_sample(c, ActiveDomain(c.shape), 4);
  const auto coarse_vals = interpolate(c, coarse_batch);
  const Vec3 fs = fine.bin_size();
  for (std::size_t n = 0; n < coarse_batch.size(); ++n) {
    const Point3 p = coarse_batch[n].position;
    const double gx = (p.x - fine.box.origin.x) / fs.x, gy = (p.y - fine.box.origin.y) / fs.y,
                 gz = (p.z - fine.box.origin.z) / fs.z;
    const int i = std::min(int(gx), 5), j = std::min(int(gy), 3), k = std::min(int(gz), 7);
    const SampleBatch b{make_sample(fine, fine.shape.bin_index(i, j, k), gx - i, gy - j, gz - k)};
    const auto fv = interpolate(fine, b)[0];
    CHECK(std::abs(fv.rho - coarse_vals[n].rho) <= 1e-12);
    CHECK(std::abs(fv.normal.x - coarse_vals[n].normal.x) <= 1e-12);
  }
}

TEST_CASE("downsample_transients selects rows") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 8, 8, 0.0);
  TransientVolume tv(g.pair_count(), {0.01, 0.0, 3});
  for (std::size_t i = 0; i < tv.data.size(); ++i)
    tv.data[i] = double(i);
  auto [same, sg] = downsample_transients(tv, g, 1);
  CHECK(same.data == tv.data);
  CHECK(sg == g);

  auto [half, hg] = downsample_transients(tv, g, 2);
  CHECK(half.pairs == 16);
  const auto kept = subsample_scan_indices(g, 2);
  for (std::size_t r = 0; r < kept.size(); ++r)
    for (int t = 0; t < 3; ++t)
      CHECK(half.at(r, t) == tv.at(kept[r], t));

  auto [twice, tg] = downsample_transients(half, hg, 2);
  auto [once, og] = downsample_transients(tv, g, 4);
  CHECK(twice.data == once.data);
  CHECK(tg.scan_points == og.scan_points);
  CHECK_THROWS_AS(downsample_transients(tv, g, 3), InvalidArgument);
}

TEST_CASE("config validation") {
  ReconstructionConfig cfg;
  cfg.validate();
  auto bad = cfg;
  bad.reduction_threshold_frac = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.reduction_period = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.expansion_steps = {800, 300};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.expansion_steps = {300, 2000};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.resolution_ladder = {{16, 16, 16}, {32, 16, 32}, {64, 64, 64}};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.expansion_steps = {300};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("cap_resolution trims the ladder") {
  const auto c32 = cap_resolution(ReconstructionConfig{}, 32);
  REQUIRE(c32.resolution_ladder.size() == 2);
  CHECK(c32.resolution_ladder.back() == GridShape{32, 32, 32});
  CHECK(c32.expansion_steps == std::vector<int>{300});
  c32.validate();
  CHECK(cap_resolution(ReconstructionConfig{}, 64).resolution_ladder.size() == 3);
  CHECK_THROWS_AS(cap_resolution(ReconstructionConfig{}, 8), InvalidArgument);
}

TEST_CASE("initial normal points at the wall") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 4, 4, 0.0);
  const Vec3 n = initial_normal({{-0.5, -0.5, 0.4}, {1.0, 1.0, 0.4}}, g);
  CHECK(n.x == doctest::Approx(0.0));
  CHECK(n.z == doctest::Approx(-1.0));
}

TEST_CASE("zero measurements drive the albedo to zero") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 4, 4, 0.0);
  const TransientVolume zeros(g.pair_count(), covering_binning(128));
  const BoundingBox box{{-0.3, -0.3, 0.3}, {0.6, 0.6, 0.4}};
  auto cfg = small_config(200);
  bool emptied = false;
  double last_loss = 0.0;
  try {
    const auto r = reconstruct(zeros, g, box, cfg);
    last_loss = r.trace.back().loss;
    double peak = 0.0;
    for (double x : r.field.rho)
      peak = std::max(peak, x);
    CHECK(peak < 0.05);
  } catch (const ReconstructionAborted &e) {
    emptied = e.reason() == ReconstructionAborted::Reason::empty_domain;
    last_loss = e.last_state().trace.back().loss;
  }
  CHECK((emptied || last_loss < 1e-6));
}

TEST_CASE("single surfel round trip") {
  const Point3 truth_pos{0.04, -0.06, 0.5};
  Surfel s{truth_pos, 1.0, {0, 0, -1}, 4e-4};
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 8, 8, 0.0);
  const TimeBinning b{0.003, 0.0, 512};
  const TransientVolume tau = render({s}, g, b);
  const BoundingBox box{{-0.2, -0.2, 0.4}, {0.4, 0.4, 0.2}};
  // Measurements scaled so the expected density is of order one.
  const VoxelField probe(box, {8, 8, 8}, 0.0, {});
  const double scale = probe.bin_volume() / (s.albedo * s.area);
  TransientVolume scaled = tau;
  for (auto &v : scaled.data)
    v *= scale;
  auto cfg = small_config(500);
  const auto r = reconstruct(scaled, g, box, cfg);
  const Volume3 vol = masked_bin_albedo(r.field, r.domain, g.falloff_mode);
  std::size_t best = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < vol.data.size(); ++i) {
    total += vol.data[i];
    if (vol.data[i] > vol.data[best])
      best = i;
  }
  const auto [bi, bj, bk] = vol.shape.bin_coords(best);
  const Vec3 size = r.field.bin_size();
  const int ti = int((truth_pos.x - box.origin.x) / size.x);
  const int tj = int((truth_pos.y - box.origin.y) / size.y);
  const int tk = int((truth_pos.z - box.origin.z) / size.z);
  CHECK(std::abs(bi - ti) <= 1);
  CHECK(std::abs(bj - tj) <= 1);
  CHECK(std::abs(bk - tk) <= 1);
  // The fit explains the data; the recovered mass is only loosely constrained by 64 pixels.
  CHECK(r.trace.back().loss < 0.05 * r.trace.front().loss);
  CHECK(total > 0.5);
  CHECK(total < 3.0);
}

TEST_CASE("trace bookkeeping and monotone pruning within a level") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 4, 4, 0.0);
  Surfel s{{0.0, 0.0, 0.5}, 1.0, {0, 0, -1}, 1e-3};
  const TransientVolume tau = render({s}, g, {0.003, 0.0, 512});
  ReconstructionConfig cfg;
  cfg.steps_total = 300;
  cfg.resolution_ladder = {{4, 4, 4}, {8, 8, 8}};
  cfg.expansion_steps = {150};
  const auto r = reconstruct(tau, g, {{-0.2, -0.2, 0.4}, {0.4, 0.4, 0.2}}, cfg);
  REQUIRE(r.trace.size() == 300);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].step == int(i) + 1);
    if (r.trace[i].level == r.trace[i - 1].level)
      CHECK(r.trace[i].active_ratio <= r.trace[i - 1].active_ratio);
  }
  CHECK(r.trace.back().level == 1);
  CHECK(r.field.shape == GridShape{8, 8, 8});
}

TEST_CASE("reconstruct is deterministic and independent of the worker count") {
  const auto g = make_planar_single_laser_geometry({0, 0, 0}, 1.0, 1.0, 4, 4, 0.0);
  const std::vector<Surfel> surfels{{{0.05, 0.0, 0.45}, 1.0, {0, 0, -1}, 1e-3},
                                    {{-0.05, 0.05, 0.5}, 1.0, {0, 0, -1}, 1e-3}};
  TransientVolume tau = render(surfels, g, {0.003, 0.0, 512});
  for (auto &v : tau.data)
    v *= 4.0;
  ReconstructionConfig cfg;
  cfg.steps_total = 120;
  cfg.resolution_ladder = {{4, 4, 4}, {8, 8, 8}};
  cfg.expansion_steps = {60};
  cfg.seed = 17;
  const BoundingBox box{{-0.2, -0.2, 0.35}, {0.4, 0.4, 0.2}};
  const auto a = reconstruct(tau, g, box, cfg, {}, 1);
  const auto b = reconstruct(tau, g, box, cfg, {}, 1);
  const auto c = reconstruct(tau, g, box, cfg, {}, 3);
  CHECK(a.field.rho == b.field.rho);
  CHECK(a.field.rho == c.field.rho);
  CHECK(a.field.normal == c.field.normal);
  CHECK(a.domain == c.domain);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].loss == c.trace[i].loss);
    CHECK(a.trace[i].active_ratio == c.trace[i].active_ratio);
  }
  cfg.seed = 18;
  const auto d = reconstruct(tau, g, box, cfg, {}, 1);
  CHECK(d.field.rho != a.field.rho);
}

TEST_CASE("transient coarse-to-fine stages") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 8, 8, 0.0);
  Surfel s{{0.0, 0.0, 0.5}, 1.0, {0, 0, -1}, 1e-3};
  const TransientVolume tau = render({s}, g, {0.003, 0.0, 512});
  auto cfg = small_config(60);
  cfg.transient_coarse_to_fine = {{4, 20}, {2, 40}};
  std::vector<double> losses;
  const auto r = reconstruct(tau, g, {{-0.2, -0.2, 0.4}, {0.4, 0.4, 0.2}}, cfg,
                             [&](const TraceRecord &t) { losses.push_back(t.loss); });
  CHECK(losses.size() == 60);
  CHECK(r.trace.size() == 60);
}

TEST_CASE("reconstruct input errors") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 2, 2, 0.0);
  const TransientVolume wrong(3, {0.01, 0.0, 10});
  CHECK_THROWS_AS(reconstruct(wrong, g, {{0, 0, 0.2}, {1, 1, 1}}, small_config(10)), InvalidArgument);
  TransientVolume bad(4, {0.01, 0.0, 10});
  bad.data[0] = std::nan("");
  CHECK_THROWS_AS(reconstruct(bad, g, {{0, 0, 0.2}, {1, 1, 1}}, small_config(10)), InvalidArgument);
}

TEST_CASE("non-finite loss aborts with the last state") {
  const auto g = make_planar_confocal_geometry(1.0, 1.0, 2, 2, 0.0);
  TransientVolume huge(4, covering_binning(64));
  for (auto &v : huge.data)
    v = 1e300;
  try {
    reconstruct(huge, g, {{-0.3, -0.3, 0.3}, {0.6, 0.6, 0.4}}, small_config(20));
    FAIL("expected an abort");
  } catch (const ReconstructionAborted &e) {
    CHECK(e.reason() == ReconstructionAborted::Reason::non_finite_loss);
    CHECK_FALSE(e.last_state().trace.empty());
  }
}

} // TEST_SUITE
