#include "doctest.h"

#include <numeric>
#include <random>

#include "nlos/geometry.hpp"
#include "nlos/types.hpp"

using namespace nlos;

TEST_SUITE("types") {

TEST_CASE("enum names round trip") {
  for (auto m : {FalloffMode::lambertian, FalloffMode::retroreflective, FalloffMode::none})
    CHECK(falloff_mode_from_string(to_string(m)) == m);
  for (auto p : {Pairing::cartesian, Pairing::paired})
    CHECK(pairing_from_string(to_string(p)) == p);
  CHECK_THROWS_AS(falloff_mode_from_string("phong"), InvalidArgument);
  CHECK_THROWS_AS(pairing_from_string("diagonal"), InvalidArgument);
}

TEST_CASE("pair indexing") {
  ScanGeometry g;
  g.laser_points = {{0, 0, 0}, {1, 0, 0}};
  g.scan_points = {{0, 1, 0}, {0, 2, 0}, {0, 3, 0}};
  CHECK(g.pair_count() == 6);
  CHECK(g.laser_of(4) == Point3{1, 0, 0});
  CHECK(g.scan_of(4) == Point3{0, 2, 0});
  g.validate();

  g.pairing = Pairing::paired;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  g.scan_points.pop_back();
  g.validate();
  CHECK(g.pair_count() == 2);
  CHECK(g.scan_of(1) == Point3{0, 2, 0});
}

TEST_CASE("confocal geometry requires coincident points") {
  ScanGeometry g = make_planar_confocal_geometry(1.0, 1.0, 3, 3, 0.0);
  g.validate();
  for (std::size_t i = 0; i < g.laser_points.size(); ++i)
    CHECK(g.laser_points[i] == g.scan_points[i]);
  g.scan_points[4].x += 1e-9;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
}

TEST_CASE("geometry rejects empty and non-finite points") {
  ScanGeometry g;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  g.laser_points = {{0, 0, std::nan("")}};
  g.scan_points = {{0, 0, 0}};
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
}

TEST_CASE("transient volume validation") {
  TransientVolume tv(2, {0.003, 0.0, 4});
  CHECK(tv.data.size() == 8);
  tv.validate();
  tv.at(1, 3) = 2.0;
  CHECK(tv.row(1)[3] == 2.0);
  tv.data[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(tv.validate(), InvalidArgument);
  CHECK_THROWS_AS(TransientVolume(2, {0.0, 0.0, 4}).validate(), InvalidArgument);
  CHECK_THROWS_AS(TransientVolume(2, {0.003, 0.0, 0}).validate(), InvalidArgument);
}

TEST_CASE("grid indexing is C order with z fastest") {
  const GridShape s{3, 4, 5};
  CHECK(s.bin_count() == 60);
  CHECK(s.vertex_count() == 4 * 5 * 6);
  CHECK(s.bin_index(0, 0, 1) == 1);
  CHECK(s.bin_index(0, 1, 0) == 5);
  CHECK(s.bin_index(1, 0, 0) == 20);
  for (std::size_t b = 0; b < s.bin_count(); ++b) {
    const auto [i, j, k] = s.bin_coords(b);
    CHECK(s.bin_index(i, j, k) == b);
  }
}

TEST_CASE("voxel field geometry") {
  const VoxelField f({{0, 0, 0}, {2, 4, 8}}, {2, 2, 2}, 0.5, {0, 0, -1});
  CHECK(f.bin_volume() == doctest::Approx(8.0));
  CHECK(f.vertex_position(2, 2, 2) == Point3{2, 4, 8});
  CHECK(f.bin_center(f.shape.bin_index(1, 0, 1)) == Point3{1.5, 1, 6});
  const auto v = f.bin_vertices(f.shape.bin_index(1, 1, 0));
  // bit 2 = di, bit 1 = dj, bit 0 = dk
  CHECK(v[0] == f.shape.vertex_index(1, 1, 0));
  CHECK(v[1] == f.shape.vertex_index(1, 1, 1));
  CHECK(v[2] == f.shape.vertex_index(1, 2, 0));
  CHECK(v[4] == f.shape.vertex_index(2, 1, 0));
  CHECK(v[7] == f.shape.vertex_index(2, 2, 1));
  f.validate();

  VoxelField bad = f;
  bad.rho[3] = -0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(VoxelField({{0, 0, 0}, {1, 0, 1}}, {1, 1, 1}, 0.5, {}).validate(), InvalidArgument);
}

TEST_CASE("active domain keeps its cached count") {
  const GridShape s{3, 3, 3};
  ActiveDomain d(s);
  CHECK(d.active_count() == 27);
  CHECK(d.active_ratio() == 1.0);
  std::mt19937_64 rng(5);
  for (int n = 0; n < 40; ++n) {
    d.deactivate(rng() % 27);
    const auto &m = d.mask();
    CHECK(std::size_t(std::count(m.begin(), m.end(), 1)) == d.active_count());
  }
  d.deactivate(0);
  d.deactivate(0);
  CHECK(std::size_t(std::count(d.mask().begin(), d.mask().end(), 1)) == d.active_count());
  CHECK(d.active_bins().size() == d.active_count());
}

TEST_CASE("live vertices touch an active bin") {
  const GridShape s{2, 2, 2};
  std::vector<std::uint8_t> mask(8, 0);
  mask[s.bin_index(0, 0, 0)] = 1;
  const auto d = ActiveDomain::from_mask(s, mask);
  CHECK(d.active_count() == 1);
  const auto live = d.live_vertices();
  CHECK(std::accumulate(live.begin(), live.end(), 0) == 8);
  CHECK(live[s.vertex_index(1, 1, 1)] == 1);
  CHECK(live[s.vertex_index(2, 2, 2)] == 0);
  CHECK_THROWS_AS(ActiveDomain::from_mask(s, std::vector<std::uint8_t>(7, 1)), InvalidArgument);
}

TEST_CASE("bounding box validation") {
  BoundingBox{{0, 0, 0}, {1, 1, 1}}.validate();
  CHECK_THROWS_AS((BoundingBox{{0, 0, 0}, {1, -1, 1}}.validate()), InvalidArgument);
}

} // TEST_SUITE
