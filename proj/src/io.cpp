#include "nlos/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace nlos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

void write_f32(const fs::path &path, std::span<const double> values) {
  std::vector<std::uint32_t> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    buf[i] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size() * 4));
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

std::vector<double> read_f32(const fs::path &path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * 4)
    throw IoError("'" + path.string() + "' holds " + std::to_string(bytes) + " bytes, expected " +
                  std::to_string(expected * 4));
  in.seekg(0);
  std::vector<std::uint32_t> buf(expected);
  in.read(reinterpret_cast<char *>(buf.data()), std::streamsize(bytes));
  if (!in)
    throw IoError("failed reading '" + path.string() + "'");
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i)
    out[i] = std::bit_cast<float>(to_little(buf[i]));
  return out;
}

json point_to_json(const Point3 &p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from_json(const json &j) {
  if (!j.is_array() || j.size() != 3)
    throw InvalidArgument("expected a 3-element coordinate array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void check_keys(const json &j, const std::set<std::string> &allowed, const std::string &what) {
  if (!j.is_object())
    throw InvalidArgument(what + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw InvalidArgument(what + ": unknown key '" + it.key() + "'");
}

template <class T> void maybe(const json &j, const char *key, T &dst) {
  if (j.contains(key))
    dst = j.at(key).get<T>();
}

void maybe_point(const json &j, const char *key, Point3 &dst) {
  if (j.contains(key))
    dst = point_from_json(j.at(key));
}

} // namespace

json read_json_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const fs::path &path, const json &j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

fs::path raw_path_for(const fs::path &sidecar) {
  fs::path p = sidecar;
  p.replace_extension(".raw");
  return p;
}

json geometry_to_json(const ScanGeometry &g) {
  json j;
  j["confocal"] = g.confocal;
  j["pairing"] = to_string(g.pairing);
  j["falloff_mode"] = to_string(g.falloff_mode);
  json lp = json::array();
  for (const auto &p : g.laser_points)
    lp.push_back(point_to_json(p));
  json sp = json::array();
  for (const auto &p : g.scan_points)
    sp.push_back(point_to_json(p));
  j["laser_points"] = std::move(lp);
  j["scan_points"] = std::move(sp);
  if (g.grid_shape)
    j["grid_shape"] = json::array({(*g.grid_shape)[0], (*g.grid_shape)[1]});
  return j;
}

ScanGeometry geometry_from_json(const json &j) {
  check_keys(j, {"confocal", "pairing", "falloff_mode", "laser_points", "scan_points", "grid_shape"},
             "geometry");
  ScanGeometry g;
  try {
    g.confocal = j.at("confocal").get<bool>();
    g.pairing = pairing_from_string(j.at("pairing").get<std::string>());
    g.falloff_mode = falloff_mode_from_string(j.at("falloff_mode").get<std::string>());
    for (const auto &p : j.at("laser_points"))
      g.laser_points.push_back(point_from_json(p));
    for (const auto &p : j.at("scan_points"))
      g.scan_points.push_back(point_from_json(p));
    if (j.contains("grid_shape")) {
      const auto &gs = j.at("grid_shape");
      g.grid_shape = std::array<int, 2>{gs.at(0).get<int>(), gs.at(1).get<int>()};
    }
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("malformed geometry: ") + e.what());
  }
  g.validate();
  return g;
}

void write_bundle(const fs::path &sidecar, const TransientVolume &volume,
                  const ScanGeometry &geometry) {
  geometry.validate();
  volume.validate();
  if (volume.pairs != geometry.pair_count())
    throw InvalidArgument("transient volume does not match the scan geometry");
  json j;
  j["version"] = kBundleVersion;
  j["shape"] = json::array({volume.pairs, volume.binning.bins});
  j["bin_length_m"] = volume.binning.bin_length;
  j["path_offset_m"] = volume.binning.path_offset;
  j["geometry"] = geometry_to_json(geometry);
  write_f32(raw_path_for(sidecar), volume.data);
  write_json_file(sidecar, j);
}

TransientBundle read_bundle(const fs::path &sidecar) {
  const json j = read_json_file(sidecar);
  TransientBundle b;
  std::size_t pairs = 0;
  TimeBinning binning;
  try {
    if (j.at("version").get<int>() != kBundleVersion)
      throw InvalidArgument("unsupported bundle version");
    pairs = j.at("shape").at(0).get<std::size_t>();
    binning.bins = j.at("shape").at(1).get<int>();
    binning.bin_length = j.at("bin_length_m").get<double>();
    binning.path_offset = j.at("path_offset_m").get<double>();
    b.geometry = geometry_from_json(j.at("geometry"));
  } catch (const json::exception &e) {
    throw InvalidArgument("malformed bundle sidecar '" + sidecar.string() + "': " + e.what());
  }
  if (pairs != b.geometry.pair_count())
    throw InvalidArgument("bundle shape is inconsistent with its geometry pairing");
  if (binning.bins < 1)
    throw InvalidArgument("bundle must have at least one time bin");
  b.volume = TransientVolume(pairs, binning);
  b.volume.data = read_f32(raw_path_for(sidecar), pairs * std::size_t(binning.bins));
  b.volume.validate();
  return b;
}

SceneSpec scene_from_json(const json &j) {
  try {
    check_keys(j, {"kind", "params"}, "scene");
    const std::string kind = j.at("kind").get<std::string>();
    const json params = j.contains("params") ? j.at("params") : json::object();
    if (kind == "plane_patch") {
      check_keys(params, {"center", "width", "height", "count_x", "count_y", "albedo"}, kind);
      PlanePatchParams p;
      maybe_point(params, "center", p.center);
      maybe(params, "width", p.width);
      maybe(params, "height", p.height);
      maybe(params, "count_x", p.count_x);
      maybe(params, "count_y", p.count_y);
      maybe(params, "albedo", p.albedo);
      return p;
    }
    if (kind == "sphere_cap") {
      check_keys(params, {"center", "radius", "cap_angle_deg", "rings", "segments", "albedo"}, kind);
      SphereCapParams p;
      maybe_point(params, "center", p.center);
      maybe(params, "radius", p.radius);
      maybe(params, "cap_angle_deg", p.cap_angle_deg);
      maybe(params, "rings", p.rings);
      maybe(params, "segments", p.segments);
      maybe(params, "albedo", p.albedo);
      return p;
    }
    if (kind == "two_planes") {
      check_keys(params,
                 {"depth_near", "depth_far", "width", "height", "separation", "count_x", "count_y",
                  "albedo"},
                 kind);
      TwoPlanesParams p;
      maybe(params, "depth_near", p.depth_near);
      maybe(params, "depth_far", p.depth_far);
      maybe(params, "width", p.width);
      maybe(params, "height", p.height);
      maybe(params, "separation", p.separation);
      maybe(params, "count_x", p.count_x);
      maybe(params, "count_y", p.count_y);
      maybe(params, "albedo", p.albedo);
      return p;
    }
    if (kind == "letter_grid") {
      check_keys(params, {"center", "cell_size", "pattern", "samples_per_cell", "albedo"}, kind);
      LetterGridParams p;
      maybe_point(params, "center", p.center);
      maybe(params, "cell_size", p.cell_size);
      maybe(params, "pattern", p.pattern);
      maybe(params, "samples_per_cell", p.samples_per_cell);
      maybe(params, "albedo", p.albedo);
      return p;
    }
    throw InvalidArgument("unknown scene kind '" + kind + "'");
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("malformed scene: ") + e.what());
  }
}

ReconstructionConfig config_from_json(const json &j) {
  ReconstructionConfig cfg;
  try {
    check_keys(j,
               {"steps_total", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                "reduction_period", "reduction_threshold_frac", "blur_sigma_bins",
                "blur_kernel_radius", "resolution_ladder", "expansion_steps",
                "transient_coarse_to_fine", "seed", "initial_albedo"},
               "config");
    maybe(j, "steps_total", cfg.steps_total);
    maybe(j, "learning_rate", cfg.learning_rate);
    maybe(j, "adam_beta1", cfg.adam_beta1);
    maybe(j, "adam_beta2", cfg.adam_beta2);
    maybe(j, "adam_eps", cfg.adam_eps);
    maybe(j, "reduction_period", cfg.reduction_period);
    maybe(j, "reduction_threshold_frac", cfg.reduction_threshold_frac);
    maybe(j, "blur_sigma_bins", cfg.blur_sigma_bins);
    maybe(j, "blur_kernel_radius", cfg.blur_kernel_radius);
    maybe(j, "expansion_steps", cfg.expansion_steps);
    maybe(j, "seed", cfg.seed);
    maybe(j, "initial_albedo", cfg.initial_albedo);
    if (j.contains("resolution_ladder")) {
      cfg.resolution_ladder.clear();
      for (const auto &r : j.at("resolution_ladder")) {
        if (r.is_number_integer()) {
          const int n = r.get<int>();
          cfg.resolution_ladder.push_back({n, n, n});
        } else {
          cfg.resolution_ladder.push_back({r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>()});
        }
      }
    }
    if (j.contains("transient_coarse_to_fine")) {
      cfg.transient_coarse_to_fine.clear();
      for (const auto &st : j.at("transient_coarse_to_fine"))
        cfg.transient_coarse_to_fine.push_back({st.at(0).get<int>(), st.at(1).get<int>()});
    }
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ReconstructionConfig &cfg) {
  json ladder = json::array();
  for (const auto &r : cfg.resolution_ladder)
    ladder.push_back(json::array({r.nx, r.ny, r.nz}));
  json stages = json::array();
  for (const auto &st : cfg.transient_coarse_to_fine)
    stages.push_back(json::array({st.stride, st.until_step}));
  return {{"steps_total", cfg.steps_total},
          {"learning_rate", cfg.learning_rate},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_eps", cfg.adam_eps},
          {"reduction_period", cfg.reduction_period},
          {"reduction_threshold_frac", cfg.reduction_threshold_frac},
          {"blur_sigma_bins", cfg.blur_sigma_bins},
          {"blur_kernel_radius", cfg.blur_kernel_radius},
          {"resolution_ladder", ladder},
          {"expansion_steps", cfg.expansion_steps},
          {"transient_coarse_to_fine", stages},
          {"seed", cfg.seed},
          {"initial_albedo", cfg.initial_albedo}};
}

void write_volume(const fs::path &sidecar, const Volume3 &vol, const BoundingBox &box,
                  const json &extra) {
  json j = extra.is_object() ? extra : json::object();
  j["version"] = kBundleVersion;
  j["shape"] = json::array({vol.shape.nx, vol.shape.ny, vol.shape.nz});
  j["origin_m"] = point_to_json(box.origin);
  j["extent_m"] = point_to_json(box.extent);
  write_f32(raw_path_for(sidecar), vol.data);
  write_json_file(sidecar, j);
}

StoredVolume read_volume(const fs::path &sidecar) {
  const json j = read_json_file(sidecar);
  StoredVolume out;
  try {
    out.volume.shape = {j.at("shape").at(0).get<int>(), j.at("shape").at(1).get<int>(),
                        j.at("shape").at(2).get<int>()};
    out.box.origin = point_from_json(j.at("origin_m"));
    out.box.extent = point_from_json(j.at("extent_m"));
  } catch (const json::exception &e) {
    throw InvalidArgument("malformed volume sidecar '" + sidecar.string() + "': " + e.what());
  }
  out.box.validate();
  if (out.volume.shape.nx < 1 || out.volume.shape.ny < 1 || out.volume.shape.nz < 1)
    throw InvalidArgument("volume shape must be positive");
  out.volume.data = read_f32(raw_path_for(sidecar), out.volume.shape.bin_count());
  return out;
}

void write_depth_map(const fs::path &path, const DepthMap &d) {
  json values = json::array();
  json valid = json::array();
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    values.push_back(d.values[i]);
    valid.push_back(int(d.valid[i]));
  }
  write_json_file(path, {{"shape", {d.nx, d.ny}}, {"values_m", values}, {"valid", valid}});
}

DepthMap read_depth_map(const fs::path &path) {
  const json j = read_json_file(path);
  DepthMap d;
  try {
    d.nx = j.at("shape").at(0).get<int>();
    d.ny = j.at("shape").at(1).get<int>();
    d.values = j.at("values_m").get<std::vector<double>>();
    for (const auto &v : j.at("valid"))
      d.valid.push_back(v.get<int>() ? 1 : 0);
  } catch (const json::exception &e) {
    throw InvalidArgument("malformed depth map '" + path.string() + "': " + e.what());
  }
  if (d.nx < 1 || d.ny < 1 || d.values.size() != std::size_t(d.nx) * d.ny ||
      d.valid.size() != d.values.size())
    throw InvalidArgument("depth map '" + path.string() + "' has inconsistent sizes");
  return d;
}

} // namespace nlos
