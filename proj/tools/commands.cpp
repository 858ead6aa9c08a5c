#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "nlos/export.hpp"
#include "nlos/geometry.hpp"
#include "nlos/io.hpp"
#include "nlos/parallel.hpp"

namespace nlos::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string &s, std::size_t expected, const char *what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw InvalidArgument(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.size() != expected)
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(expected) +
                          " comma-separated values");
  return out;
}

BoundingBox parse_bbox(const std::string &s) {
  const auto v = parse_list(s, 6, "--bbox");
  BoundingBox b{{v[0], v[1], v[2]}, {v[3] - v[0], v[4] - v[1], v[5] - v[2]}};
  b.validate();
  return b;
}

struct SimulateOptions {
  std::string scene;
  std::string out;
  std::string geometry = "confocal";
  double wall_size = 1.0;
  int wall_points = 16;
  std::string laser = "0,0,0";
  double sag_deg = 15.0;
  std::string falloff = "lambertian";
  double bin_length = 0.003;
  double path_offset = 0.0;
  int bins = 1024;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
  std::string truth_depth;
  std::string bbox;
  int depth_res = 32;
  int threads = 0;
};

struct ReconstructOptions {
  std::string bundle;
  std::string bbox;
  std::string config;
  std::string out_prefix;
  std::string trace;
  int threads = 0;
  bool no_timing = false;
  double depth_threshold = 0.05;
  double cloud_threshold = 0.05;
  std::string image_format = "pgm";
  int max_resolution = 0;
};

struct EvaluateOptions {
  std::string pred;
  std::string truth;
  double threshold = 0.05;
  bool upsample = false;
};

struct BenchOptions {
  std::string bundle;
  std::string bbox;
  std::string config;
  std::string out;
  int threads = 0;
  int max_resolution = 0;
};

ReconstructionConfig load_config(const std::string &path, int max_resolution) {
  ReconstructionConfig cfg =
      path.empty() ? ReconstructionConfig{} : config_from_json(read_json_file(path));
  if (max_resolution > 0)
    cfg = cap_resolution(std::move(cfg), max_resolution);
  cfg.validate();
  return cfg;
}

int cmd_simulate(const SimulateOptions &o) {
  std::vector<Surfel> surfels;
  try {
    surfels = make_scene(scene_from_json(read_json_file(o.scene)));
  } catch (const std::exception &e) {
    std::cerr << "simulate: malformed scene: " << e.what() << '\n';
    return kBadInput;
  }
  ScanGeometry g;
  if (o.geometry == "confocal")
    g = make_planar_confocal_geometry(o.wall_size, o.wall_size, o.wall_points, o.wall_points, 0.0);
  else if (o.geometry == "single-laser") {
    const auto l = parse_list(o.laser, 3, "--laser");
    g = make_planar_single_laser_geometry({l[0], l[1], l[2]}, o.wall_size, o.wall_size,
                                          o.wall_points, o.wall_points, 0.0);
  } else if (o.geometry == "cylinder")
    g = make_cylindrical_confocal_geometry(o.wall_size, o.wall_size, o.wall_points, o.wall_points,
                                           o.sag_deg);
  else
    throw InvalidArgument("unknown --geometry '" + o.geometry + "'");
  g.falloff_mode = falloff_mode_from_string(o.falloff);

  const TimeBinning binning{o.bin_length, o.path_offset, o.bins};
  std::optional<NoiseModel> noise;
  if (o.noise_scale > 0.0)
    noise = NoiseModel{o.noise_scale, o.seed};
  RenderOptions ro;
  ro.threads = o.threads;
  const TransientVolume tv = render(surfels, g, binning, noise, ro);
  write_bundle(o.out, tv, g);

  if (!o.truth_depth.empty()) {
    if (o.bbox.empty())
      throw InvalidArgument("--truth-depth needs --bbox");
    write_depth_map(o.truth_depth,
                    surfel_depth_map(surfels, parse_bbox(o.bbox), o.depth_res, o.depth_res));
  }
  const double energy = std::accumulate(tv.data.begin(), tv.data.end(), 0.0);
  std::printf("pairs %zu bins %d surfels %zu total_energy %.9g\n", tv.pairs, tv.binning.bins,
              surfels.size(), energy);
  return kOk;
}

void write_outputs(const std::string &prefix, const ReconstructionResult &r, const ScanGeometry &g,
                   const ReconstructOptions &o, const ReconstructionConfig &cfg, int threads,
                   const std::string &trace_path) {
  const FalloffMode mode = g.falloff_mode;
  const Volume3 albedo = masked_bin_albedo(r.field, r.domain, mode);
  json meta = {{"kind", "effective_albedo"},
               {"falloff_mode", to_string(mode)},
               {"threads", threads},
               {"active_bins", r.domain.active_count()},
               {"config", config_to_json(cfg)}};
  write_volume(prefix + "_albedo.json", albedo, r.field.box, meta);
  Volume3 mask{r.domain.shape(), std::vector<double>(r.domain.size())};
  for (std::size_t b = 0; b < mask.data.size(); ++b)
    mask.data[b] = r.domain.is_active(b) ? 1.0 : 0.0;
  write_volume(prefix + "_domain.json", mask, r.field.box, {{"kind", "active_domain"}});

  const ImageFormat fmt = o.image_format == "png" ? ImageFormat::png : ImageFormat::pgm;
  const std::string ext = o.image_format == "png" ? ".png" : ".pgm";
  write_image(max_intensity_projection(albedo), prefix + "_mip" + ext, fmt);
  const auto z = bin_center_z(r.field);
  const DepthMap depth = depth_from_argmax(albedo, z, o.depth_threshold);
  write_depth_map(prefix + "_depth.json", depth);
  write_image(depth_to_image(depth), prefix + "_depth" + ext, fmt);
  write_ply(export_point_cloud(r.field, r.domain, mode, g.wall_centroid(), o.cloud_threshold),
            prefix + "_cloud.ply");
  write_csv(r.trace, trace_path, !o.no_timing);
}

int cmd_reconstruct(const ReconstructOptions &o) {
  const TransientBundle b = read_bundle(o.bundle);
  const BoundingBox box = parse_bbox(o.bbox);
  const ReconstructionConfig cfg = load_config(o.config, o.max_resolution);
  if (o.image_format != "pgm" && o.image_format != "png")
    throw InvalidArgument("--image-format must be pgm or png");
  const int threads = resolve_threads(o.threads);
  const std::string trace = o.trace.empty() ? o.out_prefix + "_trace.csv" : o.trace;
  try {
    const ReconstructionResult r = reconstruct(b.volume, b.geometry, box, cfg, {}, threads);
    write_outputs(o.out_prefix, r, b.geometry, o, cfg, threads, trace);
    const auto &last = r.trace.back();
    std::printf("steps %zu final_loss %.9g active_ratio %.6f\n", r.trace.size(), last.loss,
                r.domain.active_ratio());
    return kOk;
  } catch (const ReconstructionAborted &e) {
    std::cerr << "reconstruct: aborted: " << e.what() << '\n';
    write_outputs(o.out_prefix + ".aborted", e.last_state(), b.geometry, o, cfg, threads,
                  trace + ".aborted");
    return e.reason() == ReconstructionAborted::Reason::empty_domain ? kEmptyDomain : kNonFinite;
  }
}

int cmd_evaluate(const EvaluateOptions &o) {
  const json pj = read_json_file(o.pred);
  DepthMap pred;
  if (pj.contains("values_m")) {
    pred = read_depth_map(o.pred);
  } else {
    const StoredVolume v = read_volume(o.pred);
    std::vector<double> z(v.volume.shape.nz);
    const double dz = v.box.extent.z / v.volume.shape.nz;
    for (int k = 0; k < v.volume.shape.nz; ++k)
      z[k] = v.box.origin.z + (k + 0.5) * dz;
    pred = depth_from_argmax(v.volume, z, o.threshold);
  }
  const DepthMap truth = read_depth_map(o.truth);
  try {
    const DepthMetrics m = depth_metrics(pred, truth, o.upsample);
    const json out = {{"mae", m.mae}, {"rmse", m.rmse}, {"valid_pixel_fraction", m.valid_fraction}};
    std::cout << out.dump() << '\n';
    return kOk;
  } catch (const NoOverlap &e) {
    std::cerr << "evaluate: " << e.what() << '\n';
    return kNoOverlap;
  }
}

double mean_seconds(const std::vector<TraceRecord> &t, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i)
    s += t[i].iter_seconds;
  return end > begin ? s / double(end - begin) : 0.0;
}

int cmd_bench(const BenchOptions &o) {
  const TransientBundle b = read_bundle(o.bundle);
  const BoundingBox box = parse_bbox(o.bbox);
  const ReconstructionConfig cfg = load_config(o.config, o.max_resolution);
  const int threads = resolve_threads(o.threads);
  ReconstructionResult r;
  int code = kOk;
  try {
    r = reconstruct(b.volume, b.geometry, box, cfg, {}, threads);
  } catch (const ReconstructionAborted &e) {
    std::cerr << "bench: aborted: " << e.what() << '\n';
    r = e.last_state();
    code = e.reason() == ReconstructionAborted::Reason::empty_domain ? kEmptyDomain : kNonFinite;
  }
  const auto &t = r.trace;
  // The first reduction_period steps all run on the full domain; average a few of them.
  const std::size_t head = std::min<std::size_t>({10, t.size(), std::size_t(cfg.reduction_period)});
  const std::size_t tail = std::min<std::size_t>(10, t.size());
  const double initial = mean_seconds(t, 0, head);
  const double final_s = mean_seconds(t, t.size() - tail, t.size());
  json steps = json::array();
  for (const auto &rec : t)
    steps.push_back({{"step", rec.step},
                     {"loss", rec.loss},
                     {"active_ratio", rec.active_ratio},
                     {"iter_seconds", rec.iter_seconds}});
  const double total = mean_seconds(t, 0, t.size()) * double(t.size());
  const json report = {{"threads", threads},
                       {"steps", steps},
                       {"total_seconds", total},
                       {"initial_iter_s", initial},
                       {"final_iter_s", final_s},
                       {"speedup", final_s > 0.0 ? initial / final_s : 0.0},
                       {"final_active_ratio", r.domain.active_ratio()}};
  if (!o.out.empty())
    write_json_file(o.out, report);
  json summary = report;
  summary.erase("steps");
  std::cout << summary.dump() << '\n';
  return code;
}

} // namespace

int run(int argc, char **argv) {
  CLI::App app{"Non-line-of-sight reconstruction by transient decomposition"};
  app.require_subcommand(1);

  SimulateOptions so;
  auto *sim = app.add_subcommand("simulate", "Render a synthetic scene into a transient bundle");
  sim->add_option("--scene", so.scene, "Scene JSON")->required();
  sim->add_option("--out", so.out, "Output bundle sidecar (.json)")->required();
  sim->add_option("--geometry", so.geometry, "confocal | single-laser | cylinder");
  sim->add_option("--wall-size", so.wall_size, "Relay wall side length (m)");
  sim->add_option("--wall-points", so.wall_points, "Scan points per wall axis");
  sim->add_option("--laser", so.laser, "Laser point x,y,z for single-laser geometry");
  sim->add_option("--sag-deg", so.sag_deg, "Half arc angle of the cylindrical wall");
  sim->add_option("--falloff", so.falloff, "lambertian | retroreflective | none");
  sim->add_option("--bin-length", so.bin_length, "Optical path length per time bin (m)");
  sim->add_option("--path-offset", so.path_offset, "Optical path length at bin 0 (m)");
  sim->add_option("--bins", so.bins, "Number of time bins");
  sim->add_option("--noise-scale", so.noise_scale, "Photon scale for Poisson noise (0 = off)");
  sim->add_option("--seed", so.seed, "Noise seed");
  sim->add_option("--truth-depth", so.truth_depth, "Also write the ground-truth depth map JSON");
  sim->add_option("--bbox", so.bbox, "x0,y0,z0,x1,y1,z1 for the truth depth map");
  sim->add_option("--depth-res", so.depth_res, "Truth depth map resolution per axis");
  sim->add_option("--threads", so.threads, "Worker threads (0 = hardware)");

  ReconstructOptions ro;
  auto *rec = app.add_subcommand("reconstruct", "Reconstruct albedo and normals from a bundle");
  rec->add_option("--bundle", ro.bundle, "Input bundle sidecar (.json)")->required();
  rec->add_option("--bbox", ro.bbox, "Hidden volume x0,y0,z0,x1,y1,z1 (m)")->required();
  rec->add_option("--config", ro.config, "Reconstruction config JSON");
  rec->add_option("--out-prefix", ro.out_prefix, "Output path prefix")->required();
  rec->add_option("--trace", ro.trace, "Trace CSV path (default <prefix>_trace.csv)");
  rec->add_option("--threads", ro.threads, "Worker threads (0 = hardware)");
  rec->add_flag("--no-timing", ro.no_timing, "Write 0 in the iter_seconds column");
  rec->add_option("--depth-threshold", ro.depth_threshold, "Depth map threshold fraction");
  rec->add_option("--cloud-threshold", ro.cloud_threshold, "Point cloud threshold fraction");
  rec->add_option("--image-format", ro.image_format, "pgm | png");
  rec->add_option("--max-resolution", ro.max_resolution,
                  "Stop the resolution ladder at this many bins per axis (0 = full ladder)");

  EvaluateOptions eo;
  auto *ev = app.add_subcommand("evaluate", "Depth MAE/RMSE against a ground-truth depth map");
  ev->add_option("--pred", eo.pred, "Predicted albedo volume or depth map (.json)")->required();
  ev->add_option("--truth", eo.truth, "Ground-truth depth map (.json)")->required();
  ev->add_option("--threshold", eo.threshold, "Depth threshold fraction for volumes");
  ev->add_flag("--upsample", eo.upsample, "Bilinearly upsample pred to the truth resolution");

  BenchOptions bo;
  auto *bench = app.add_subcommand("bench", "Per-iteration timing and active ratio report");
  bench->add_option("--bundle", bo.bundle, "Input bundle sidecar (.json)")->required();
  bench->add_option("--bbox", bo.bbox, "Hidden volume x0,y0,z0,x1,y1,z1 (m)")->required();
  bench->add_option("--config", bo.config, "Reconstruction config JSON");
  bench->add_option("--out", bo.out, "Full report JSON path");
  bench->add_option("--threads", bo.threads, "Worker threads (0 = hardware)");
  bench->add_option("--max-resolution", bo.max_resolution,
                    "Stop the resolution ladder at this many bins per axis (0 = full ladder)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*sim)
      return cmd_simulate(so);
    if (*rec)
      return cmd_reconstruct(ro);
    if (*ev)
      return cmd_evaluate(eo);
    if (*bench)
      return cmd_bench(bo);
  } catch (const InvalidArgument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const NoOverlap &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNoOverlap;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

} // namespace nlos::cli
