#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "nlos/evaluate.hpp"
#include "nlos/optimizer.hpp"
#include "nlos/simulator.hpp"
#include "nlos/types.hpp"

namespace nlos {

// On-disk transients: <stem>.json sidecar next to <stem>.raw, a little-endian float32
// array in C order [P][T].
struct TransientBundle {
  TransientVolume volume;
  ScanGeometry geometry;
};

inline constexpr int kBundleVersion = 1;

std::filesystem::path raw_path_for(const std::filesystem::path &sidecar);

void write_bundle(const std::filesystem::path &sidecar, const TransientVolume &volume,
                  const ScanGeometry &geometry);
TransientBundle read_bundle(const std::filesystem::path &sidecar);

nlohmann::json geometry_to_json(const ScanGeometry &g);
ScanGeometry geometry_from_json(const nlohmann::json &j);

// {"kind": "plane_patch" | "sphere_cap" | "two_planes" | "letter_grid", "params": {...}}
SceneSpec scene_from_json(const nlohmann::json &j);

// Every field optional; missing ones keep ReconstructionConfig defaults.
ReconstructionConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const ReconstructionConfig &cfg);

// Scalar bin volume: <stem>.raw float32 [nx][ny][nz] plus <stem>.json sidecar with shape,
// origin, extent and any extra metadata.
void write_volume(const std::filesystem::path &sidecar, const Volume3 &vol, const BoundingBox &box,
                  const nlohmann::json &extra = nlohmann::json::object());
struct StoredVolume {
  Volume3 volume;
  BoundingBox box;
};
StoredVolume read_volume(const std::filesystem::path &sidecar);

void write_depth_map(const std::filesystem::path &path, const DepthMap &d);
DepthMap read_depth_map(const std::filesystem::path &path);

nlohmann::json read_json_file(const std::filesystem::path &path);
void write_json_file(const std::filesystem::path &path, const nlohmann::json &j);

} // namespace nlos
