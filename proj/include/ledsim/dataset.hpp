#pragma once

// Paired pattern / high-beam datasets: generation, JSON manifest, subsets and
// verification.

#include "ledsim/image_io.hpp"
#include "ledsim/pattern.hpp"
#include "ledsim/render.hpp"
#include "ledsim/scene.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ledsim {

inline constexpr int kManifestVersion = 1;
inline constexpr int kMapCount = 5;

/// Maps 0-2 train, 3 val, 4 test.
std::string split_for_map(int map_id);

struct DatasetEntry {
  std::string id;
  std::string image_path;   ///< relative to the manifest directory
  std::string depth_path;
  std::string normal_path;
  std::string illumination;  ///< led, hb, hl or vl
  double cell_deg{0.5};
  std::uint64_t seed{0};
  int map_id{0};
  std::string split;
  int width{0};
  int height{0};

  bool operator==(const DatasetEntry&) const = default;
};

struct DatasetManifest {
  int version{kManifestVersion};
  std::string rig_hash;
  std::vector<DatasetEntry> entries;
  nlohmann::json generator;  ///< parameters the dataset was generated with

  std::map<std::string, std::int64_t> counts() const;
  bool operator==(const DatasetManifest& o) const;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

nlohmann::json to_json(const SceneConfig& c);
/// Unspecified keys keep their defaults; unknown keys are rejected.
SceneConfig scene_config_from_json(const nlohmann::json& j);

struct GenerationConfig {
  int count{10};
  std::uint64_t seed{0};
  std::vector<PatternKind> kinds{PatternKind::checkerboard, PatternKind::high_beam};
  double cell_deg{0.5};
  /// Projector grid resolution multiplier; finer cells than the native pitch
  /// (0.25 or 0.125 deg) need 2 or 4.
  int grid_factor{1};
  int image_size{320};
  /// Render at 1920x1080, then center-crop 640 and resize to image_size.
  bool full_resolution{false};
  double max_depth{kDefaultMaxDepth};  ///< farther ground truth is stored invalid
  DepthFormat depth_format{DepthFormat::pfm};
  SceneConfig scene;
  ShadingParams shading;
  PhotometryParams photometry;
  unsigned threads{0};

  void validate() const;
};

std::string frame_id(int index);

/// Renders `count` scenes under every requested illumination into `out_dir`
/// and writes manifest.json last. On failure, files created by this call are
/// removed before the error propagates.
DatasetManifest materialize_dataset(const std::filesystem::path& out_dir,
                                    const GenerationConfig& config);

struct SubsetSpec {
  std::optional<double> fraction;  ///< of training ids
  std::map<std::string, double> ratio;  ///< illumination -> share of training ids
};

/// Parses "led=0.1,hb=0.9".
std::map<std::string, double> parse_ratio(const std::string& text);

/// Deterministic training-split subsample; val and test are kept whole.
/// `fraction` keeps round(fraction * n) training ids with all their entries;
/// `ratio` keeps one entry per training id with illuminations allotted by
/// largest remainder.
DatasetManifest subset_manifest(const DatasetManifest& manifest, const SubsetSpec& spec,
                                std::uint64_t seed);

/// Problems found: missing or unreadable files, dimension mismatches, depth
/// files not shared within an id. Empty when the manifest is sound.
std::vector<std::string> verify_manifest(const DatasetManifest& manifest,
                                         const std::filesystem::path& root);

}  // namespace ledsim
