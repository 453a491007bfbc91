#include "ledsim/dataset.hpp"

#include "ledsim/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>

namespace ledsim {
namespace fs = std::filesystem;
using nlohmann::json;

std::string split_for_map(int map_id) {
  if (map_id < 0) throw ContractError("map_id must be non-negative");
  switch (map_id % kMapCount) {
    case 3: return "val";
    case 4: return "test";
    default: return "train";
  }
}

std::string frame_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

// ---------------------------------------------------------------------------
// Manifest

std::map<std::string, std::int64_t> DatasetManifest::counts() const {
  std::map<std::string, std::int64_t> c{{"train", 0}, {"val", 0}, {"test", 0}};
  for (const auto& e : entries) ++c[e.split];
  return c;
}

bool DatasetManifest::operator==(const DatasetManifest& o) const {
  return version == o.version && rig_hash == o.rig_hash && entries == o.entries &&
         generator == o.generator;
}

json to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"id", e.id},
                       {"image_path", e.image_path},
                       {"depth_path", e.depth_path},
                       {"normal_path", e.normal_path},
                       {"illumination", e.illumination},
                       {"cell_deg", e.cell_deg},
                       {"seed", e.seed},
                       {"map_id", e.map_id},
                       {"split", e.split},
                       {"width", e.width},
                       {"height", e.height}});
  json j{{"version", m.version}, {"rig", m.rig_hash}, {"counts", m.counts()}, {"entries", entries}};
  if (!m.generator.is_null()) j["generator"] = m.generator;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  try {
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != kManifestVersion)
      throw FormatError("unsupported manifest version " + std::to_string(m.version));
    m.rig_hash = j.at("rig").get<std::string>();
    if (j.contains("generator")) m.generator = j.at("generator");
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : j.at("entries")) {
      DatasetEntry d;
      d.id = e.at("id").get<std::string>();
      d.image_path = e.at("image_path").get<std::string>();
      d.depth_path = e.at("depth_path").get<std::string>();
      d.normal_path = e.value("normal_path", std::string());
      d.illumination = e.at("illumination").get<std::string>();
      d.cell_deg = e.at("cell_deg").get<double>();
      d.seed = e.at("seed").get<std::uint64_t>();
      d.map_id = e.at("map_id").get<int>();
      d.split = e.at("split").get<std::string>();
      d.width = e.at("width").get<int>();
      d.height = e.at("height").get<int>();
      if (d.split != split_for_map(d.map_id))
        throw FormatError("entry " + d.id + ": split does not match its map");
      if (!seen.insert({d.id, d.illumination}).second)
        throw FormatError("duplicate entry " + d.id + "/" + d.illumination);
      m.entries.push_back(std::move(d));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

namespace {

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move manifest into place at '" + path.string() + "'");
  }
}

}  // namespace

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  write_text_atomic(path, to_json(m).dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

// ---------------------------------------------------------------------------
// Scene config

namespace {

json range_json(const IntRange& r) { return json::array({r.min, r.max}); }
json range_json(const RealRange& r) { return json::array({r.min, r.max}); }

template <typename Range>
void read_range(const json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw ContractError("scene config: ranges are [min, max] pairs");
  j[0].get_to(r.min);
  j[1].get_to(r.max);
}

json shading_json(const ShadingParams& s) {
  return {{"projector_power", s.projector_power}, {"ambient_gain", s.ambient_gain},
          {"gamma", s.gamma},                     {"exposure", s.exposure},
          {"sky_albedo", s.sky_albedo},           {"noise_sigma", s.noise_sigma}};
}

json photometry_json(const PhotometryParams& p) {
  return {{"psf_sigma0_deg", p.psf_sigma0_deg},
          {"psf_sigma_slope_deg", p.psf_sigma_slope_deg},
          {"vignette_exponent", p.vignette_exponent}};
}

}  // namespace

json to_json(const SceneConfig& c) {
  return {{"cars", range_json(c.cars)},
          {"pedestrians", range_json(c.pedestrians)},
          {"signs", range_json(c.signs)},
          {"interferers", range_json(c.interferers)},
          {"depth", range_json(c.depth)},
          {"lateral", range_json(c.lateral)},
          {"sign_offset", range_json(c.sign_offset)},
          {"albedo", range_json(c.albedo)},
          {"ambient_lux", range_json(c.ambient_lux)},
          {"interferer_power", range_json(c.interferer_power)},
          {"building_offset", range_json(c.building_offset)},
          {"building_height", range_json(c.building_height)},
          {"buildings", c.buildings}};
}

SceneConfig scene_config_from_json(const json& j) {
  if (!j.is_object()) throw ContractError("scene config must be a JSON object");
  SceneConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "cars") read_range(value, c.cars);
      else if (key == "pedestrians") read_range(value, c.pedestrians);
      else if (key == "signs") read_range(value, c.signs);
      else if (key == "interferers") read_range(value, c.interferers);
      else if (key == "depth") read_range(value, c.depth);
      else if (key == "lateral") read_range(value, c.lateral);
      else if (key == "sign_offset") read_range(value, c.sign_offset);
      else if (key == "albedo") read_range(value, c.albedo);
      else if (key == "ambient_lux") read_range(value, c.ambient_lux);
      else if (key == "interferer_power") read_range(value, c.interferer_power);
      else if (key == "building_offset") read_range(value, c.building_offset);
      else if (key == "building_height") read_range(value, c.building_height);
      else if (key == "buildings") c.buildings = value.get<bool>();
      else throw ContractError("scene config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("scene config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Generation

void GenerationConfig::validate() const {
  if (count < 1) throw ContractError("generate: count must be positive");
  if (kinds.empty()) throw ContractError("generate: at least one illumination kind is required");
  if (std::set<PatternKind>(kinds.begin(), kinds.end()).size() != kinds.size())
    throw ContractError("generate: illumination kinds repeat");
  if (image_size < 1) throw ContractError("generate: image size must be positive");
  if (grid_factor < 1) throw ContractError("generate: grid factor must be positive");
  if (full_resolution && image_size > 640)
    throw ContractError("generate: full-resolution path crops 640 px; image size must not exceed it");
  if (!(max_depth > 0)) throw ContractError("generate: max depth must be positive");
  scene.validate();
  shading.validate();
}

namespace {

// Files and directories created during generation, for rollback.
class CreatedPaths {
 public:
  void add(const fs::path& p) {
    std::lock_guard lock(mutex_);
    paths_.push_back(p);
  }
  void rollback() noexcept {
    std::lock_guard lock(mutex_);
    std::error_code ec;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove(*it, ec);
    paths_.clear();
  }
  void release() {
    std::lock_guard lock(mutex_);
    paths_.clear();
  }

 private:
  std::mutex mutex_;
  std::vector<fs::path> paths_;
};

void make_dir(const fs::path& dir, CreatedPaths& created) {
  std::error_code ec;
  if (fs::is_directory(dir, ec)) return;
  if (!fs::create_directories(dir, ec) || ec)
    throw IoError("cannot create directory '" + dir.string() + "'");
  created.add(dir);
}

json generator_json(const GenerationConfig& c) {
  json kinds = json::array();
  for (auto k : c.kinds) kinds.push_back(illumination_code(k));
  return {{"count", c.count},
          {"seed", c.seed},
          {"kinds", kinds},
          {"cell_deg", c.cell_deg},
          {"grid_factor", c.grid_factor},
          {"image_size", c.image_size},
          {"full_resolution", c.full_resolution},
          {"max_depth", c.max_depth},
          {"depth_format", c.depth_format == DepthFormat::pfm ? "pfm" : "png16"},
          {"scene", to_json(c.scene)},
          {"shading", shading_json(c.shading)},
          {"photometry", photometry_json(c.photometry)}};
}

}  // namespace

DatasetManifest materialize_dataset(const fs::path& out_dir, const GenerationConfig& config) {
  config.validate();
  Rig rig = default_rig(config.image_size);
  if (config.full_resolution) rig.camera = full_resolution_camera();
  rig.projector.cols *= config.grid_factor;
  rig.projector.rows *= config.grid_factor;
  const PreprocessSpec crop{640, config.image_size};

  std::vector<Photometry> photometries;
  for (auto kind : config.kinds)
    photometries.push_back(
        apply_photometry(make_pattern(kind, config.cell_deg, rig.projector), config.photometry));

  DatasetManifest manifest;
  manifest.rig_hash = rig.hash();
  manifest.generator = generator_json(config);
  const std::string depth_ext = config.depth_format == DepthFormat::pfm ? ".pfm" : ".png";

  CreatedPaths created;
  std::vector<std::vector<DatasetEntry>> per_frame(std::size_t(config.count));
  try {
    make_dir(out_dir, created);
    for (const char* sub : {"depth", "normals", "images"}) make_dir(out_dir / sub, created);

    parallel_for(
        per_frame.size(),
        [&](std::size_t i) {
          const int index = static_cast<int>(i);
          const std::string id = frame_id(index);
          const int map_id = index % kMapCount;
          const std::uint64_t seed = stream_seed(config.seed, i, "scene");
          const Scene scene = generate_scene(seed, config.scene, map_id);
          const SurfaceBuffer surface = raycast_depth(scene, rig.camera, rig.world_from_camera, 1);
          const ShadowMap shadow =
              render_shadow_map(scene, rig.projector, rig.world_from_camera, {4, 0.02, 1});

          DepthMap depth = config.full_resolution ? center_crop_resize(surface.depth, crop) : surface.depth;
          NormalMap normals =
              config.full_resolution ? center_crop_resize(surface.normals, crop) : surface.normals;
          for (int v = 0; v < depth.height(); ++v) {
            for (int u = 0; u < depth.width(); ++u) {
              if (depth.valid(v, u) && depth.values(v, u) > config.max_depth) {
                depth.valid(v, u) = false;
                depth.values(v, u) = kInf;
              }
              if (!depth.valid(v, u)) normals(v, u) = Vec3d::Zero();
            }
          }
          depth.max_depth = config.max_depth;

          const std::string depth_rel = "depth/" + id + depth_ext;
          const std::string normal_rel = "normals/" + id + ".pfm";
          created.add(out_dir / depth_rel);
          write_depth(out_dir / depth_rel, depth, config.depth_format);
          created.add(out_dir / normal_rel);
          write_normals(out_dir / normal_rel, normals);

          for (std::size_t k = 0; k < photometries.size(); ++k) {
            const std::string code = illumination_code(config.kinds[k]);
            const FrameMeta meta{seed, code, config.cell_deg, scene.ambient_lux, manifest.rig_hash};
            const RenderedFrame frame =
                shade(surface, scene, rig, photometries[k], shadow, config.shading, meta, 1);
            const ImageD image =
                config.full_resolution ? center_crop_resize(frame.image, crop) : frame.image;
            const std::string image_rel = "images/" + id + "_" + code + ".png";
            created.add(out_dir / image_rel);
            write_gray_png(out_dir / image_rel, image);
            per_frame[i].push_back({id, image_rel, depth_rel, normal_rel, code, config.cell_deg, seed,
                                    map_id, split_for_map(map_id), depth.width(), depth.height()});
          }
        },
        config.threads);

    for (auto& entries : per_frame)
      for (auto& e : entries) manifest.entries.push_back(std::move(e));
    save_manifest(out_dir / "manifest.json", manifest);
  } catch (...) {
    created.rollback();
    throw;
  }
  created.release();
  return manifest;
}

// ---------------------------------------------------------------------------
// Subsets

std::map<std::string, double> parse_ratio(const std::string& text) {
  std::map<std::string, double> ratio;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ContractError("ratio items are written kind=share, got '" + item + "'");
    const std::string kind = item.substr(0, eq);
    illumination_code(parse_illumination(kind));  // validates
    double share = 0;
    try {
      std::size_t used = 0;
      share = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ContractError("ratio share is not a number in '" + item + "'");
    }
    if (!ratio.emplace(illumination_code(parse_illumination(kind)), share).second)
      throw ContractError("ratio lists '" + kind + "' twice");
    pos = comma + 1;
  }
  return ratio;
}

DatasetManifest subset_manifest(const DatasetManifest& manifest, const SubsetSpec& spec,
                                std::uint64_t seed) {
  if (!spec.fraction && spec.ratio.empty())
    throw ContractError("subset: a fraction or a ratio is required");
  if (spec.fraction && !(*spec.fraction > 0 && *spec.fraction <= 1))
    throw ContractError("subset: fraction must lie in (0, 1]");

  std::vector<std::string> ids;  // training ids in manifest order
  std::map<std::string, std::set<std::string>> kinds_of;
  for (const auto& e : manifest.entries) {
    if (e.split != "train") continue;
    if (kinds_of[e.id].empty()) ids.push_back(e.id);
    kinds_of[e.id].insert(e.illumination);
  }

  Rng rng(stream_seed(seed, 0, "subset"));
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[std::size_t(rng.uniform_int(0, int(i) - 1))]);

  if (spec.fraction) {
    const auto keep = static_cast<std::size_t>(std::llround(*spec.fraction * double(ids.size())));
    if (keep == 0) throw ContractError("subset: fraction leaves no training entries");
    ids.resize(keep);
  }

  std::map<std::string, std::string> chosen;  // id -> illumination ("" = all)
  if (spec.ratio.empty()) {
    for (const auto& id : ids) chosen[id] = "";
  } else {
    double total = 0;
    for (const auto& [kind, share] : spec.ratio) {
      if (!(share >= 0)) throw ContractError("subset: ratio shares must be non-negative");
      total += share;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ContractError("subset: ratio shares must sum to 1");
    for (const auto& id : ids)
      for (const auto& [kind, share] : spec.ratio)
        if (share > 0 && !kinds_of[id].count(kind))
          throw ContractError("subset: training id " + id + " has no '" + kind + "' entry");

    // Largest-remainder allotment of ids to illuminations.
    const double n = double(ids.size());
    std::vector<std::pair<std::string, std::size_t>> quota;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (const auto& [kind, share] : spec.ratio) {
      const auto q = static_cast<std::size_t>(std::floor(share * n));
      remainders.push_back({share * n - double(q), quota.size()});
      quota.push_back({kind, q});
      assigned += q;
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < ids.size(); ++k, ++assigned) ++quota[remainders[k].second].second;

    std::size_t next = 0;
    for (const auto& [kind, q] : quota)
      for (std::size_t k = 0; k < q; ++k) chosen[ids[next++]] = kind;
  }

  DatasetManifest out = manifest;
  out.entries.clear();
  for (const auto& e : manifest.entries) {
    if (e.split != "train") {
      out.entries.push_back(e);
      continue;
    }
    const auto it = chosen.find(e.id);
    if (it != chosen.end() && (it->second.empty() || it->second == e.illumination))
      out.entries.push_back(e);
  }
  json note{{"seed", seed}};
  if (spec.fraction) note["fraction"] = *spec.fraction;
  if (!spec.ratio.empty()) note["ratio"] = spec.ratio;
  out.generator["subset"] = note;
  return out;
}

// ---------------------------------------------------------------------------
// Verification

std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const fs::path& root) {
  std::vector<std::string> problems;
  std::map<std::string, std::pair<std::string, std::string>> files_of_id;
  std::set<std::string> checked;
  auto check = [&](const std::string& rel, const DatasetEntry& e, auto&& dims) {
    if (rel.empty() || !checked.insert(rel).second) return;
    const fs::path p = root / rel;
    if (!fs::exists(p)) {
      problems.push_back(e.id + ": missing " + rel);
      return;
    }
    try {
      const auto [w, h] = dims(p);
      if (w != e.width || h != e.height)
        problems.push_back(e.id + ": " + rel + " is " + std::to_string(w) + "x" + std::to_string(h) +
                           ", manifest says " + std::to_string(e.width) + "x" + std::to_string(e.height));
    } catch (const IoError& err) {
      problems.push_back(e.id + ": " + err.what());
    }
  };
  for (const auto& e : manifest.entries) {
    check(e.image_path, e, [](const fs::path& p) {
      const Png8 img = read_png8(p);
      return std::pair{img.width, img.height};
    });
    check(e.depth_path, e, [](const fs::path& p) {
      const DepthMap d = read_depth(p);
      return std::pair{d.width(), d.height()};
    });
    check(e.normal_path, e, [](const fs::path& p) {
      const NormalMap n = read_normals(p);
      return std::pair{n.width, n.height};
    });
    const auto [it, fresh] = files_of_id.emplace(e.id, std::pair{e.depth_path, e.normal_path});
    if (!fresh && it->second != std::pair{e.depth_path, e.normal_path})
      problems.push_back(e.id + ": entries of one id reference different depth files");
  }
  return problems;
}

}  // namespace ledsim
