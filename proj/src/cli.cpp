#include "ledsim/cli.hpp"

#include "ledsim/dataset.hpp"
#include "ledsim/image_io.hpp"
#include "ledsim/losses.hpp"
#include "ledsim/metrics.hpp"
#include "ledsim/render.hpp"
#include "ledsim/shadow_map.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ledsim {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) items.push_back(item);
  return items;
}

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  for (const auto& item : split_list(text)) {
    try {
      edges.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ContractError("bin edge '" + item + "' is not a number");
    }
  }
  return edges;
}

DepthFormat parse_depth_format(const std::string& name) {
  if (name == "pfm") return DepthFormat::pfm;
  if (name == "png16") return DepthFormat::png16;
  throw ContractError("unknown depth format '" + name + "'");
}

void print_report(std::ostream& out, const EvaluationReport& r) {
  const auto row = [&](const std::string& label, const MetricsReport& m) {
    out << std::left << std::setw(14) << label << std::right << std::fixed << std::setprecision(4)
        << std::setw(9) << m.rmse << std::setw(9) << m.abs_rel << std::setw(9) << m.log10
        << std::setw(9) << m.rmse_log << std::setw(9) << m.silog << std::setw(9) << m.sq_rel
        << std::setw(8) << m.delta1 << std::setw(8) << m.delta2 << std::setw(8) << m.delta3
        << std::setw(12) << m.n_pixels << '\n';
  };
  out << "mask " << r.mask << ", " << r.reduction << " over " << r.frames << " frames\n";
  out << std::left << std::setw(14) << "" << std::right << std::setw(9) << "rmse" << std::setw(9)
      << "abs_rel" << std::setw(9) << "log10" << std::setw(9) << "rmse_log" << std::setw(9)
      << "silog" << std::setw(9) << "sq_rel" << std::setw(8) << "d1" << std::setw(8) << "d2"
      << std::setw(8) << "d3" << std::setw(12) << "pixels" << '\n';
  row("all", r.overall);
  for (const auto& b : r.bins) {
    std::ostringstream label;
    label << "[" << b.lo << ", " << b.hi << ")";
    if (b.metrics) row(label.str(), *b.metrics);
    else out << std::left << std::setw(14) << label.str() << "  (empty)\n" << std::right;
  }
  out.unsetf(std::ios::floatfield);
}

// Wide fronto-parallel wall at camera depth z, nothing else.
Scene wall_scene(double z, const Rig& rig) {
  const double camera_z = rig.world_from_camera.translation.z();
  Scene s;
  s.primitives.push_back({Wall{{-1000.0, camera_z + z}, {1000.0, camera_z + z}, -100.0, 100.0}, 0.5, "wall"});
  return s;
}

// Horizontal concatenation with a dark 4 px gutter.
ImageD side_by_side(const std::vector<ImageD>& images) {
  const int gutter = 4;
  Eigen::Index h = 0, w = 0;
  for (const auto& im : images) h = std::max(h, im.rows()), w += im.cols();
  w += gutter * Eigen::Index(images.size() > 0 ? images.size() - 1 : 0);
  ImageD out = ImageD::Zero(h, w);
  Eigen::Index x = 0;
  for (const auto& im : images) {
    out.block(0, x, im.rows(), im.cols()) = im;
    x += im.cols() + gutter;
  }
  return out;
}

Camera camera_for(int width, int height) {
  if (width == height) return default_camera(width);
  const Camera full = full_resolution_camera();
  if (width == full.width && height == full.height) return full;
  throw ContractError("depth maps must be square or " + std::to_string(full.width) + "x" +
                      std::to_string(full.height));
}

struct GradcheckInstance {
  ImageD pred, gt;
  Mask valid;
};

GradcheckInstance random_instance(std::uint64_t seed, std::size_t index, int size) {
  Rng rng(stream_seed(seed, index, "gradcheck"));
  GradcheckInstance in{ImageD(size, size), ImageD(size, size), Mask(size, size)};
  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      in.gt(v, u) = std::exp(rng.uniform(std::log(2.0), std::log(80.0)));
      in.pred(v, u) = in.gt(v, u) * std::exp(0.3 * rng.normal());
      in.valid(v, u) = rng.uniform() < 0.9;
    }
  }
  in.valid(0, 0) = true;
  return in;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string out_dir;
  int count{10};
  std::uint64_t seed{0};
  std::string kinds{"led,hb"};
  double cell{0.5};
  int grid_factor{1};
  int size{320};
  bool full_res{false};
  std::string scene_config;
  std::string depth_format{"pfm"};
  double max_depth{kDefaultMaxDepth};
};

int run_generate(const GenerateArgs& a, bool as_json, std::ostream& out) {
  GenerationConfig c;
  c.count = a.count;
  c.seed = a.seed;
  c.kinds.clear();
  for (const auto& k : split_list(a.kinds)) c.kinds.push_back(parse_illumination(k));
  c.cell_deg = a.cell;
  c.grid_factor = a.grid_factor;
  c.image_size = a.size;
  c.full_resolution = a.full_res;
  c.depth_format = parse_depth_format(a.depth_format);
  c.max_depth = a.max_depth;
  if (!a.scene_config.empty()) {
    std::ifstream in(a.scene_config);
    if (!in) throw IoError("cannot open scene config '" + a.scene_config + "'");
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw FormatError("scene config is not valid JSON: " + std::string(e.what()));
    }
    c.scene = scene_config_from_json(j);
  }
  const DatasetManifest m = materialize_dataset(a.out_dir, c);
  const auto counts = m.counts();
  if (as_json) {
    out << json{{"manifest", (fs::path(a.out_dir) / "manifest.json").string()},
                {"entries", m.entries.size()},
                {"counts", counts},
                {"rig", m.rig_hash}}
               .dump(2)
        << '\n';
  } else {
    out << "wrote " << m.entries.size() << " entries to " << a.out_dir << " (train "
        << counts.at("train") << ", val " << counts.at("val") << ", test " << counts.at("test")
        << ")\n";
  }
  return kExitOk;
}

struct ProjectArgs {
  std::string depth;
  std::vector<double> walls;
  double cell{0.5};
  std::string pattern{"led"};
  std::string out{"projection.png"};
  int size{320};
  bool sharp{false};
};

int run_project(const ProjectArgs& a, bool as_json, std::ostream& out) {
  if (a.depth.empty() == a.walls.empty())
    throw ContractError("project: give either --depth or one or more --wall distances");
  const PatternKind kind = parse_illumination(a.pattern);
  const PhotometryParams params = a.sharp ? PhotometryParams::identity() : PhotometryParams{};
  std::vector<ImageD> panels;
  json report = json::array();

  if (!a.depth.empty()) {
    const DepthMap depth = read_depth(a.depth);
    Rig rig = default_rig(depth.width());
    rig.camera = camera_for(depth.width(), depth.height());
    const Photometry ph = apply_photometry(make_pattern(kind, a.cell, rig.projector), params);
    const ShadowMap shadow = render_shadow_map(depth, rig.camera, rig.projector, {});
    const NormalMap normals = normals_from_depth(depth, rig.camera);
    const ImageD albedo = ImageD::Constant(depth.height(), depth.width(), 0.5);
    const RenderedFrame frame =
        shade(depth, normals, albedo, Lighting{}, rig, ph, shadow, ShadingParams{},
              FrameMeta{0, illumination_code(kind), a.cell, 0.0, rig.hash()});
    panels.push_back(frame.image);
    report.push_back({{"depth", a.depth}, {"width", depth.width()}, {"height", depth.height()}});
  } else {
    const Rig rig = default_rig(a.size);
    const Photometry ph = apply_photometry(make_pattern(kind, a.cell, rig.projector), params);
    for (double z : a.walls) {
      if (!(z > 0)) throw ContractError("project: wall distances must be positive");
      const RenderedFrame frame = render_frame(wall_scene(z, rig), rig, ph);
      panels.push_back(frame.image);
      json item{{"wall_m", z}, {"expected_cell_m", 2.0 * z * std::tan(deg2rad(a.cell / 2))}};
      if (kind == PatternKind::checkerboard) {
        try {
          item["measured_cell_m"] = measure_cell_size(frame, rig.camera);
        } catch (const MeasurementError&) {
          item["measured_cell_m"] = nullptr;
        }
      }
      report.push_back(item);
    }
  }
  write_gray_png(a.out, side_by_side(panels));
  if (as_json) {
    out << json{{"out", a.out}, {"pattern", illumination_code(kind)}, {"cell_deg", a.cell}, {"panels", report}}
               .dump(2)
        << '\n';
  } else {
    out << "wrote " << a.out << '\n';
    for (const auto& p : report) {
      if (!p.contains("wall_m")) continue;
      out << "wall " << p["wall_m"].get<double>() << " m: cell "
          << p["expected_cell_m"].get<double>() << " m expected";
      if (p.contains("measured_cell_m") && !p["measured_cell_m"].is_null())
        out << ", " << p["measured_cell_m"].get<double>() << " m measured";
      out << '\n';
    }
  }
  return kExitOk;
}

struct EvalArgs {
  std::string manifest;
  std::string pred_dir;
  std::string split{"test"};
  std::string illumination;
  std::string mask{"roi"};
  bool bins{false};
  std::string bin_edges;
  std::string mode{"pool"};
  bool verify{false};
  double max_depth{kDefaultMaxDepth};
};

int run_eval(const EvalArgs& a, bool as_json, std::ostream& out, std::ostream& err) {
  const fs::path manifest_path(a.manifest);
  const fs::path root = manifest_path.parent_path();
  const DatasetManifest m = load_manifest(manifest_path);
  if (a.verify) {
    const auto problems = verify_manifest(m, root);
    for (const auto& p : problems) err << "verify: " << p << '\n';
    if (!problems.empty()) throw FormatError("manifest verification failed");
  }
  if (a.split != "train" && a.split != "val" && a.split != "test" && a.split != "all")
    throw ContractError("unknown split '" + a.split + "'");
  const std::string illum =
      a.illumination.empty() ? "" : illumination_code(parse_illumination(a.illumination));
  const MaskKind mask = parse_mask_kind(a.mask);
  const Reduction reduction = a.mode == "pool"                                 ? Reduction::pool
                              : a.mode == "frame" || a.mode == "frame_mean" ? Reduction::frame_mean
                                  : throw ContractError("unknown mode '" + a.mode + "'");
  if (!(a.max_depth > 0)) throw ContractError("max depth must be positive");
  std::vector<double> edges;
  if (!a.bin_edges.empty()) edges = parse_edges(a.bin_edges);
  else if (a.bins) edges = default_bin_edges();

  std::vector<const DatasetEntry*> entries;
  for (const auto& e : m.entries)
    if ((a.split == "all" || e.split == a.split) && (illum.empty() || e.illumination == illum))
      entries.push_back(&e);
  if (entries.empty()) throw ContractError("no manifest entries match the split/illumination filter");

  const fs::path pred_dir(a.pred_dir);
  auto pred_path = [&](const DatasetEntry& e) {
    fs::path p = pred_dir / (e.id + "_" + e.illumination + ".pfm");
    if (fs::exists(p)) return p;
    p = pred_dir / (e.id + ".pfm");
    if (fs::exists(p)) return p;
    throw IoError("no prediction for " + e.id + " (" + e.illumination + ") in '" + a.pred_dir + "'");
  };
  for (const auto* e : entries) pred_path(*e);  // fail before any work

  const EvaluationReport report = evaluate_frames(
      entries.size(),
      [&](std::size_t i) {
        const DatasetEntry& e = *entries[i];
        DepthMap gt = read_depth(root / e.depth_path);
        gt.valid = gt.valid && gt.values <= a.max_depth;
        DepthMap pred = read_depth(pred_path(e));
        if (pred.width() != gt.width() || pred.height() != gt.height())
          throw FormatError("prediction for " + e.id + " is " + std::to_string(pred.width()) + "x" +
                            std::to_string(pred.height()) + ", ground truth " +
                            std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
        return LoadedFrame{clip_depth(pred, a.max_depth), gt};
      },
      mask, edges, reduction);

  if (as_json) {
    json j = to_json(report);
    j["split"] = a.split;
    if (!illum.empty()) j["illumination"] = illum;
    out << j.dump(2) << '\n';
  } else {
    print_report(out, report);
  }
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed{0};
  int instances{50};
  int size{16};
  double h{1e-4};
  double tol{1e-4};
  std::string pred;
  std::string gt;
};

int run_gradcheck(const GradcheckArgs& a, bool as_json, std::ostream& out) {
  if (a.instances < 1 || a.size < 2) throw ContractError("gradcheck: need instances >= 1 and size >= 2");
  if (a.pred.empty() != a.gt.empty()) throw ContractError("gradcheck: --pred and --gt go together");
  const auto configs = ablation_configs();
  json rows = json::array();
  double worst = 0;

  if (!a.pred.empty()) {
    const DepthMap pred = read_depth(a.pred), gt = read_depth(a.gt);
    if (pred.width() != gt.width() || pred.height() != gt.height())
      throw ContractError("gradcheck: prediction and ground truth differ in size");
    const Mask valid = pred.valid && gt.valid;
    const ImageD p = valid.select(pred.values, 1.0), g = valid.select(gt.values, 1.0);
    for (const auto& cfg : configs) {
      const LossValue v = loss_total(p, g, valid, cfg);
      const GradcheckResult r = gradcheck(p, g, valid, cfg, a.h);
      worst = std::max(worst, r.max_rel_error);
      rows.push_back({{"config", cfg.describe()}, {"loss", v.total}, {"depth_term", v.depth_term},
                      {"grad_term", v.grad_term}, {"normal_term", v.normal_term},
                      {"max_rel_error", r.max_rel_error}, {"tested", r.tested}, {"excluded", r.excluded}});
    }
  } else {
    std::vector<GradcheckInstance> instances;
    for (int k = 0; k < a.instances; ++k) instances.push_back(random_instance(a.seed, std::size_t(k), a.size));
    std::vector<GradcheckResult> results(configs.size() * instances.size());
    parallel_for(results.size(), [&](std::size_t idx) {
      const auto& in = instances[idx % instances.size()];
      results[idx] = gradcheck(in.pred, in.gt, in.valid, configs[idx / instances.size()], a.h);
    });
    for (std::size_t c = 0; c < configs.size(); ++c) {
      GradcheckResult agg;
      for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto& r = results[c * instances.size() + k];
        agg.max_rel_error = std::max(agg.max_rel_error, r.max_rel_error);
        agg.tested += r.tested;
        agg.excluded += r.excluded;
      }
      worst = std::max(worst, agg.max_rel_error);
      rows.push_back({{"config", configs[c].describe()}, {"max_rel_error", agg.max_rel_error},
                      {"tested", agg.tested}, {"excluded", agg.excluded}});
    }
  }

  const bool ok = worst < a.tol;
  if (as_json) {
    out << json{{"configs", rows}, {"max_rel_error", worst}, {"tolerance", a.tol}, {"ok", ok}}.dump(2)
        << '\n';
  } else {
    for (const auto& r : rows)
      out << std::left << std::setw(40) << r["config"].get<std::string>() << std::right
          << std::scientific << std::setprecision(3) << r["max_rel_error"].get<double>() << "  ("
          << r["tested"].get<int>() << " tested, " << r["excluded"].get<int>() << " excluded)\n";
    out << "max discrepancy " << std::scientific << std::setprecision(3) << worst
        << (ok ? " < " : " >= ") << a.tol << '\n';
    out.unsetf(std::ios::floatfield);
  }
  return ok ? kExitOk : kExitCheckFailed;
}

struct SubsetArgs {
  std::string manifest;
  std::string out;
  std::optional<double> fraction;
  std::string ratio;
  std::uint64_t seed{0};
};

int run_subset(const SubsetArgs& a, bool as_json, std::ostream& out) {
  const fs::path in_path(a.manifest), out_path(a.out);
  DatasetManifest m = load_manifest(in_path);
  SubsetSpec spec;
  spec.fraction = a.fraction;
  if (!a.ratio.empty()) spec.ratio = parse_ratio(a.ratio);
  DatasetManifest sub = subset_manifest(m, spec, a.seed);

  // Paths stay valid when the subset is written elsewhere.
  const fs::path from = fs::absolute(in_path).parent_path();
  const fs::path to = fs::absolute(out_path).parent_path();
  if (fs::weakly_canonical(from) != fs::weakly_canonical(to)) {
    auto rebase = [&](std::string& p) {
      if (!p.empty()) p = fs::relative(from / p, to).generic_string();
    };
    for (auto& e : sub.entries) rebase(e.image_path), rebase(e.depth_path), rebase(e.normal_path);
  }
  save_manifest(out_path, sub);
  std::map<std::string, int> by_illum;
  for (const auto& e : sub.entries)
    if (e.split == "train") ++by_illum[e.illumination];
  if (as_json) {
    out << json{{"out", a.out}, {"counts", sub.counts()}, {"train_by_illumination", by_illum}}.dump(2)
        << '\n';
  } else {
    out << "wrote " << a.out << ": " << sub.entries.size() << " entries, train";
    for (const auto& [k, n] : by_illum) out << ' ' << k << '=' << n;
    out << '\n';
  }
  return kExitOk;
}

struct PatternArgs {
  std::string kind{"led"};
  double cell{0.5};
  int grid_factor{1};
  std::string out_dir{"."};
  int scale{4};
  std::string phase{"even"};
};

int run_pattern(const PatternArgs& a, bool as_json, std::ostream& out) {
  const PatternKind kind = parse_pattern_kind(a.kind);
  const Phase phase = a.phase == "even"  ? Phase::even_on
                      : a.phase == "odd" ? Phase::odd_on
                                         : throw ContractError("phase is 'even' or 'odd'");
  if (a.grid_factor < 1) throw ContractError("grid factor must be positive");
  ProjectorModel proj;
  proj.cols *= a.grid_factor;
  proj.rows *= a.grid_factor;
  const Pattern pattern = make_pattern(kind, a.cell, proj, phase);
  const Photometry ph = apply_photometry(pattern);
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + a.out_dir + "'");
  const std::string code = illumination_code(kind);
  const fs::path control = dir / ("control_" + code + ".png");
  const fs::path photometry = dir / ("photometry_" + code + ".png");
  write_control_png(control, pattern, a.scale);
  const ImageD realized = photometry_image(ph, 1056, 224);
  write_gray_png(photometry, realized);
  const double duty = pattern.control.mean();
  if (as_json) {
    out << json{{"control", control.string()},
                {"photometry", photometry.string()},
                {"pattern", code},
                {"cell_deg", a.cell},
                {"duty_cycle", duty},
                {"mean_intensity", realized.mean()}}
               .dump(2)
        << '\n';
  } else {
    out << "wrote " << control.string() << " and " << photometry.string() << " (duty cycle " << duty
        << ")\n";
  }
  return kExitOk;
}

}  // namespace

int cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headlight pattern depth dataset generator and evaluator", "ledgen"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable JSON on stdout");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Render a paired dataset with manifest");
  g->add_option("--out", gen.out_dir, "Output directory")->required();
  g->add_option("--count", gen.count, "Number of scenes");
  g->add_option("--seed", gen.seed, "Global seed");
  g->add_option("--kinds", gen.kinds, "Illuminations, comma separated: led,hb,hl,vl");
  g->add_option("--cell", gen.cell, "Checkerboard cell, degrees");
  g->add_option("--grid-factor", gen.grid_factor, "Projector grid multiplier (2 for 0.25, 4 for 0.125 deg cells)");
  g->add_option("--size", gen.size, "Output image side");
  g->add_flag("--full-res", gen.full_res, "Render 1920x1080, center-crop 640 and resize");
  g->add_option("--scene-config", gen.scene_config, "Scene config JSON");
  g->add_option("--depth-format", gen.depth_format, "pfm or png16");
  g->add_option("--max-depth", gen.max_depth, "Ground truth beyond this is stored invalid");

  ProjectArgs proj;
  auto* p = app.add_subcommand("project", "Shade a depth map or test walls under a pattern");
  p->add_option("--depth", proj.depth, "Depth map (.pfm or .png)");
  p->add_option("--wall", proj.walls, "Fronto-parallel wall distance, repeatable");
  p->add_option("--cell", proj.cell, "Cell size, degrees");
  p->add_option("--pattern", proj.pattern, "led, hb, hl or vl");
  p->add_option("--out", proj.out, "Output PNG");
  p->add_option("--size", proj.size, "Image side for walls");
  p->add_flag("--sharp", proj.sharp, "Skip blur and vignetting");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate predictions against a manifest");
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--pred-dir", ev.pred_dir, "Directory of <id>_<illumination>.pfm or <id>.pfm")->required();
  e->add_option("--split", ev.split, "train, val, test or all");
  e->add_option("--illumination", ev.illumination, "Only entries with this illumination");
  e->add_option("--mask", ev.mask, "roi, outside or full");
  e->add_flag("--bins", ev.bins, "Per-distance bins of 10 m up to 100 m");
  e->add_option("--bin-edges", ev.bin_edges, "Custom bin edges, comma separated");
  e->add_option("--mode", ev.mode, "pool or frame");
  e->add_flag("--verify", ev.verify, "Check manifest integrity first");
  e->add_option("--max-depth", ev.max_depth, "Clip predictions and ignore farther ground truth");

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradients");
  c->add_option("--seed", gc.seed);
  c->add_option("--instances", gc.instances);
  c->add_option("--size", gc.size);
  c->add_option("--step", gc.h, "Finite-difference step");
  c->add_option("--tol", gc.tol, "Maximum relative discrepancy");
  c->add_option("--pred", gc.pred, "Check on a given prediction instead of random instances");
  c->add_option("--gt", gc.gt);

  SubsetArgs sb;
  auto* s = app.add_subcommand("subset", "Subsample the training split of a manifest");
  s->add_option("--manifest", sb.manifest)->required();
  s->add_option("--out", sb.out)->required();
  s->add_option("--fraction", sb.fraction, "Share of training ids kept");
  s->add_option("--ratio", sb.ratio, "Illumination mix, e.g. led=0.1,hb=0.9");
  s->add_option("--seed", sb.seed);

  PatternArgs pa;
  auto* t = app.add_subcommand("pattern", "Export control matrix and photometry images");
  t->add_option("--kind", pa.kind, "led, hb, hl or vl");
  t->add_option("--cell", pa.cell);
  t->add_option("--grid-factor", pa.grid_factor, "Projector grid multiplier");
  t->add_option("--out-dir", pa.out_dir);
  t->add_option("--scale", pa.scale, "Output pixels per headlight pixel");
  t->add_option("--phase", pa.phase, "even or odd");

  for (auto* sub : {g, p, e, c, s, t}) sub->add_flag("--json", as_json, "Machine-readable JSON on stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "ledgen: " << ex.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*g) return run_generate(gen, as_json, out);
    if (*p) return run_project(proj, as_json, out);
    if (*e) return run_eval(ev, as_json, out, err);
    if (*c) return run_gradcheck(gc, as_json, out);
    if (*s) return run_subset(sb, as_json, out);
    if (*t) return run_pattern(pa, as_json, out);
  } catch (const IoError& ex) {
    err << "ledgen: " << ex.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& ex) {
    err << "ledgen: " << ex.what() << '\n';
    return kExitIo;
  } catch (const ContractError& ex) {
    err << "ledgen: " << ex.what() << '\n';
    return kExitContract;
  } catch (const DomainError& ex) {
    err << "ledgen: " << ex.what() << '\n';
    return kExitContract;
  }
  return kExitUsage;
}

}  // namespace ledsim
