#include "ledsim/render.hpp"

#include <algorithm>
#include <cmath>

namespace ledsim {

std::string illumination_code(PatternKind kind) {
  switch (kind) {
    case PatternKind::checkerboard: return "led";
    case PatternKind::high_beam: return "hb";
    case PatternKind::hlines: return "hl";
    case PatternKind::vlines: return "vl";
  }
  return "?";
}

PatternKind parse_illumination(std::string_view code) { return parse_pattern_kind(code); }

void ShadingParams::validate() const {
  if (!(projector_power >= 0 && ambient_gain >= 0 && gamma > 0 && exposure > 0 &&
        sky_albedo >= 0 && noise_sigma >= 0))
    throw ContractError("shading parameters out of range");
}

Lighting scene_lighting(const Scene& scene, const PoseD& world_from_camera) {
  const PoseD camera_from_world = world_from_camera.inverse();
  Lighting l{scene.ambient_lux, {}};
  for (const auto& light : scene.interferers)
    l.interferers.push_back({camera_from_world * light.position, light.power});
  return l;
}

RenderedFrame shade(const DepthMap& depth, const NormalMap& normals, const ImageD& albedo,
                    const Lighting& lighting, const Rig& rig, const Photometry& photometry,
                    const ShadowMap& shadow, const ShadingParams& params, const FrameMeta& meta,
                    unsigned threads) {
  params.validate();
  const int W = depth.width(), H = depth.height();
  if (W != rig.camera.width || H != rig.camera.height || normals.width != W ||
      normals.height != H || albedo.cols() != W || albedo.rows() != H)
    throw ContractError("shade: depth, normals, albedo and camera dimensions differ");

  RenderedFrame frame{ImageD::Zero(H, W), ImageD::Zero(H, W), depth, meta};
  const ProjectorModel& proj = rig.projector;
  const PoseD proj_from_cam = proj.pose.inverse();
  const Vec3d proj_origin = proj.pose.translation;
  // A projector at the camera center lights everything the camera sees.
  const bool collocated = proj_origin.isZero(0.0);
  const double power = params.projector_power * proj.power;
  const double ambient = params.ambient_gain * lighting.ambient_lux;
  const double inv_gamma = 1.0 / params.gamma;
  auto display = [&](double linear) { return std::pow(std::clamp(linear, 0.0, 1.0), inv_gamma); };
  const double sky = display(params.exposure * params.sky_albedo * ambient);

  parallel_for(
      static_cast<std::size_t>(H),
      [&](std::size_t row) {
        const int v = static_cast<int>(row);
        for (int u = 0; u < W; ++u) {
          if (!depth.valid(v, u)) {
            frame.irradiance(v, u) = ambient;
            frame.image(v, u) = sky;
            continue;
          }
          const Vec3d p = unproject(Vec2d(u, v), depth.values(v, u), rig.camera);
          const Vec3d& n = normals(v, u);
          double e = ambient;

          const Vec3d pp = proj_from_cam * p;
          if (pp.z() > 0 && power > 0) {
            const auto a = angles_in_projector(pp);
            if (proj.in_frustum(a.azimuth_deg, a.elevation_deg) &&
                (collocated ||
                 pp.norm() <= shadow.farthest_range(a.azimuth_deg, a.elevation_deg) + shadow.bias)) {
              const Vec3d to_light = proj_origin - p;
              const double r2 = to_light.squaredNorm();
              const double cos_inc = std::max(0.0, n.dot(to_light) / std::sqrt(r2));
              e += power * sample_intensity(photometry, a.azimuth_deg, a.elevation_deg) * cos_inc /
                   r2;
            }
          }
          for (const auto& light : lighting.interferers) {
            const Vec3d to_light = light.position - p;
            const double r2 = to_light.squaredNorm();
            e += light.power * std::max(0.0, n.dot(to_light) / std::sqrt(r2)) / r2;
          }
          frame.irradiance(v, u) = e;
          frame.image(v, u) = display(params.exposure * albedo(v, u) * e);
        }
      },
      threads);

  if (params.noise_sigma > 0) {
    Rng rng(stream_seed(meta.seed, 0, "sensor-noise"));
    for (Eigen::Index i = 0; i < frame.image.size(); ++i)
      frame.image.data()[i] =
          std::clamp(frame.image.data()[i] + params.noise_sigma * rng.normal(), 0.0, 1.0);
  }
  return frame;
}

RenderedFrame shade(const SurfaceBuffer& surface, const Scene& scene, const Rig& rig,
                    const Photometry& photometry, const ShadowMap& shadow,
                    const ShadingParams& params, const FrameMeta& meta, unsigned threads) {
  const ImageD albedo = surface.primitive.unaryExpr([&](int id) {
    return id >= 0 ? scene.primitives[static_cast<std::size_t>(id)].albedo : 0.0;
  });
  return shade(surface.depth, surface.normals, albedo, scene_lighting(scene, rig.world_from_camera),
               rig, photometry, shadow, params, meta, threads);
}

NormalMap normals_from_depth(const DepthMap& depth, const Camera& cam) {
  const int W = depth.width(), H = depth.height();
  NormalMap normals(W, H);
  auto point = [&](int v, int u) { return unproject(Vec2d(u, v), depth.values(v, u), cam); };
  auto ok = [&](int v, int u) { return v >= 0 && v < H && u >= 0 && u < W && depth.valid(v, u); };
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      if (!depth.valid(v, u)) continue;
      const Vec3d p = point(v, u);
      const Vec3d du = ok(v, u + 1)   ? Vec3d(point(v, u + 1) - (ok(v, u - 1) ? point(v, u - 1) : p))
                       : ok(v, u - 1) ? Vec3d(p - point(v, u - 1))
                                      : Vec3d::Zero();
      const Vec3d dv = ok(v + 1, u)   ? Vec3d(point(v + 1, u) - (ok(v - 1, u) ? point(v - 1, u) : p))
                       : ok(v - 1, u) ? Vec3d(p - point(v - 1, u))
                                      : Vec3d::Zero();
      Vec3d n = du.cross(dv);
      if (!(n.norm() > 0)) n = -p;
      n.normalize();
      if (n.dot(p) > 0) n = -n;
      normals(v, u) = n;
    }
  }
  return normals;
}

RenderedFrame render_frame(const Scene& scene, const Rig& rig, const Photometry& photometry,
                           const ShadingParams& params, const ShadowMapOptions& shadow_options,
                           unsigned threads) {
  const SurfaceBuffer surface = raycast_depth(scene, rig.camera, rig.world_from_camera, threads);
  ShadowMapOptions so = shadow_options;
  if (so.threads == 0) so.threads = threads;
  const ShadowMap shadow = render_shadow_map(scene, rig.projector, rig.world_from_camera, so);
  FrameMeta meta{scene.seed, illumination_code(photometry.base.kind), photometry.base.cell_deg,
                 scene.ambient_lux, rig.hash()};
  return shade(surface, scene, rig, photometry, shadow, params, meta, threads);
}

std::vector<std::uint8_t> to_rgb8(const ImageD& image) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(image.size()) * 3);
  for (Eigen::Index v = 0; v < image.rows(); ++v) {
    for (Eigen::Index u = 0; u < image.cols(); ++u) {
      const auto q = static_cast<std::uint8_t>(std::lround(std::clamp(image(v, u), 0.0, 1.0) * 255));
      out.insert(out.end(), {q, q, q});
    }
  }
  return out;
}

double measure_cell_size(const RenderedFrame& frame, const Camera& cam,
                         const CellSizeOptions& options) {
  const ImageD& img = frame.image;
  const int W = static_cast<int>(img.cols()), H = static_cast<int>(img.rows());
  const int w = options.window_px;
  const double reach = cam.fx * std::tan(deg2rad(options.axis_window_deg));

  struct RowResult {
    std::vector<double> crossings;  // sub-pixel u
  };
  auto analyze_row = [&](int v) {
    RowResult res;
    std::vector<double> mid(W, 0.0), contrast(W, 0.0);
    for (int u = 0; u < W; ++u) {
      double lo = kInf, hi = -kInf;
      for (int k = std::max(0, u - w); k <= std::min(W - 1, u + w); ++k) {
        if (!frame.depth.valid(v, k)) continue;
        lo = std::min(lo, img(v, k));
        hi = std::max(hi, img(v, k));
      }
      if (hi >= lo) mid[u] = 0.5 * (lo + hi), contrast[u] = hi - lo;
    }
    const double best = *std::max_element(contrast.begin(), contrast.end());
    if (!(best > options.min_abs_contrast)) return res;
    const double floor = std::max(options.min_rel_contrast * best, options.min_abs_contrast);
    for (int u = 0; u + 1 < W; ++u) {
      if (!frame.depth.valid(v, u) || !frame.depth.valid(v, u + 1)) continue;
      if (contrast[u] < floor || contrast[u + 1] < floor) continue;
      const double d0 = img(v, u) - mid[u], d1 = img(v, u + 1) - mid[u + 1];
      if ((d0 > 0) == (d1 > 0) || d0 == d1) continue;
      const double uc = u + d0 / (d0 - d1);
      if (std::abs(uc - cam.cx) <= reach) res.crossings.push_back(uc);
    }
    return res;
  };

  int best_row = -1;
  RowResult best;
  for (int v = 0; v < H; ++v) {
    RowResult r = analyze_row(v);
    if (r.crossings.size() > best.crossings.size()) best = std::move(r), best_row = v;
  }
  if (best_row < 0 || best.crossings.size() < 4)
    throw MeasurementError("measure_cell_size: no pattern transitions found");

  auto metric_x = [&](double uc) {
    const int u0 = static_cast<int>(std::floor(uc));
    const double f = uc - u0;
    const double z = (1 - f) * frame.depth.values(best_row, u0) +
                     f * frame.depth.values(best_row, std::min(u0 + 1, W - 1));
    return unproject(Vec2d(uc, best_row), z, cam).x();
  };
  std::vector<double> xs;
  for (double uc : best.crossings) xs.push_back(metric_x(uc));
  std::vector<double> steps;
  for (std::size_t k = 1; k < xs.size(); ++k) steps.push_back(std::abs(xs[k] - xs[k - 1]));
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double typical = sorted[sorted.size() / 2];

  // Longest run of regularly spaced transitions; missed transitions and the
  // frustum border break a run instead of biasing it.
  std::size_t run_start = 0, best_start = 0, best_len = 0;
  for (std::size_t k = 0; k <= steps.size(); ++k) {
    const bool regular = k < steps.size() && std::abs(steps[k] - typical) <= 0.3 * typical;
    if (!regular) {
      if (k - run_start > best_len) best_len = k - run_start, best_start = run_start;
      run_start = k + 1;
    }
  }
  if (best_len < 3) throw MeasurementError("measure_cell_size: no regular pattern transitions found");
  return std::abs(xs[best_start + best_len] - xs[best_start]) / static_cast<double>(best_len);
}

double ProjectedCell::corner_angle_deg(int k) const {
  const Vec2d& c = corners[static_cast<std::size_t>(k)];
  const Vec2d a = corners[static_cast<std::size_t>((k + 3) % 4)] - c;
  const Vec2d b = corners[static_cast<std::size_t>((k + 1) % 4)] - c;
  return rad2deg(std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
}

std::vector<ProjectedCell> project_cells(const Scene& scene, const Rig& rig, double cell_deg) {
  if (!(cell_deg > 0)) throw ContractError("project_cells: cell size must be positive");
  const ProjectorModel& proj = rig.projector;
  const SceneIntersector tracer(scene);
  const PoseD world_from_proj = rig.world_from_projector();
  const PoseD camera_from_world = rig.world_from_camera.inverse();
  const Vec3d cam_center = rig.world_from_camera.translation;

  struct Corner {
    Vec2d px;
    double z;
    int prim;
  };
  auto corner = [&](double az, double el) -> std::optional<Corner> {
    const Ray ray{world_from_proj.translation, world_from_proj.rotation * projector_direction(az, el)};
    const auto hit = tracer.nearest(ray);
    if (!hit) return std::nullopt;
    const Vec3d pw = ray.origin + hit->hit.t * ray.direction;
    const Vec3d pc = camera_from_world * pw;
    if (!(pc.z() > 0)) return std::nullopt;
    const Vec2d px = project(pc, rig.camera);
    if (px.x() < 0 || px.x() > rig.camera.width - 1 || px.y() < 0 || px.y() > rig.camera.height - 1)
      return std::nullopt;
    const Vec3d to_point = pw - cam_center;
    const double dist = to_point.norm();
    const auto seen = tracer.nearest({cam_center, to_point / dist});
    if (!seen || seen->hit.t < dist * (1.0 - 1e-9) - 1e-9) return std::nullopt;
    return Corner{px, pc.z(), hit->primitive};
  };

  const int half_cols = static_cast<int>(std::floor(0.5 * proj.hfov_deg / cell_deg + 1e-9));
  const int half_rows = static_cast<int>(std::floor(0.5 * proj.vfov_deg / cell_deg + 1e-9));
  std::vector<ProjectedCell> cells;
  for (int j = -half_rows; j < half_rows; ++j) {
    for (int i = -half_cols; i < half_cols; ++i) {
      const double a0 = i * cell_deg, a1 = (i + 1) * cell_deg;
      const double e0 = j * cell_deg, e1 = (j + 1) * cell_deg;
      const auto c0 = corner(a0, e0), c1 = corner(a1, e0), c2 = corner(a1, e1), c3 = corner(a0, e1);
      if (!c0 || !c1 || !c2 || !c3) continue;
      if (c0->prim != c1->prim || c0->prim != c2->prim || c0->prim != c3->prim) continue;
      cells.push_back({i, j, {c0->px, c1->px, c2->px, c3->px}, {c0->z, c1->z, c2->z, c3->z}});
    }
  }
  return cells;
}

}  // namespace ledsim
