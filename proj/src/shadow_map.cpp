#include "ledsim/shadow_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

namespace ledsim {
namespace {

ShadowMap empty_map(const ProjectorModel& proj, const ShadowMapOptions& options) {
  if (options.factor < 1) throw ContractError("shadow map factor must be >= 1");
  if (!(options.bias >= 0)) throw ContractError("shadow map bias must be non-negative");
  proj.validate();
  ShadowMap map;
  map.range = Image<double>::Constant(proj.rows * options.factor, proj.cols * options.factor, kInf);
  map.factor = options.factor;
  map.bias = options.bias;
  map.hfov_deg = proj.hfov_deg;
  map.vfov_deg = proj.vfov_deg;
  return map;
}

double tan_deg(double deg) { return std::tan(deg2rad(deg)); }

// Continuous texel coordinate (texel centers at integers) of an angle.
double texel_coord(double angle_deg, double fov_deg, int count) {
  return (angle_deg / fov_deg + 0.5) * count - 0.5;
}

}  // namespace

namespace {

// The four texels surrounding a direction and its bilinear weights in tangent space.
struct Stencil {
  int i0, i1, j0, j1;
  double wx, wy;
};

Stencil stencil(const ShadowMap& m, double azimuth_deg, double elevation_deg) {
  auto bracket = [](double coord, int count, auto&& tan_of, double t) {
    const int lo = std::clamp(static_cast<int>(std::floor(coord)), 0, std::max(0, count - 2));
    const int hi = std::min(lo + 1, count - 1);
    double w = 0.0;
    if (hi != lo) w = std::clamp((t - tan_of(lo)) / (tan_of(hi) - tan_of(lo)), 0.0, 1.0);
    return std::tuple{lo, hi, w};
  };
  const auto [i0, i1, wx] = bracket(texel_coord(azimuth_deg, m.hfov_deg, m.cols()), m.cols(),
                                    [&](int i) { return tan_deg(m.texel_azimuth_deg(i)); },
                                    tan_deg(azimuth_deg));
  const auto [j0, j1, wy] = bracket(texel_coord(elevation_deg, m.vfov_deg, m.rows()), m.rows(),
                                    [&](int j) { return tan_deg(m.texel_elevation_deg(j)); },
                                    tan_deg(elevation_deg));
  return {i0, i1, j0, j1, wx, wy};
}

// Inverse projector-frame depth of a texel's surface point; 0 for no hit.
double texel_inv_depth(const ShadowMap& m, int i, int j) {
  const double r = m.range(j, i);
  if (!std::isfinite(r)) return 0.0;
  const double a = tan_deg(m.texel_azimuth_deg(i)), e = tan_deg(m.texel_elevation_deg(j));
  return std::sqrt(1.0 + a * a + e * e) / r;
}

}  // namespace

double ShadowMap::sample_range(double azimuth_deg, double elevation_deg) const {
  const Stencil s = stencil(*this, azimuth_deg, elevation_deg);
  const double w =
      (1 - s.wy) * ((1 - s.wx) * texel_inv_depth(*this, s.i0, s.j0) + s.wx * texel_inv_depth(*this, s.i1, s.j0)) +
      s.wy * ((1 - s.wx) * texel_inv_depth(*this, s.i0, s.j1) + s.wx * texel_inv_depth(*this, s.i1, s.j1));
  if (!(w > 0)) return kInf;
  const double ta = tan_deg(azimuth_deg), te = tan_deg(elevation_deg);
  return std::sqrt(1.0 + ta * ta + te * te) / w;
}

double ShadowMap::farthest_range(double azimuth_deg, double elevation_deg) const {
  const Stencil s = stencil(*this, azimuth_deg, elevation_deg);
  const double w = std::min({texel_inv_depth(*this, s.i0, s.j0), texel_inv_depth(*this, s.i1, s.j0),
                             texel_inv_depth(*this, s.i0, s.j1), texel_inv_depth(*this, s.i1, s.j1)});
  if (!(w > 0)) return kInf;
  const double ta = tan_deg(azimuth_deg), te = tan_deg(elevation_deg);
  return std::sqrt(1.0 + ta * ta + te * te) / w;
}

ShadowMap render_shadow_map(const Scene& scene, const ProjectorModel& proj,
                            const PoseD& world_from_camera, const ShadowMapOptions& options) {
  ShadowMap map = empty_map(proj, options);
  const PoseD world_from_proj = world_from_camera * proj.pose;
  const SceneIntersector tracer(scene);
  parallel_for(
      static_cast<std::size_t>(map.rows()),
      [&](std::size_t row) {
        const int j = static_cast<int>(row);
        for (int i = 0; i < map.cols(); ++i) {
          const Vec3d dir = world_from_proj.rotation *
                            projector_direction(map.texel_azimuth_deg(i), map.texel_elevation_deg(j));
          if (const auto hit = tracer.nearest({world_from_proj.translation, dir}))
            map.range(j, i) = hit->hit.t;
        }
      },
      options.threads);
  return map;
}

ShadowMap render_shadow_map(const DepthMap& depth, const Camera& cam, const ProjectorModel& proj,
                            const ShadowMapOptions& options, double max_relative_step) {
  ShadowMap map = empty_map(proj, options);
  const PoseD proj_from_cam = proj.pose.inverse();
  const int W = depth.width(), H = depth.height();

  // Inverse depth buffer in the projector frame; larger = closer.
  Image<double> inv_z = Image<double>::Zero(map.rows(), map.cols());
  Eigen::VectorXd tan_az(map.cols()), tan_el(map.rows());
  for (int i = 0; i < map.cols(); ++i) tan_az(i) = tan_deg(map.texel_azimuth_deg(i));
  for (int j = 0; j < map.rows(); ++j) tan_el(j) = tan_deg(map.texel_elevation_deg(j));

  struct Vertex {
    double x, y, w;  // tangent-space position, inverse depth
  };
  auto vertex = [&](int v, int u, Vertex& out) {
    const Vec3d p = proj_from_cam * unproject(Vec2d(u, v), depth.values(v, u), cam);
    if (!(p.z() > 1e-6)) return false;
    out = {p.x() / p.z(), p.y() / p.z(), 1.0 / p.z()};
    return true;
  };
  auto first_at_least = [](const Eigen::VectorXd& grid, double x) {
    return static_cast<int>(std::lower_bound(grid.data(), grid.data() + grid.size(), x) -
                            grid.data());
  };
  auto raster = [&](const Vertex& a, const Vertex& b, const Vertex& c) {
    const double area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (std::abs(area) < 1e-18) return;
    const int i_lo = first_at_least(tan_az, std::min({a.x, b.x, c.x}));
    const int i_hi = first_at_least(tan_az, std::max({a.x, b.x, c.x}));
    const int j_lo = first_at_least(tan_el, std::min({a.y, b.y, c.y}));
    const int j_hi = first_at_least(tan_el, std::max({a.y, b.y, c.y}));
    for (int j = j_lo; j < std::min(j_hi + 1, map.rows()); ++j) {
      for (int i = i_lo; i < std::min(i_hi + 1, map.cols()); ++i) {
        const double px = tan_az(i), py = tan_el(j);
        const double l1 = ((b.x - px) * (c.y - py) - (c.x - px) * (b.y - py)) / area;
        const double l2 = ((c.x - px) * (a.y - py) - (a.x - px) * (c.y - py)) / area;
        const double l3 = 1.0 - l1 - l2;
        if (l1 < -1e-12 || l2 < -1e-12 || l3 < -1e-12) continue;
        inv_z(j, i) = std::max(inv_z(j, i), l1 * a.w + l2 * b.w + l3 * c.w);
      }
    }
  };

  for (int v = 0; v + 1 < H; ++v) {
    for (int u = 0; u + 1 < W; ++u) {
      if (!(depth.valid(v, u) && depth.valid(v, u + 1) && depth.valid(v + 1, u) &&
            depth.valid(v + 1, u + 1)))
        continue;
      const double z[4] = {depth.values(v, u), depth.values(v, u + 1), depth.values(v + 1, u),
                           depth.values(v + 1, u + 1)};
      const auto [lo, hi] = std::minmax_element(z, z + 4);
      if (*hi > *lo * (1.0 + max_relative_step)) continue;
      Vertex q[4];
      if (!vertex(v, u, q[0]) || !vertex(v, u + 1, q[1]) || !vertex(v + 1, u, q[2]) ||
          !vertex(v + 1, u + 1, q[3]))
        continue;
      raster(q[0], q[1], q[2]);
      raster(q[1], q[3], q[2]);
    }
  }

  for (int j = 0; j < map.rows(); ++j) {
    for (int i = 0; i < map.cols(); ++i) {
      if (inv_z(j, i) > 0)
        map.range(j, i) = std::sqrt(1.0 + tan_az(i) * tan_az(i) + tan_el(j) * tan_el(j)) / inv_z(j, i);
    }
  }
  return map;
}

bool is_lit(const Vec3d& point_camera, const ProjectorModel& proj, const ShadowMap& shadow) {
  const Vec3d p = proj.pose.inverse() * point_camera;
  if (!(p.z() > 0)) return false;
  const auto a = angles_in_projector(p);
  if (!proj.in_frustum(a.azimuth_deg, a.elevation_deg)) return false;
  return p.norm() <= shadow.farthest_range(a.azimuth_deg, a.elevation_deg) + shadow.bias;
}

}  // namespace ledsim
