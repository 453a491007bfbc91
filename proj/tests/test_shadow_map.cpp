#include "ledsim/shadow_map.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ledsim;
using testing::wall_at;

namespace {

const PoseD kCameraPose = PoseD::from_translation({0, 1.4, 0});

double tan_deg(double d) { return std::tan(deg2rad(d)); }

Scene box_before_wall() {
  Scene s;
  s.primitives.push_back(wall_at(20.0));
  s.primitives.push_back({Box{{-1.0, -1.2, 10.0}, {1.0, 0.8, 10.5}}, 0.5, "box"});
  return s;
}

// Index of the first primitive hit along a projector direction, -1 for none.
int first_hit(const Scene& scene, const PoseD& world_from_proj, double az, double el) {
  const Ray ray{world_from_proj.translation, world_from_proj.rotation * projector_direction(az, el)};
  const auto hit = testing::brute_nearest(scene, ray);
  return hit ? hit->primitive : -1;
}

struct Agreement {
  int agree{0}, total{0}, band{0};
};

// Compares is_lit with the ray-cast oracle on every camera pixel, skipping
// points within one shadow texel of an occluder silhouette or the frustum edge.
Agreement compare_with_oracle(const Scene& scene, const Rig& rig) {
  const SurfaceBuffer surf = raycast_depth(scene, rig.camera, rig.world_from_camera);
  const ShadowMap shadow = render_shadow_map(scene, rig.projector, rig.world_from_camera);
  const PoseD proj_from_cam = rig.projector.pose.inverse();
  const PoseD world_from_proj = rig.world_from_projector();
  const double da = rig.projector.hfov_deg / shadow.cols(), de = rig.projector.vfov_deg / shadow.rows();
  Agreement a;
  for (int v = 0; v < rig.camera.height; ++v) {
    for (int u = 0; u < rig.camera.width; ++u) {
      if (!surf.depth.valid(v, u)) continue;
      const Vec3d pc = unproject(Vec2d(u, v), surf.depth.values(v, u), rig.camera);
      const Vec3d pp = proj_from_cam * pc;
      const bool exact = testing::lit_by_raycast(pc, rig, scene);
      bool in_band = false;
      if (pp.z() > 0) {
        const auto ang = angles_in_projector(pp);
        const int here = first_hit(scene, world_from_proj, ang.azimuth_deg, ang.elevation_deg);
        for (auto [dx, dy] : {std::pair{da, 0.0}, {-da, 0.0}, {0.0, de}, {0.0, -de}}) {
          const double az = ang.azimuth_deg + dx, el = ang.elevation_deg + dy;
          if (rig.projector.in_frustum(ang.azimuth_deg, ang.elevation_deg) != rig.projector.in_frustum(az, el) ||
              first_hit(scene, world_from_proj, az, el) != here)
            in_band = true;
        }
      }
      if (in_band) {
        ++a.band;
        continue;
      }
      ++a.total;
      a.agree += is_lit(pc, rig.projector, shadow) == exact;
    }
  }
  return a;
}

}  // namespace

TEST_CASE("empty scene gives an all-infinite map") {
  const ShadowMap m = render_shadow_map(Scene{}, ProjectorModel{});
  CHECK(m.cols() == 528);
  CHECK(m.rows() == 112);
  CHECK(m.range.isInf().all());
  CHECK(std::isinf(m.sample_range(0, 0)));
}

TEST_CASE("fronto-parallel wall: range grows as 1/cos of the ray angle") {
  Scene s;
  s.primitives.push_back(wall_at(10.0));
  const ProjectorModel proj;  // collocated with the camera
  const ShadowMap m = render_shadow_map(s, proj, kCameraPose);
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.cols(); ++i) {
      const double ta = tan_deg(m.texel_azimuth_deg(i)), te = tan_deg(m.texel_elevation_deg(j));
      const double expected = 10.0 * std::sqrt(1 + ta * ta + te * te);
      CHECK(std::abs(m.range(j, i) - expected) <= 1e-12 * expected);
    }
  }
  CHECK(std::abs(m.sample_range(0, 0) - 10.0) < 1e-6);
  CHECK(std::abs(m.sample_range(7.3, -1.1) - 10.0 * std::sqrt(1 + std::pow(tan_deg(7.3), 2) +
                                                             std::pow(tan_deg(-1.1), 2))) < 1e-9);
  CHECK(std::abs(m.farthest_range(7.3, -1.1) - m.sample_range(7.3, -1.1)) < 1e-9);
}

TEST_CASE("box in front of wall matches per-ray brute force on every texel") {
  const Scene s = box_before_wall();
  const Rig rig = default_rig();
  const ShadowMap m = render_shadow_map(s, rig.projector, rig.world_from_camera);
  const PoseD wp = rig.world_from_projector();
  int box_texels = 0;
  for (int j = 0; j < m.rows(); ++j) {
    for (int i = 0; i < m.cols(); ++i) {
      const Ray ray{wp.translation, wp.rotation * projector_direction(m.texel_azimuth_deg(i), m.texel_elevation_deg(j))};
      const auto hit = testing::brute_nearest(s, ray);
      if (!hit) {
        CHECK(std::isinf(m.range(j, i)));
        continue;
      }
      CHECK(m.range(j, i) == hit->hit.t);
      box_texels += hit->primitive == 1;
    }
  }
  CHECK(box_texels > 100);
}

TEST_CASE("is_lit examples") {
  const Scene s = box_before_wall();
  const Rig rig = default_rig();
  const ShadowMap m = render_shadow_map(s, rig.projector, rig.world_from_camera);
  const Vec3d behind = rig.projector.pose * Vec3d(0, 0, -3);
  CHECK_FALSE(is_lit(behind, rig.projector, m));

  // Wall point well clear of the box's shadow, on the projector axis side.
  const PoseD camera_from_world = rig.world_from_camera.inverse();
  const Vec3d axis_hit_proj = projector_direction(-12.0, 0.0);
  const Vec3d origin = rig.projector.pose.translation;
  const Vec3d dir = rig.projector.pose.rotation * axis_hit_proj;
  const double t = (20.0 - origin.z()) / dir.z();
  const Vec3d wall_point = origin + t * dir;
  CHECK(testing::lit_by_raycast(wall_point, rig, s));
  CHECK(is_lit(wall_point, rig.projector, m));

  // Wall point straight behind the box centre as seen from the projector.
  const Vec3d box_center_cam = camera_from_world * Vec3d(0.0, -0.2, 10.25);
  const Vec3d through = (box_center_cam - origin).normalized();
  const Vec3d shadowed = origin + (20.0 - origin.z()) / through.z() * through;
  const auto ang = angles_in_projector(rig.projector.pose.inverse() * shadowed);
  REQUIRE(rig.projector.in_frustum(ang.azimuth_deg, ang.elevation_deg));
  CHECK_FALSE(testing::lit_by_raycast(shadowed, rig, s));
  CHECK_FALSE(is_lit(shadowed, rig.projector, m));
}

TEST_CASE("is_lit agrees with the ray-cast oracle away from occluder boundaries") {
  Rng rng(9);
  Agreement total;
  for (int k = 0; k < 6; ++k) {
    Scene s;
    s.primitives.push_back({GroundPlane{}, 0.35, "ground"});
    s.primitives.push_back(wall_at(rng.uniform(25, 60)));
    const int boxes = rng.uniform_int(1, 2);
    for (int b = 0; b < boxes; ++b) {
      const Vec3d lo(rng.uniform(-4, 2), 0.0, rng.uniform(6, 20));
      s.primitives.push_back({Box{lo, lo + Vec3d(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 3))}, 0.5, "box"});
    }
    s.primitives.push_back({Sphere{{rng.uniform(-3, 3), rng.uniform(0.5, 2), rng.uniform(8, 20)}, rng.uniform(0.3, 1)}, 0.5, "sphere"});
    const Agreement a = compare_with_oracle(s, default_rig(160));
    total.agree += a.agree;
    total.total += a.total;
    total.band += a.band;
  }
  REQUIRE(total.total > 10000);
  CHECK(double(total.agree) / total.total >= 0.999);
  CHECK(total.band < total.total / 10);
}

TEST_CASE("zero baseline: visible in-frustum points are lit") {
  Rng rng(4);
  int in_frustum = 0, lit = 0;
  for (int k = 0; k < 4; ++k) {
    const Scene s = generate_scene(rng.next(), SceneConfig{}, k);
    const Rig rig = zero_baseline_rig(160);
    const SurfaceBuffer surf = raycast_depth(s, rig.camera, rig.world_from_camera);
    const ShadowMap m = render_shadow_map(s, rig.projector, rig.world_from_camera);
    for (int v = 0; v < rig.camera.height; ++v) {
      for (int u = 0; u < rig.camera.width; ++u) {
        if (!surf.depth.valid(v, u)) continue;
        const Vec3d p = unproject(Vec2d(u, v), surf.depth.values(v, u), rig.camera);
        const auto a = angles_in_projector(p);
        if (!rig.projector.in_frustum(a.azimuth_deg, a.elevation_deg)) {
          CHECK_FALSE(is_lit(p, rig.projector, m));
          continue;
        }
        ++in_frustum;
        lit += is_lit(p, rig.projector, m);
      }
    }
  }
  // Only surfaces narrower than a texel seen edge-on can miss the map.
  REQUIRE(in_frustum > 5000);
  CHECK(double(lit) / in_frustum >= 0.999);
}

TEST_CASE("depth-map mesh shadow map reproduces the ray-cast map on a plane") {
  Scene s;
  s.primitives.push_back(wall_at(12.0));
  const Rig rig = default_rig();
  const SurfaceBuffer surf = raycast_depth(s, rig.camera, rig.world_from_camera);
  const ShadowMap traced = render_shadow_map(s, rig.projector, rig.world_from_camera);
  const ShadowMap meshed = render_shadow_map(surf.depth, rig.camera, rig.projector);
  int compared = 0;
  for (int j = 0; j < traced.rows(); ++j)
    for (int i = 0; i < traced.cols(); ++i)
      if (std::isfinite(meshed.range(j, i))) {
        CHECK(std::abs(meshed.range(j, i) - traced.range(j, i)) < 1e-9 * traced.range(j, i));
        ++compared;
      }
  CHECK(compared > traced.range.size() / 4);
}

TEST_CASE("shadow map options are validated") {
  CHECK_THROWS_AS(render_shadow_map(Scene{}, ProjectorModel{}, kCameraPose, {0, 0.02, 0}), ContractError);
  CHECK_THROWS_AS(render_shadow_map(Scene{}, ProjectorModel{}, kCameraPose, {4, -1.0, 0}), ContractError);
}
