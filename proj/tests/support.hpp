#pragma once

#include "ledsim/geometry.hpp"
#include "ledsim/scene.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

namespace testing {

using namespace ledsim;

/// Fresh empty directory under the build tree (or the system temp dir).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("LEDGEN_TEST_TMP");
  const std::filesystem::path root =
      base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "ledsim-tests";
  const auto dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Intersect-everything nearest hit; strict comparison keeps the lowest index on ties.
inline std::optional<SceneHit> brute_nearest(const Scene& scene, const Ray& ray) {
  std::optional<SceneHit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto h = intersect(scene.primitives[i], ray);
    if (h && (!best || h->t < best->hit.t)) best = SceneHit{*h, static_cast<int>(i)};
  }
  return best;
}

/// Up to `max_prims` random ground, box, sphere and wall primitives in front of the camera.
inline Scene random_scene(Rng& rng, int max_prims) {
  Scene s;
  const int n = rng.uniform_int(1, max_prims);
  for (int i = 0; i < n; ++i) {
    const double albedo = rng.uniform(0.1, 0.9);
    switch (rng.uniform_int(0, 3)) {
      case 0: s.primitives.push_back({GroundPlane{}, albedo, "ground"}); break;
      case 1: {
        const Vec3d lo(rng.uniform(-6, 4), rng.uniform(-0.5, 2.5), rng.uniform(3, 40));
        const Vec3d size(rng.uniform(0.3, 4), rng.uniform(0.3, 3), rng.uniform(0.3, 6));
        s.primitives.push_back({Box{lo, lo + size}, albedo, "box"});
        break;
      }
      case 2:
        s.primitives.push_back({Sphere{{rng.uniform(-5, 5), rng.uniform(0, 3), rng.uniform(4, 40)},
                                       rng.uniform(0.2, 2.5)},
                                albedo, "sphere"});
        break;
      default: {
        const Vec2d a(rng.uniform(-8, 8), rng.uniform(3, 50));
        const Vec2d b = a + Vec2d(rng.uniform(-10, 10), rng.uniform(-10, 10));
        const double y0 = rng.uniform(-1, 2);
        s.primitives.push_back({Wall{a, b, y0, y0 + rng.uniform(0.5, 6)}, albedo, "wall"});
      }
    }
  }
  return s;
}

/// Fronto-parallel wall at world depth z, spanning far beyond any frustum.
inline Primitive wall_at(double z, double albedo = 0.5) {
  return {Wall{{-1000.0, z}, {1000.0, z}, -100.0, 100.0}, albedo, "wall"};
}

/// Direct ray-cast visibility from the projector: inside the frustum and no
/// surface strictly between projector and point.
inline bool lit_by_raycast(const Vec3d& point_camera, const Rig& rig, const Scene& scene) {
  const Vec3d pp = rig.projector.pose.inverse() * point_camera;
  if (!(pp.z() > 0)) return false;
  const auto a = angles_in_projector(pp);
  if (!rig.projector.in_frustum(a.azimuth_deg, a.elevation_deg)) return false;
  const PoseD world_from_proj = rig.world_from_projector();
  const Vec3d target = rig.world_from_camera * point_camera;
  const Vec3d origin = world_from_proj.translation;
  const double dist = (target - origin).norm();
  const Ray ray{origin, (target - origin) / dist};
  const auto hit = brute_nearest(scene, ray);
  return !hit || hit->hit.t >= dist - 1e-6;
}

}  // namespace testing
