#pragma once

// Procedural night-road scenes built from analytic primitives, and exact ray
// casting against them. Scene coordinates: world frame, ground plane y = 0.

#include "ledsim/common.hpp"
#include "ledsim/depth_map.hpp"
#include "ledsim/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ledsim {

struct GroundPlane {};

/// Axis-aligned box [lo, hi].
struct Box {
  Vec3d lo;
  Vec3d hi;
};

struct Sphere {
  Vec3d center;
  double radius;
};

/// Vertical rectangle spanning the xz segment a-b and heights [y0, y1].
struct Wall {
  Vec2d a;  ///< (x, z)
  Vec2d b;  ///< (x, z)
  double y0;
  double y1;
};

using Shape = std::variant<GroundPlane, Box, Sphere, Wall>;

struct Primitive {
  Shape shape;
  double albedo{0.5};
  std::string tag;  ///< entity label: ground, car, pedestrian, sign, building, ...

  void validate() const;
};

struct Ray {
  Vec3d origin;
  Vec3d direction;  ///< unit length
};

struct Hit {
  double t;       ///< distance along the (unit) ray
  Vec3d normal;   ///< unit, facing against the ray
};

/// Nearest intersection of ray with the primitive in (t_min, t_max).
std::optional<Hit> intersect(const Primitive& prim, const Ray& ray, double t_min = 1e-9,
                             double t_max = kInf);

struct PointLight {
  Vec3d position;
  double power;
};

struct Scene {
  std::vector<Primitive> primitives;
  double ambient_lux{0.0};
  std::vector<PointLight> interferers;
  std::uint64_t seed{0};
  int map_id{0};

  bool operator==(const Scene& o) const;
};

struct SceneHit {
  Hit hit;
  int primitive;
};

/// Bounding-volume accelerated nearest-hit query over a scene. Ties in t are
/// broken toward the lower primitive index.
class SceneIntersector {
 public:
  explicit SceneIntersector(const Scene& scene);

  std::optional<SceneHit> nearest(const Ray& ray, double t_max = kInf) const;

  /// True if anything is hit in (t_min, t_max).
  bool occluded(const Ray& ray, double t_min, double t_max) const;

 private:
  struct Bound {
    Vec3d center;
    double radius;  // < 0 for unbounded
  };
  const Scene* scene_;
  std::vector<Bound> bounds_;
};

struct IntRange {
  int min{0};
  int max{0};
};

struct RealRange {
  double min{0.0};
  double max{0.0};
};

/// Entity counts and placement distributions for generate_scene. Serialized as
/// JSON, see docs/scene_config.md.
struct SceneConfig {
  IntRange cars{0, 6};
  IntRange pedestrians{0, 4};
  IntRange signs{0, 3};
  IntRange interferers{0, 2};
  RealRange depth{5.0, 100.0};    ///< entity z, log-uniform
  RealRange lateral{-6.0, 6.0};   ///< car/pedestrian x
  RealRange sign_offset{4.5, 7.0};  ///< |x| of road signs
  RealRange albedo{0.2, 0.8};
  RealRange ambient_lux{0.0, 10.0};
  RealRange interferer_power{2.0, 20.0};
  RealRange building_offset{8.0, 15.0};  ///< |x| of building facades
  RealRange building_height{4.0, 15.0};
  bool buildings{true};

  void validate() const;
};

/// Raised when entities cannot be placed without overlap.
struct GenerationError : ContractError {
  using ContractError::ContractError;
};

inline constexpr int kMaxPlacementAttempts = 1000;

/// Deterministic scene for (seed, config, map_id). The ground plane is always
/// primitive 0. map_id selects a scene family (building layout, density).
Scene generate_scene(std::uint64_t seed, const SceneConfig& config, int map_id = 0);

struct SurfaceBuffer {
  DepthMap depth;
  NormalMap normals;     ///< camera frame
  Image<int> primitive;  ///< hit primitive index, -1 for sky
};

/// Per-pixel nearest hit through each pixel center. Depth is the camera-frame
/// z of the hit point; pixels with no hit are invalid.
SurfaceBuffer raycast_depth(const Scene& scene, const Camera& cam, const PoseD& world_from_camera,
                            unsigned threads = 0);

}  // namespace ledsim
