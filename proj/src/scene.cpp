#include "ledsim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ledsim {
namespace {

constexpr double kParallelEps = 1e-15;

Vec3d facing(Vec3d n, const Vec3d& dir) { return n.dot(dir) > 0 ? Vec3d(-n) : n; }

bool in_range(double t, double t_min, double t_max) { return t > t_min && t < t_max; }

std::optional<Hit> intersect_shape(const GroundPlane&, const Ray& ray, double t_min,
                                   double t_max) {
  if (std::abs(ray.direction.y()) < kParallelEps) return std::nullopt;
  const double t = -ray.origin.y() / ray.direction.y();
  if (!in_range(t, t_min, t_max)) return std::nullopt;
  return Hit{t, facing(Vec3d::UnitY(), ray.direction)};
}

std::optional<Hit> intersect_shape(const Box& box, const Ray& ray, double t_min, double t_max) {
  double t_near = -kInf, t_far = kInf;
  int near_axis = -1, far_axis = -1;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin(a), d = ray.direction(a);
    if (std::abs(d) < kParallelEps) {
      if (o < box.lo(a) || o > box.hi(a)) return std::nullopt;
      continue;
    }
    double t0 = (box.lo(a) - o) / d, t1 = (box.hi(a) - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) t_near = t0, near_axis = a;
    if (t1 < t_far) t_far = t1, far_axis = a;
  }
  if (t_near > t_far) return std::nullopt;
  if (in_range(t_near, t_min, t_max) && near_axis >= 0)
    return Hit{t_near, facing(Vec3d::Unit(near_axis), ray.direction)};
  if (in_range(t_far, t_min, t_max) && far_axis >= 0)
    return Hit{t_far, facing(Vec3d::Unit(far_axis), ray.direction)};
  return std::nullopt;
}

std::optional<Hit> intersect_shape(const Sphere& s, const Ray& ray, double t_min, double t_max) {
  const Vec3d oc = ray.origin - s.center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  for (double t : {-b - sq, -b + sq}) {
    if (in_range(t, t_min, t_max)) {
      const Vec3d p = ray.origin + t * ray.direction;
      return Hit{t, facing((p - s.center) / s.radius, ray.direction)};
    }
  }
  return std::nullopt;
}

std::optional<Hit> intersect_shape(const Wall& w, const Ray& ray, double t_min, double t_max) {
  const Vec2d ab = w.b - w.a;
  const Vec3d n = Vec3d(-ab.y(), 0.0, ab.x()).normalized();
  const double denom = n.dot(ray.direction);
  if (std::abs(denom) < kParallelEps) return std::nullopt;
  const Vec3d anchor(w.a.x(), w.y0, w.a.y());
  const double t = n.dot(anchor - ray.origin) / denom;
  if (!in_range(t, t_min, t_max)) return std::nullopt;
  const Vec3d p = ray.origin + t * ray.direction;
  if (p.y() < w.y0 || p.y() > w.y1) return std::nullopt;
  const double s = ((p.x() - w.a.x()) * ab.x() + (p.z() - w.a.y()) * ab.y()) / ab.squaredNorm();
  if (s < 0.0 || s > 1.0) return std::nullopt;
  return Hit{t, facing(n, ray.direction)};
}

bool same_shape(const Shape& x, const Shape& y) {
  if (x.index() != y.index()) return false;
  return std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        const T& b = std::get<T>(y);
        if constexpr (std::is_same_v<T, GroundPlane>) {
          return true;
        } else if constexpr (std::is_same_v<T, Box>) {
          return a.lo == b.lo && a.hi == b.hi;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return a.center == b.center && a.radius == b.radius;
        } else {
          return a.a == b.a && a.b == b.b && a.y0 == b.y0 && a.y1 == b.y1;
        }
      },
      x);
}

void check_range(const IntRange& r, const char* name) {
  if (r.min < 0 || r.min > r.max)
    throw ContractError(std::string("scene config: invalid count range for ") + name);
}

void check_range(const RealRange& r, const char* name) {
  if (!(std::isfinite(r.min) && std::isfinite(r.max) && r.min <= r.max))
    throw ContractError(std::string("scene config: invalid range for ") + name);
}

double log_uniform(Rng& rng, const RealRange& r) {
  if (r.min == r.max) return r.min;
  return std::exp(rng.uniform(std::log(r.min), std::log(r.max)));
}

double draw(Rng& rng, const RealRange& r) { return rng.uniform(r.min, r.max); }

int draw(Rng& rng, const IntRange& r) { return rng.uniform_int(r.min, r.max); }

// Axis-aligned footprint on the road plane (x, z).
struct Footprint {
  double x0, x1, z0, z1;

  bool overlaps(const Footprint& o, double margin) const {
    return x0 - margin < o.x1 && o.x0 - margin < x1 && z0 - margin < o.z1 && o.z0 - margin < z1;
  }
};

class Placer {
 public:
  // Draws footprints from `propose` until one is free of overlaps.
  template <typename Propose>
  Footprint place(Propose&& propose, const char* what) {
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Footprint f = propose();
      const bool free = std::none_of(taken_.begin(), taken_.end(),
                                     [&](const Footprint& o) { return f.overlaps(o, 0.3); });
      if (free) {
        taken_.push_back(f);
        return f;
      }
    }
    throw GenerationError(std::string("could not place ") + what + " after " +
                          std::to_string(kMaxPlacementAttempts) + " attempts");
  }

 private:
  std::vector<Footprint> taken_;
};

// Building facade presence (left, right) per scene family.
constexpr bool kFacades[5][2] = {{true, true}, {true, false}, {false, false}, {false, true},
                                 {true, true}};

}  // namespace

void Primitive::validate() const {
  if (!(albedo >= 0.0 && albedo <= 1.0)) throw ContractError("primitive albedo outside [0, 1]");
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          if (!((s.hi - s.lo).minCoeff() > 0)) throw ContractError("box extents must be positive");
        } else if constexpr (std::is_same_v<T, Sphere>) {
          if (!(s.radius > 0)) throw ContractError("sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, Wall>) {
          if (!((s.b - s.a).norm() > 0 && s.y1 > s.y0))
            throw ContractError("wall must have positive length and height");
        }
      },
      shape);
}

std::optional<Hit> intersect(const Primitive& prim, const Ray& ray, double t_min, double t_max) {
  return std::visit([&](const auto& s) { return intersect_shape(s, ray, t_min, t_max); },
                    prim.shape);
}

bool Scene::operator==(const Scene& o) const {
  if (primitives.size() != o.primitives.size() || interferers.size() != o.interferers.size())
    return false;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto &a = primitives[i], &b = o.primitives[i];
    if (!same_shape(a.shape, b.shape) || a.albedo != b.albedo || a.tag != b.tag) return false;
  }
  for (std::size_t i = 0; i < interferers.size(); ++i) {
    if (interferers[i].position != o.interferers[i].position ||
        interferers[i].power != o.interferers[i].power)
      return false;
  }
  return ambient_lux == o.ambient_lux && seed == o.seed && map_id == o.map_id;
}

SceneIntersector::SceneIntersector(const Scene& scene) : scene_(&scene) {
  bounds_.reserve(scene.primitives.size());
  for (const auto& p : scene.primitives) {
    Bound b{Vec3d::Zero(), -1.0};
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Box>) {
            b = {0.5 * (s.lo + s.hi), 0.5 * (s.hi - s.lo).norm()};
          } else if constexpr (std::is_same_v<T, Sphere>) {
            b = {s.center, s.radius};
          } else if constexpr (std::is_same_v<T, Wall>) {
            const Vec2d mid = 0.5 * (s.a + s.b);
            b = {Vec3d(mid.x(), 0.5 * (s.y0 + s.y1), mid.y()),
                 0.5 * std::hypot((s.b - s.a).norm(), s.y1 - s.y0)};
          }
        },
        p.shape);
    if (b.radius >= 0) b.radius = b.radius * (1.0 + 1e-9) + 1e-9;
    bounds_.push_back(b);
  }
}

std::optional<SceneHit> SceneIntersector::nearest(const Ray& ray, double t_max) const {
  struct Candidate {
    double entry;
    int index;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(bounds_.size());
  for (int i = 0; i < static_cast<int>(bounds_.size()); ++i) {
    const Bound& b = bounds_[i];
    if (b.radius < 0) {
      candidates.push_back({0.0, i});
      continue;
    }
    const Vec3d oc = ray.origin - b.center;
    const double half_b = oc.dot(ray.direction);
    const double disc = half_b * half_b - (oc.squaredNorm() - b.radius * b.radius);
    if (disc < 0) continue;
    const double sq = std::sqrt(disc);
    if (-half_b + sq <= 0) continue;
    candidates.push_back({std::max(0.0, -half_b - sq), i});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.entry < b.entry || (a.entry == b.entry && a.index < b.index);
  });

  std::optional<SceneHit> best;
  for (const Candidate& c : candidates) {
    if (best && c.entry > best->hit.t) break;
    const auto hit = intersect(scene_->primitives[c.index], ray, 1e-9, t_max);
    if (!hit) continue;
    if (!best || hit->t < best->hit.t || (hit->t == best->hit.t && c.index < best->primitive))
      best = SceneHit{*hit, c.index};
  }
  return best;
}

bool SceneIntersector::occluded(const Ray& ray, double t_min, double t_max) const {
  for (const auto& p : scene_->primitives) {
    if (intersect(p, ray, t_min, t_max)) return true;
  }
  return false;
}

void SceneConfig::validate() const {
  check_range(cars, "cars");
  check_range(pedestrians, "pedestrians");
  check_range(signs, "signs");
  check_range(interferers, "interferers");
  for (auto [r, name] : {std::pair{depth, "depth"}, {lateral, "lateral"},
                         {sign_offset, "sign_offset"}, {albedo, "albedo"},
                         {ambient_lux, "ambient_lux"}, {interferer_power, "interferer_power"},
                         {building_offset, "building_offset"},
                         {building_height, "building_height"}})
    check_range(r, name);
  if (depth.min < 3.0 || depth.max > 120.0)
    throw ContractError("scene config: entity depth range must lie within [3, 120] m");
  if (albedo.min < 0.0 || albedo.max > 1.0)
    throw ContractError("scene config: albedo range must lie within [0, 1]");
  if (ambient_lux.min < 0.0 || ambient_lux.max > 10.0)
    throw ContractError("scene config: ambient light range must lie within [0, 10] lux");
  if (interferer_power.min < 0.0) throw ContractError("scene config: negative interferer power");
  if (sign_offset.min <= 0.0 || building_offset.min <= 0.0 || building_height.min <= 0.0)
    throw ContractError("scene config: offsets and heights must be positive");
}

Scene generate_scene(std::uint64_t seed, const SceneConfig& config, int map_id) {
  config.validate();
  Scene scene;
  scene.seed = seed;
  scene.map_id = map_id;
  scene.primitives.push_back({GroundPlane{}, 0.35, "ground"});

  Rng light_rng(stream_seed(seed, static_cast<std::uint64_t>(map_id), "lighting"));
  scene.ambient_lux = draw(light_rng, config.ambient_lux);

  Placer placer;
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(map_id), "entities"));

  const int n_cars = draw(rng, config.cars);
  for (int i = 0; i < n_cars; ++i) {
    const auto f = placer.place(
        [&] {
          const double x = draw(rng, config.lateral), z = log_uniform(rng, config.depth);
          return Footprint{x - 0.9, x + 0.9, z, z + 4.2};
        },
        "car");
    const double height = rng.uniform(1.35, 1.75);
    scene.primitives.push_back(
        {Box{{f.x0, 0.0, f.z0}, {f.x1, height, f.z1}}, draw(rng, config.albedo), "car"});
  }

  const int n_peds = draw(rng, config.pedestrians);
  for (int i = 0; i < n_peds; ++i) {
    const auto f = placer.place(
        [&] {
          const double x = draw(rng, config.lateral), z = log_uniform(rng, config.depth);
          return Footprint{x - 0.25, x + 0.25, z - 0.25, z + 0.25};
        },
        "pedestrian");
    const double x = 0.5 * (f.x0 + f.x1), z = 0.5 * (f.z0 + f.z1);
    const double scale = rng.uniform(0.85, 1.1);
    const double albedo = draw(rng, config.albedo);
    scene.primitives.push_back(
        {Box{{x - 0.2, 0.0, z - 0.14}, {x + 0.2, 1.15 * scale, z + 0.14}}, albedo, "pedestrian"});
    scene.primitives.push_back({Sphere{{x, 1.32 * scale, z}, 0.21 * scale}, albedo, "pedestrian"});
    scene.primitives.push_back({Sphere{{x, 1.62 * scale, z}, 0.12 * scale}, albedo, "pedestrian"});
  }

  const int n_signs = draw(rng, config.signs);
  for (int i = 0; i < n_signs; ++i) {
    const auto f = placer.place(
        [&] {
          const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
          const double x = side * draw(rng, config.sign_offset);
          const double z = log_uniform(rng, config.depth);
          return Footprint{x - 0.4, x + 0.4, z - 0.1, z + 0.1};
        },
        "sign");
    const double x = 0.5 * (f.x0 + f.x1), z = 0.5 * (f.z0 + f.z1);
    const double pole = rng.uniform(2.0, 2.6);
    scene.primitives.push_back(
        {Box{{x - 0.04, 0.0, z - 0.04}, {x + 0.04, pole, z + 0.04}}, 0.3, "sign"});
    scene.primitives.push_back({Wall{{x - 0.4, z - 0.05}, {x + 0.4, z - 0.05}, pole, pole + 0.8},
                                draw(rng, config.albedo), "sign"});
  }

  if (config.buildings) {
    Rng build_rng(stream_seed(seed, static_cast<std::uint64_t>(map_id), "buildings"));
    const auto& sides = kFacades[((map_id % 5) + 5) % 5];
    for (int s = 0; s < 2; ++s) {
      if (!sides[s]) continue;
      const double x = (s == 0 ? -1.0 : 1.0) * draw(build_rng, config.building_offset);
      for (double z = 3.0; z < 150.0;) {
        const double length = build_rng.uniform(10.0, 40.0);
        scene.primitives.push_back({Wall{{x, z}, {x, std::min(z + length, 150.0)}, 0.0,
                                         draw(build_rng, config.building_height)},
                                    draw(build_rng, config.albedo), "building"});
        z += length + build_rng.uniform(0.0, 8.0);
      }
    }
  }

  Rng interferer_rng(stream_seed(seed, static_cast<std::uint64_t>(map_id), "interferers"));
  const int n_lights = draw(interferer_rng, config.interferers);
  for (int i = 0; i < n_lights; ++i) {
    const double x = interferer_rng.uniform(1.5, 5.0);
    const double z = log_uniform(interferer_rng, {std::max(20.0, config.depth.min),
                                                  std::max(20.0, config.depth.max)});
    scene.interferers.push_back({{x, 0.7, z}, draw(interferer_rng, config.interferer_power)});
  }
  return scene;
}

SurfaceBuffer raycast_depth(const Scene& scene, const Camera& cam, const PoseD& world_from_camera,
                            unsigned threads) {
  if (!cam.is_valid()) throw ContractError("raycast_depth: invalid camera intrinsics");
  if (!(world_from_camera.translation.y() > 0))
    throw ContractError("raycast_depth: camera must be above the ground plane");

  SurfaceBuffer out{DepthMap(cam.width, cam.height), NormalMap(cam.width, cam.height),
                    Image<int>::Constant(cam.height, cam.width, -1)};
  const SceneIntersector tracer(scene);
  const Mat3d& r = world_from_camera.rotation;
  parallel_for(
      static_cast<std::size_t>(cam.height),
      [&](std::size_t row) {
        const int v = static_cast<int>(row);
        for (int u = 0; u < cam.width; ++u) {
          const Vec3d d_cam = pixel_ray<double>(u, v, cam);
          const Ray ray{world_from_camera.translation, r * d_cam};
          const auto hit = tracer.nearest(ray);
          if (!hit) continue;
          out.depth.set(v, u, hit->hit.t * d_cam.z());
          out.normals(v, u) = r.transpose() * hit->hit.normal;
          out.primitive(v, u) = hit->primitive;
        }
      },
      threads);
  return out;
}

}  // namespace ledsim
