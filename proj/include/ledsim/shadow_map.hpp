#pragma once

// Projector-viewpoint shadow maps. The pattern only reaches a scene point if
// nothing lies between it and the headlight.

#include "ledsim/depth_map.hpp"
#include "ledsim/geometry.hpp"
#include "ledsim/scene.hpp"

namespace ledsim {

struct ShadowMapOptions {
  int factor{4};       ///< texels per native projector pixel, per axis
  double bias{0.02};   ///< meters
  unsigned threads{0};
};

/// Range (meters from the projector center) to the nearest surface along each
/// texel ray. Texels share the projector's tangent-plane angular layout at
/// `factor` times the native resolution; +infinity where nothing is hit.
struct ShadowMap {
  Image<double> range;  ///< rows x cols = (factor*proj.rows) x (factor*proj.cols)
  int factor{4};
  double bias{0.02};
  double hfov_deg{35.0};
  double vfov_deg{7.0};

  int cols() const { return static_cast<int>(range.cols()); }
  int rows() const { return static_cast<int>(range.rows()); }

  double texel_azimuth_deg(int i) const { return ((i + 0.5) / cols() - 0.5) * hfov_deg; }
  double texel_elevation_deg(int j) const { return ((j + 0.5) / rows() - 0.5) * vfov_deg; }

  /// Occluder range along an arbitrary in-frustum direction. Inverse depth is
  /// interpolated bilinearly in tangent space between the four surrounding
  /// texels, which reproduces planar occluders exactly.
  double sample_range(double azimuth_deg, double elevation_deg) const;

  /// Range along a direction to the farthest of the four surrounding texel
  /// surfaces. Used for the lit test so that creases and grazing surfaces,
  /// where interpolation overshoots, do not shadow themselves.
  double farthest_range(double azimuth_deg, double elevation_deg) const;
};

ShadowMap render_shadow_map(const Scene& scene, const ProjectorModel& proj,
                            const PoseD& world_from_camera = PoseD::from_translation({0, 1.4, 0}),
                            const ShadowMapOptions& options = {});

/// Shadow map of the surface described by a camera depth map: the depth image
/// is triangulated (quads across depth discontinuities larger than
/// `max_relative_step` are dropped) and rasterized from the projector.
ShadowMap render_shadow_map(const DepthMap& depth, const Camera& cam, const ProjectorModel& proj,
                            const ShadowMapOptions& options = {},
                            double max_relative_step = 0.05);

/// True iff the camera-frame point is inside the projector frustum and no
/// farther than the surrounding shadow texels' range plus bias.
bool is_lit(const Vec3d& point_camera, const ProjectorModel& proj, const ShadowMap& shadow);

}  // namespace ledsim
