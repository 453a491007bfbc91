#pragma once

// Headlight shading: projects the photometric pattern into a ray-cast scene
// with inverse-square falloff, Lambertian incidence, shadow-map occlusion,
// ambient light and interfering point lights.

#include "ledsim/depth_map.hpp"
#include "ledsim/geometry.hpp"
#include "ledsim/pattern.hpp"
#include "ledsim/scene.hpp"
#include "ledsim/shadow_map.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ledsim {

/// Dataset illumination codes: led (checkerboard), hb, hl, vl.
std::string illumination_code(PatternKind kind);
PatternKind parse_illumination(std::string_view code);

struct ShadingParams {
  double projector_power{1.0};  ///< multiplies ProjectorModel::power
  double ambient_gain{6.25e-5};  ///< irradiance per lux
  double gamma{2.2};
  /// A 10 m fronto-parallel albedo-0.5 wall under full pattern renders at
  /// ~0.8 before clamping.
  double exposure{160.0};
  double sky_albedo{0.2};
  double noise_sigma{0.0};  ///< additive Gaussian noise on display values, off by default

  void validate() const;
};

struct Lighting {
  double ambient_lux{0.0};
  std::vector<PointLight> interferers;  ///< camera frame
};

/// Scene lights expressed in the camera frame.
Lighting scene_lighting(const Scene& scene, const PoseD& world_from_camera);

struct FrameMeta {
  std::uint64_t seed{0};
  std::string illumination{"led"};
  double cell_deg{0.5};
  double ambient_lux{0.0};
  std::string rig_hash;
};

struct RenderedFrame {
  ImageD image;       ///< display intensity in [0, 1]
  ImageD irradiance;  ///< total irradiance before exposure/gamma
  DepthMap depth;     ///< ground truth
  FrameMeta meta;
};

/// Shades precomputed surfaces. `albedo` is per pixel; normals are camera frame.
RenderedFrame shade(const DepthMap& depth, const NormalMap& normals, const ImageD& albedo,
                    const Lighting& lighting, const Rig& rig, const Photometry& photometry,
                    const ShadowMap& shadow, const ShadingParams& params = {},
                    const FrameMeta& meta = {}, unsigned threads = 0);

/// Shades the ray-cast surfaces of `scene` (albedo from the hit primitives).
RenderedFrame shade(const SurfaceBuffer& surface, const Scene& scene, const Rig& rig,
                    const Photometry& photometry, const ShadowMap& shadow,
                    const ShadingParams& params = {}, const FrameMeta& meta = {},
                    unsigned threads = 0);

/// Camera-frame normals from central differences of the unprojected depth
/// map (one-sided at holes and borders), oriented toward the camera.
NormalMap normals_from_depth(const DepthMap& depth, const Camera& cam);

/// Ray cast + shadow map + shade in one call.
RenderedFrame render_frame(const Scene& scene, const Rig& rig, const Photometry& photometry,
                           const ShadingParams& params = {}, const ShadowMapOptions& shadow = {},
                           unsigned threads = 0);

/// Replicates the single channel to 8-bit RGB, row-major interleaved.
std::vector<std::uint8_t> to_rgb8(const ImageD& image);

// ---------------------------------------------------------------------------
// Pattern-geometry measurements

struct MeasurementError : DomainError {
  using DomainError::DomainError;
};

struct CellSizeOptions {
  int window_px{6};             ///< half-width of the local mid-range window
  double min_rel_contrast{0.2}; ///< relative to the row's strongest contrast
  double min_abs_contrast{0.02}; ///< display units
  /// Only transitions within this angle of the optical axis count; off-axis
  /// cells on a flat wall widen as 1/cos^2 of the angle.
  double axis_window_deg{5.0};
};

/// Metric side of checkerboard cells on a fronto-parallel surface near the
/// optical axis: finds the image row with the most on/off transitions there,
/// locates them to sub-pixel precision and converts their spread to meters
/// through the depth map.
double measure_cell_size(const RenderedFrame& frame, const Camera& cam,
                         const CellSizeOptions& options = {});

/// Image-space quadrilateral of one projected checkerboard cell. Corners are
/// ordered (near-left, near-right, far-right, far-left), where "far" is the
/// upper-elevation edge.
struct ProjectedCell {
  int col;  ///< floor(azimuth / cell)
  int row;  ///< floor(elevation / cell)
  std::array<Vec2d, 4> corners;
  std::array<double, 4> depth;  ///< camera z of each corner

  double near_edge_px() const { return (corners[1] - corners[0]).norm(); }
  double far_edge_px() const { return (corners[2] - corners[3]).norm(); }
  /// Interior angle at corner k, degrees.
  double corner_angle_deg(int k) const;
};

/// Projects every checkerboard cell of the frustum through the scene onto the
/// camera image. A cell is returned only if all four corners land on the same
/// primitive, are lit, visible from the camera and inside the image.
std::vector<ProjectedCell> project_cells(const Scene& scene, const Rig& rig, double cell_deg);

}  // namespace ledsim
