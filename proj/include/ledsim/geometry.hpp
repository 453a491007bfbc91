#pragma once

// Camera, rigid transform and headlight-projector models.
//
// Conventions used throughout the library: x right, y up, z forward (the
// optical axis). Image origin is the top-left pixel, u grows right and v grows
// down; integer pixel coordinates address pixel centers.

#include "ledsim/common.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <string>

namespace ledsim {

template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx{1};
  Scalar fy{1};
  Scalar cx{0};
  Scalar cy{0};
  int width{1};
  int height{1};

  bool is_valid() const {
    return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height &&
           width > 0 && height > 0;
  }

  /// Square pinhole camera with the given horizontal field of view, principal
  /// point at the image center.
  static CameraIntrinsics from_fov(int width, int height, Scalar hfov_deg) {
    using std::tan;
    const Scalar f = Scalar(0.5) * Scalar(width) / tan(Scalar(deg2rad(double(hfov_deg) / 2)));
    return {f, f, Scalar(0.5) * Scalar(width - 1), Scalar(0.5) * Scalar(height - 1), width,
            height};
  }

  template <typename Other>
  CameraIntrinsics<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), width, height};
  }
};

using Camera = CameraIntrinsics<double>;

/// Horizontal field of view of the 640 px center crop the default cameras see.
inline constexpr double kDefaultCropFovDeg = 45.0;

/// Default 320x320 evaluation camera (45 deg square crop).
inline Camera default_camera(int size = 320) {
  return Camera::from_fov(size, size, kDefaultCropFovDeg);
}

/// Full-resolution 1920x1080 camera whose 640x640 center crop matches
/// default_camera(640).
inline Camera full_resolution_camera() {
  const Camera crop = Camera::from_fov(640, 640, kDefaultCropFovDeg);
  return {crop.fx, crop.fy, 959.5, 539.5, 1920, 1080};
}

/// Pixel coordinates of a camera-frame point (z > 0).
template <typename Derived>
Vec2<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& p,
                                       const CameraIntrinsics<typename Derived::Scalar>& cam) {
  using Scalar = typename Derived::Scalar;
  const Scalar inv_z = Scalar(1) / p.z();
  return {cam.cx + cam.fx * p.x() * inv_z, cam.cy - cam.fy * p.y() * inv_z};
}

/// Camera-frame point at z = depth seen through pixel px.
template <typename Derived>
Vec3<typename Derived::Scalar> unproject(const Eigen::MatrixBase<Derived>& px,
                                         typename Derived::Scalar depth,
                                         const CameraIntrinsics<typename Derived::Scalar>& cam) {
  using Scalar = typename Derived::Scalar;
  if (!(depth > Scalar(0))) throw DomainError("unproject: depth must be positive");
  return {(px.x() - cam.cx) / cam.fx * depth, -(px.y() - cam.cy) / cam.fy * depth, depth};
}

/// Unit viewing ray through pixel (u, v), camera frame.
template <typename Scalar>
Vec3<Scalar> pixel_ray(Scalar u, Scalar v, const CameraIntrinsics<Scalar>& cam) {
  return Vec3<Scalar>((u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy, Scalar(1)).normalized();
}

/// Rigid transform mapping child-frame coordinates into the parent frame:
/// p_parent = rotation * p_child + translation.
template <typename Scalar>
struct Pose {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3<Scalar>& t) { return {Mat3<Scalar>::Identity(), t}; }

  /// Rotation about +x that tilts the forward axis downward by `deg`.
  static Pose pitched_down(Scalar deg, const Vec3<Scalar>& t = Vec3<Scalar>::Zero()) {
    const Mat3<Scalar> r =
        Eigen::AngleAxis<Scalar>(Scalar(deg2rad(double(deg))), Vec3<Scalar>::UnitX())
            .toRotationMatrix();
    return {r, t};
  }

  template <typename Derived>
  Vec3<Scalar> operator*(const Eigen::MatrixBase<Derived>& p) const {
    return rotation * p + translation;
  }

  /// this * other: apply other first.
  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose inverse() const {
    const Mat3<Scalar> rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    using std::abs;
    return (rotation * rotation.transpose() - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <=
               tol &&
           abs(rotation.determinant() - Scalar(1)) <= tol;
  }
};

using PoseD = Pose<double>;

/// Angular HD-headlight model: a cols x rows pixel grid spanning hfov x vfov
/// with uniform angular pitch per axis, tangent-plane direction mapping.
struct ProjectorModel {
  int cols{132};
  int rows{28};
  double hfov_deg{35.0};
  double vfov_deg{7.0};
  PoseD pose;  ///< projector frame -> camera frame
  double power{1.0};

  double pitch_h_deg() const { return hfov_deg / cols; }
  double pitch_v_deg() const { return vfov_deg / rows; }

  /// True iff (azimuth, elevation) lies in the closed frustum.
  bool in_frustum(double azimuth_deg, double elevation_deg) const {
    return std::abs(azimuth_deg) <= 0.5 * hfov_deg && std::abs(elevation_deg) <= 0.5 * vfov_deg;
  }

  void validate() const;
};

struct ProjectorAngles {
  double azimuth_deg;
  double elevation_deg;
};

/// Angle of the center of grid pixel (c, r). Throws DomainError if out of range.
ProjectorAngles projector_pixel_angles(int c, int r, const ProjectorModel& proj);

/// Unit direction (projector frame) through the center of grid pixel (c, r).
Vec3d projector_pixel_direction(int c, int r, const ProjectorModel& proj);

/// Unit direction (projector frame) for arbitrary angles.
Vec3d projector_direction(double azimuth_deg, double elevation_deg);

/// Raised by angles_in_projector for points with z <= 0.
struct PointBehindProjector : DomainError {
  using DomainError::DomainError;
};

/// Azimuth/elevation of a projector-frame point; inverse of projector_direction.
ProjectorAngles angles_in_projector(const Vec3d& point);

/// Camera + headlight assembly. The camera pose places the camera in the world
/// (scene) frame; the projector pose is relative to the camera.
struct Rig {
  Camera camera = default_camera();
  PoseD world_from_camera = PoseD::from_translation({0.0, 1.4, 0.0});
  ProjectorModel projector;

  PoseD world_from_projector() const { return world_from_camera * projector.pose; }

  /// Stable 64-bit hex digest of all rig parameters.
  std::string hash() const;
};

/// Headlight down-pitch of the default rig, degrees.
inline constexpr double kDefaultHeadlightPitchDeg = 2.0;

/// Default rig: camera 1.4 m above the road looking +z; left headlight at
/// (-1.2, -0.9, 0) from the camera (1.5 m separation), pitched down 2 deg.
Rig default_rig(int image_size = 320);

/// Same camera, projector collocated with the camera and unrotated.
Rig zero_baseline_rig(int image_size = 320);

}  // namespace ledsim
