#include "ledsim/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace ledsim {

void ProjectorModel::validate() const {
  if (cols <= 0 || rows <= 0) throw ContractError("projector grid must be non-empty");
  if (!(hfov_deg > 0 && hfov_deg < 180 && vfov_deg > 0 && vfov_deg < 180))
    throw ContractError("projector field of view must lie in (0, 180) degrees");
  if (!(power >= 0)) throw ContractError("projector power must be non-negative");
  if (!pose.is_valid()) throw ContractError("projector pose rotation is not a proper rotation");
}

ProjectorAngles projector_pixel_angles(int c, int r, const ProjectorModel& proj) {
  if (c < 0 || c >= proj.cols || r < 0 || r >= proj.rows)
    throw DomainError("projector pixel (" + std::to_string(c) + ", " + std::to_string(r) +
                      ") outside the " + std::to_string(proj.cols) + "x" +
                      std::to_string(proj.rows) + " grid");
  return {((c + 0.5) / proj.cols - 0.5) * proj.hfov_deg,
          ((r + 0.5) / proj.rows - 0.5) * proj.vfov_deg};
}

Vec3d projector_direction(double azimuth_deg, double elevation_deg) {
  return Vec3d(std::tan(deg2rad(azimuth_deg)), std::tan(deg2rad(elevation_deg)), 1.0)
      .normalized();
}

Vec3d projector_pixel_direction(int c, int r, const ProjectorModel& proj) {
  const auto a = projector_pixel_angles(c, r, proj);
  return projector_direction(a.azimuth_deg, a.elevation_deg);
}

ProjectorAngles angles_in_projector(const Vec3d& point) {
  if (!(point.z() > 0)) throw PointBehindProjector("point is not in front of the projector");
  return {rad2deg(std::atan(point.x() / point.z())), rad2deg(std::atan(point.y() / point.z()))};
}

std::string Rig::hash() const {
  std::string s;
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    s += buf;
  };
  put(camera.fx), put(camera.fy), put(camera.cx), put(camera.cy);
  put(camera.width), put(camera.height);
  for (const PoseD* p : {&world_from_camera, &projector.pose}) {
    for (int i = 0; i < 9; ++i) put(p->rotation(i / 3, i % 3));
    for (int i = 0; i < 3; ++i) put(p->translation(i));
  }
  put(projector.cols), put(projector.rows), put(projector.hfov_deg), put(projector.vfov_deg);
  put(projector.power);
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

Rig default_rig(int image_size) {
  Rig rig;
  rig.camera = default_camera(image_size);
  rig.projector.pose = PoseD::pitched_down(kDefaultHeadlightPitchDeg, {-1.2, -0.9, 0.0});
  return rig;
}

Rig zero_baseline_rig(int image_size) {
  Rig rig;
  rig.camera = default_camera(image_size);
  rig.projector.pose = PoseD::identity();
  return rig;
}

}  // namespace ledsim
