#include "streetinv/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

namespace streetinv {

namespace {

bool finite3(const Vec3& v) { return v.allFinite(); }

}  // namespace

void validate(const CameraPose& pose) {
  if (!finite3(pose.position) || !std::isfinite(pose.heading) ||
      !std::isfinite(pose.pitch) || !std::isfinite(pose.roll)) {
    std::ostringstream msg;
    msg << "pose for frame " << pose.frame_id << " has non-finite values";
    throw DataError(msg.str());
  }
}

void validate(const Detection2D& det) {
  std::ostringstream msg;
  if (!(det.image_w > 0.0) || !(det.image_h > 0.0)) {
    msg << "detection in frame " << det.frame_id
        << " has non-positive image size";
  } else if (!(det.center_x >= 0.0 && det.center_x <= det.image_w) ||
             !(det.center_y >= 0.0 && det.center_y <= det.image_h)) {
    msg << "detection in frame " << det.frame_id
        << " has center outside the image";
  } else if (!(det.box_w > 0.0) || !(det.box_h > 0.0)) {
    msg << "detection in frame " << det.frame_id << " has empty box";
  } else if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
    msg << "detection in frame " << det.frame_id
        << " has confidence outside [0,1]";
  } else if (det.category.empty()) {
    msg << "detection in frame " << det.frame_id << " has no category";
  } else {
    return;
  }
  throw DataError(msg.str());
}

ViewAngles pixel_to_angles(const Detection2D& det) {
  if (det.image_w == 0.0 || det.image_h == 0.0) {
    throw std::invalid_argument("pixel_to_angles: zero image dimension");
  }
  constexpr double kPi = std::numbers::pi;
  ViewAngles angles;
  angles.azimuth = (det.center_x / det.image_w) * 2.0 * kPi - kPi;
  angles.elevation = (1.0 - det.center_y / det.image_h) * kPi - kPi / 2.0;
  return angles;
}

Vec3 angles_to_camera_dir(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

Mat3 rotation_from_euler(double heading, double pitch, double roll) {
  const Mat3 rz = Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(pitch, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rx = Eigen::AngleAxisd(roll, Vec3::UnitX()).toRotationMatrix();
  return rz * ry * rx;
}

Observation build_observation(const Detection2D& det, const CameraPose& pose,
                              ObsId obs_id) {
  if (det.frame_id != pose.frame_id) {
    std::ostringstream msg;
    msg << "detection frame " << det.frame_id << " does not match pose frame "
        << pose.frame_id;
    throw DataError(msg.str());
  }
  const ViewAngles angles = pixel_to_angles(det);
  const Vec3 cam = angles_to_camera_dir(angles.azimuth, angles.elevation);
  const Vec3 world =
      rotation_from_euler(pose.heading, pose.pitch, pose.roll) * cam;

  Observation obs;
  obs.obs_id = obs_id;
  obs.frame_id = det.frame_id;
  obs.category = det.category;
  obs.exposure = pose.position;
  obs.direction = world.normalized();
  obs.box_w_norm = det.box_w / det.image_w;
  obs.box_h_norm = det.box_h / det.image_h;
  return obs;
}

}  // namespace streetinv
